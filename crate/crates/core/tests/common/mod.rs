//! Reference problems with independently computable optima.
#![allow(dead_code)]

use iptm::models::{euler_step, OperatingPoint, PowerInputs, VehicleState};
use iptm::scenario::nominal_scenario;
use iptm::solver::{CsrMatrix, EvalError, Nlp};
use nalgebra::{DMatrix, DVector};

/// `min z₁² + z₂²  s.t.  z₁ + z₂ = 1`; optimum (½, ½) with multiplier −1.
pub struct ToyQp {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl ToyQp {
    pub fn new() -> Self {
        Self { lo: vec![f64::NEG_INFINITY; 2], hi: vec![f64::INFINITY; 2] }
    }
}

impl Nlp for ToyQp {
    fn dim(&self) -> usize {
        2
    }
    fn n_eq(&self) -> usize {
        1
    }
    fn n_ineq(&self) -> usize {
        0
    }
    fn lower_bounds(&self) -> &[f64] {
        &self.lo
    }
    fn upper_bounds(&self) -> &[f64] {
        &self.hi
    }
    fn objective(&self, z: &[f64]) -> Result<f64, EvalError> {
        Ok(z[0] * z[0] + z[1] * z[1])
    }
    fn objective_gradient(&self, z: &[f64], g: &mut [f64]) -> Result<(), EvalError> {
        g[0] = 2.0 * z[0];
        g[1] = 2.0 * z[1];
        Ok(())
    }
    fn lagrangian_hessian(
        &self,
        _: &[f64],
        sigma: f64,
        _: &[f64],
        _: &[f64],
        out: &mut Vec<(usize, usize, f64)>,
    ) -> Result<(), EvalError> {
        out.extend([(0, 0, 2.0 * sigma), (1, 1, 2.0 * sigma)]);
        Ok(())
    }
    fn constraints(&self, z: &[f64], eq: &mut [f64], _: &mut [f64]) -> Result<(), EvalError> {
        eq[0] = z[0] + z[1] - 1.0;
        Ok(())
    }
    fn jacobians(&self, _: &[f64]) -> Result<(CsrMatrix, CsrMatrix), EvalError> {
        let mut jc = CsrMatrix::new(2);
        jc.push_row(&[(0, 1.0), (1, 1.0)]);
        Ok((jc, CsrMatrix::new(2)))
    }
}

/// Minimum-energy transfer of a discrete double integrator from rest at 0
/// to rest at 1 in unit time, fully transcribed:
/// `z = [u(0..N) | p(0..=N) | v(0..=N)]`, `min Σ u²`.
pub struct DoubleIntegrator {
    pub n: usize,
    dt: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DoubleIntegrator {
    pub fn new(n: usize) -> Self {
        let dim = 3 * n + 2;
        let mut lo = vec![f64::NEG_INFINITY; dim];
        let mut hi = vec![f64::INFINITY; dim];
        let (p, v) = (n, 2 * n + 1);
        for (j, value) in [(p, 0.0), (p + n, 1.0), (v, 0.0), (v + n, 0.0)] {
            lo[j] = value;
            hi[j] = value;
        }
        Self { n, dt: 1.0 / n as f64, lo, hi }
    }

    fn u(&self, k: usize) -> usize {
        k
    }
    fn p(&self, k: usize) -> usize {
        self.n + k
    }
    fn v(&self, k: usize) -> usize {
        2 * self.n + 1 + k
    }

    /// Optimal objective from the KKT system of the same transcription,
    /// with the pinned endpoints as extra equality rows, solved by LU.
    pub fn kkt_oracle(&self) -> (f64, Vec<f64>) {
        let dim = self.dim();
        let (jc, _) = self.jacobians(&vec![0.0; dim]).unwrap();
        let mut rows = jc.to_dense();
        let mut rhs = vec![0.0; rows.len()];
        for j in 0..dim {
            if self.lo[j] == self.hi[j] {
                let mut r = vec![0.0; dim];
                r[j] = 1.0;
                rows.push(r);
                rhs.push(self.lo[j]);
            }
        }
        let m = rows.len();
        let mut kkt = DMatrix::<f64>::zeros(dim + m, dim + m);
        for k in 0..self.n {
            kkt[(self.u(k), self.u(k))] = 2.0;
        }
        for (i, r) in rows.iter().enumerate() {
            for (j, a) in r.iter().enumerate() {
                kkt[(dim + i, j)] = *a;
                kkt[(j, dim + i)] = *a;
            }
        }
        let mut b = DVector::<f64>::zeros(dim + m);
        for (i, v) in rhs.iter().enumerate() {
            b[dim + i] = *v;
        }
        let sol = kkt.lu().solve(&b).expect("KKT matrix is nonsingular");
        let z: Vec<f64> = sol.iter().take(dim).copied().collect();
        (self.objective(&z).unwrap(), z)
    }
}

impl Nlp for DoubleIntegrator {
    fn dim(&self) -> usize {
        3 * self.n + 2
    }
    fn n_eq(&self) -> usize {
        2 * self.n
    }
    fn n_ineq(&self) -> usize {
        0
    }
    fn lower_bounds(&self) -> &[f64] {
        &self.lo
    }
    fn upper_bounds(&self) -> &[f64] {
        &self.hi
    }
    fn objective(&self, z: &[f64]) -> Result<f64, EvalError> {
        Ok(z[..self.n].iter().map(|u| u * u).sum())
    }
    fn objective_gradient(&self, z: &[f64], g: &mut [f64]) -> Result<(), EvalError> {
        g.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..self.n {
            g[k] = 2.0 * z[k];
        }
        Ok(())
    }
    fn lagrangian_hessian(
        &self,
        _: &[f64],
        sigma: f64,
        _: &[f64],
        _: &[f64],
        out: &mut Vec<(usize, usize, f64)>,
    ) -> Result<(), EvalError> {
        out.extend((0..self.n).map(|k| (k, k, 2.0 * sigma)));
        Ok(())
    }
    fn constraints(&self, z: &[f64], eq: &mut [f64], _: &mut [f64]) -> Result<(), EvalError> {
        let dt = self.dt;
        for k in 0..self.n {
            let (u, p, v) = (z[self.u(k)], z[self.p(k)], z[self.v(k)]);
            eq[2 * k] = z[self.p(k + 1)] - p - dt * v - 0.5 * dt * dt * u;
            eq[2 * k + 1] = z[self.v(k + 1)] - v - dt * u;
        }
        Ok(())
    }
    fn jacobians(&self, _: &[f64]) -> Result<(CsrMatrix, CsrMatrix), EvalError> {
        let dt = self.dt;
        let mut jc = CsrMatrix::new(self.dim());
        for k in 0..self.n {
            jc.push_row(&[(self.p(k + 1), 1.0), (self.p(k), -1.0), (self.v(k), -dt), (self.u(k), -0.5 * dt * dt)]);
            jc.push_row(&[(self.v(k + 1), 1.0), (self.v(k), -1.0), (self.u(k), -dt)]);
        }
        Ok((jc, CsrMatrix::new(self.dim())))
    }
}

/// Global error at 1200 s of Euler on the pure-convection cabin with constant
/// loads, against the closed-form exponential approach to equilibrium.
pub fn euler_cabin_error(dt: f64) -> f64 {
    let p = nominal_scenario().unwrap().params();
    let cab = &p.cabin;
    let (ambient, q_cool) = (38.0, 600.0);
    let op = OperatingPoint::charging(ambient);
    let inputs = PowerInputs { q_cab_cool_w: q_cool, ..Default::default() };
    let b = cab.convection_conductance_w_per_k / cab.heat_capacity_j_per_k();
    let t_inf = ambient + (cab.solar_load_w + cab.ventilation_load_w - q_cool) / cab.convection_conductance_w_per_k;
    let (t0, horizon) = (25.0, 1200.0);
    let exact = t_inf + (t0 - t_inf) * (-b * horizon).exp();

    let mut s = VehicleState { soc: 0.5, t_bat_c: 30.0, t_cab_c: t0, clock_s: 0.0 };
    for _ in 0..(horizon / dt).round() as usize {
        s = euler_step(&s, &inputs, dt, &p, op).unwrap();
    }
    (s.t_cab_c - exact).abs()
}
