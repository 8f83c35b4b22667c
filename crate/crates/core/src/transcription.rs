//! Direct transcription of the two-phase cooling/charging problem into a
//! finite-dimensional NLP.
//!
//! A horizon has `n1` driving samples of fixed length `dt1` followed, when
//! the charger is in view, by `n2` charging samples whose lengths `Δt₂(i)`
//! are decision variables. States are kept at every knot and tied together
//! by forward-Euler defect equalities.
//!
//! Decision vector layout, with `K = n1 + n2` samples (`n2 = 0` when the
//! charging phase is out of the horizon):
//!
//! ```text
//! [ q_bat(0..K) | q_cab(0..K) | p_chg(0..n2) | dt2(0..n2)
//!   | soc(0..=K) | t_bat(0..=K) | t_cab(0..=K) | eps_bat | eps_cab ]
//! ```

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{self, ModelError, OperatingPoint, PowerInputs, VehicleParams, VehicleState};
use crate::solver::{CsrMatrix, EvalError, Nlp};

const SOC_SCALE: f64 = 0.1;
const REFERENCE_STEP_S: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranscriptionError {
    #[error("infeasible bounds: {0}")]
    InfeasibleBounds(String),
    #[error("invalid horizon: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Phase structure of one horizon problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonSpec {
    pub n1: usize,
    pub dt1_s: f64,
    pub n2: usize,
    pub dt2_max_s: f64,
    /// Traction power for each driving sample (zero while waiting).
    pub traction_preview_w: Vec<f64>,
    pub soc_targ: f64,
    pub charging_in_horizon: bool,
}

impl HorizonSpec {
    /// Number of charging samples actually present in the problem.
    pub fn charging_samples(&self) -> usize {
        if self.charging_in_horizon {
            self.n2
        } else {
            0
        }
    }

    pub fn samples(&self) -> usize {
        self.n1 + self.charging_samples()
    }

    fn validate(&self) -> Result<(), TranscriptionError> {
        let bad = |m: String| Err(TranscriptionError::InvalidSpec(m));
        if self.traction_preview_w.len() != self.n1 {
            return bad(format!(
                "traction preview has {} entries for {} driving samples",
                self.traction_preview_w.len(),
                self.n1
            ));
        }
        if self.n1 > 0 && !(self.dt1_s > 0.0 && self.dt1_s.is_finite()) {
            return bad(format!("dt1 must be positive, got {}", self.dt1_s));
        }
        if self.charging_in_horizon {
            if self.n2 == 0 {
                return bad("n2 must be at least 1 when charging is in the horizon".into());
            }
            if !(self.dt2_max_s > 0.0 && self.dt2_max_s.is_finite()) {
                return bad(format!("dt2_max must be positive, got {}", self.dt2_max_s));
            }
        }
        if self.samples() == 0 {
            return bad("horizon has no samples".into());
        }
        if self.traction_preview_w.iter().any(|p| !p.is_finite()) {
            return bad("traction preview contains non-finite values".into());
        }
        Ok(())
    }
}

/// Cost weights of one horizon problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Hard upper bound on the predicted charging time, seconds.
    pub budget_t_chg_s: Option<f64>,
    /// Power unit of the cooling cost term, in watts (1 = W, 1000 = kW).
    pub power_unit_w: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self { alpha: 0.0, beta1: 0.0, beta2: 0.0, budget_t_chg_s: None, power_unit_w: 1.0 }
    }
}

/// State box used by the controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateBounds {
    pub soc_min: f64,
    pub soc_max: f64,
    pub t_bat_min_c: f64,
    pub t_bat_max_c: f64,
    pub t_cab_min_c: f64,
    pub t_cab_max_c: f64,
}

impl Default for StateBounds {
    fn default() -> Self {
        Self { soc_min: 0.0, soc_max: 1.0, t_bat_min_c: 15.0, t_bat_max_c: 35.0, t_cab_min_c: 23.0, t_cab_max_c: 25.0 }
    }
}

/// Physical context shared by every horizon problem of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemContext {
    pub params: VehicleParams,
    pub ambient_c: f64,
    pub bounds: StateBounds,
    pub p_chg_max_w: f64,
}

/// Index ranges of each block in the decision vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Layout {
    pub n1: usize,
    pub n2: usize,
    pub q_bat: Range<usize>,
    pub q_cab: Range<usize>,
    pub p_chg: Range<usize>,
    pub dt2: Range<usize>,
    pub soc: Range<usize>,
    pub t_bat: Range<usize>,
    pub t_cab: Range<usize>,
    pub eps_bat: usize,
    pub eps_cab: usize,
    pub dim: usize,
}

impl Layout {
    pub fn new(n1: usize, n2: usize) -> Self {
        let k = n1 + n2;
        let mut next = 0;
        let mut take = |len: usize| {
            let r = next..next + len;
            next += len;
            r
        };
        let q_bat = take(k);
        let q_cab = take(k);
        let p_chg = take(n2);
        let dt2 = take(n2);
        let soc = take(k + 1);
        let t_bat = take(k + 1);
        let t_cab = take(k + 1);
        let eps_bat = take(1).start;
        let eps_cab = take(1).start;
        Self { n1, n2, q_bat, q_cab, p_chg, dt2, soc, t_bat, t_cab, eps_bat, eps_cab, dim: next }
    }

    pub fn samples(&self) -> usize {
        self.n1 + self.n2
    }

    /// Human-readable name of decision variable `j`, e.g. `dt2[3]`.
    pub fn describe(&self, j: usize) -> String {
        let blocks = [
            ("q_bat", &self.q_bat),
            ("q_cab", &self.q_cab),
            ("p_chg", &self.p_chg),
            ("dt2", &self.dt2),
            ("soc", &self.soc),
            ("t_bat", &self.t_bat),
            ("t_cab", &self.t_cab),
        ];
        for (name, r) in blocks {
            if r.contains(&j) {
                return format!("{name}[{}]", j - r.start);
            }
        }
        match j {
            j if j == self.eps_bat => "eps_bat".into(),
            j if j == self.eps_cab => "eps_cab".into(),
            _ => format!("out_of_range[{j}]"),
        }
    }

    pub fn knot_state(&self, z: &[f64], k: usize) -> (f64, f64, f64) {
        (z[self.soc.start + k], z[self.t_bat.start + k], z[self.t_cab.start + k])
    }
}

/// Sensitivities of the three state rates at one sample.
struct SampleModel {
    step: f64,
    rates: [f64; 3],
    /// ∂(soc, t_bat rate)/∂P_bat.
    d_power: [f64; 2],
    /// ∂²(soc, t_bat rate)/∂P_bat².
    d2_power: [f64; 2],
    d_t_bat: f64,
    d_t_cab: f64,
    inv_heat_bat: f64,
    inv_heat_cab: f64,
}

/// One horizon problem, immutable after [`build_nlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct NlpProblem {
    spec: HorizonSpec,
    x0: VehicleState,
    ctx: ProblemContext,
    weights: Weights,
    layout: Layout,
    lower: Vec<f64>,
    upper: Vec<f64>,
    n_eq: usize,
    n_ineq: usize,
}

pub fn build_nlp(
    spec: &HorizonSpec,
    x0: &VehicleState,
    ctx: &ProblemContext,
    weights: &Weights,
) -> Result<NlpProblem, TranscriptionError> {
    spec.validate()?;
    let b = &ctx.bounds;
    let ordered = [
        ("soc bounds", b.soc_min, b.soc_max),
        ("battery temperature bounds", b.t_bat_min_c, b.t_bat_max_c),
        ("cabin temperature bounds", b.t_cab_min_c, b.t_cab_max_c),
    ];
    for (name, lo, hi) in ordered {
        if !(lo <= hi) {
            return Err(TranscriptionError::InfeasibleBounds(format!("{name}: [{lo}, {hi}]")));
        }
    }
    if spec.charging_in_horizon && !(b.soc_min <= spec.soc_targ && spec.soc_targ <= b.soc_max) {
        return Err(TranscriptionError::InfeasibleBounds(format!(
            "target soc {} outside [{}, {}]",
            spec.soc_targ, b.soc_min, b.soc_max
        )));
    }
    if !(ctx.p_chg_max_w >= 0.0) {
        return Err(TranscriptionError::InfeasibleBounds(format!("charger limit {} W", ctx.p_chg_max_w)));
    }
    if let Some(budget) = weights.budget_t_chg_s {
        if !(budget >= 0.0) {
            return Err(TranscriptionError::InfeasibleBounds(format!("charging budget {budget} s")));
        }
    }
    let w = weights;
    if [w.alpha, w.beta1, w.beta2].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(TranscriptionError::InvalidSpec("weights must be finite and nonnegative".into()));
    }
    if !(w.power_unit_w > 0.0 && w.power_unit_w.is_finite()) {
        return Err(TranscriptionError::InvalidSpec("power unit must be positive".into()));
    }
    ctx.params.cooling.validate()?;

    let n2 = spec.charging_samples();
    let layout = Layout::new(spec.n1, n2);
    let k = layout.samples();
    let cool = &ctx.params.cooling;
    let mut lower = vec![0.0; layout.dim];
    let mut upper = vec![f64::INFINITY; layout.dim];
    let mut set = |r: Range<usize>, lo: f64, hi: f64| {
        for j in r {
            lower[j] = lo;
            upper[j] = hi;
        }
    };
    set(layout.q_bat.clone(), 0.0, cool.q_bat_max_w);
    set(layout.q_cab.clone(), 0.0, cool.q_cab_max_w);
    set(layout.p_chg.clone(), 0.0, ctx.p_chg_max_w);
    set(layout.dt2.clone(), 0.0, spec.dt2_max_s);
    set(layout.soc.start + 1..layout.soc.end, b.soc_min, b.soc_max);
    set(layout.t_bat.start + 1..layout.t_bat.end, b.t_bat_min_c, f64::INFINITY);
    set(layout.t_cab.start + 1..layout.t_cab.end, b.t_cab_min_c, f64::INFINITY);
    set(layout.soc.start..layout.soc.start + 1, x0.soc, x0.soc);
    set(layout.t_bat.start..layout.t_bat.start + 1, x0.t_bat_c, x0.t_bat_c);
    set(layout.t_cab.start..layout.t_cab.start + 1, x0.t_cab_c, x0.t_cab_c);
    set(layout.eps_bat..layout.eps_cab + 1, 0.0, f64::INFINITY);

    let n_eq = 3 * k + usize::from(spec.charging_in_horizon);
    let n_ineq = 3 * k + 2 + usize::from(n2 > 0 && weights.budget_t_chg_s.is_some());
    Ok(NlpProblem {
        spec: spec.clone(),
        x0: *x0,
        ctx: ctx.clone(),
        weights: *weights,
        layout,
        lower,
        upper,
        n_eq,
        n_ineq,
    })
}

impl NlpProblem {
    pub fn spec(&self) -> &HorizonSpec {
        &self.spec
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn context(&self) -> &ProblemContext {
        &self.ctx
    }

    pub fn initial_state(&self) -> &VehicleState {
        &self.x0
    }

    fn is_charging(&self, i: usize) -> bool {
        i >= self.layout.n1
    }

    fn operating_point(&self, i: usize) -> OperatingPoint {
        if self.is_charging(i) {
            OperatingPoint::charging(self.ctx.ambient_c)
        } else {
            OperatingPoint::driving(self.ctx.ambient_c)
        }
    }

    /// Length of sample `i` in seconds.
    pub fn step_length(&self, z: &[f64], i: usize) -> f64 {
        if self.is_charging(i) {
            z[self.layout.dt2.start + i - self.layout.n1]
        } else {
            self.spec.dt1_s
        }
    }

    /// Actuation and exogenous power of sample `i`.
    pub fn sample_inputs(&self, z: &[f64], i: usize) -> PowerInputs {
        let l = &self.layout;
        let charging = self.is_charging(i);
        PowerInputs {
            q_bat_cool_w: z[l.q_bat.start + i],
            q_cab_cool_w: z[l.q_cab.start + i],
            p_charge_w: if charging { z[l.p_chg.start + i - l.n1] } else { 0.0 },
            p_traction_w: if charging { 0.0 } else { self.spec.traction_preview_w[i] },
            p_aux_base_w: self.ctx.params.vehicle.aux_base_w,
        }
    }

    pub fn first_inputs(&self, z: &[f64]) -> PowerInputs {
        self.sample_inputs(z, 0)
    }

    pub fn knot(&self, z: &[f64], k: usize) -> VehicleState {
        let (soc, t_bat_c, t_cab_c) = self.layout.knot_state(z, k);
        let mut clock_s = self.x0.clock_s;
        for i in 0..k {
            clock_s += self.step_length(z, i);
        }
        VehicleState { soc, t_bat_c, t_cab_c, clock_s }
    }

    /// Σ Δt₂(i), or `None` when the charging phase is not in the horizon.
    pub fn predicted_t_chg(&self, z: &[f64]) -> Option<f64> {
        self.spec.charging_in_horizon.then(|| z[self.layout.dt2.clone()].iter().sum())
    }

    fn sample_model(&self, z: &[f64], i: usize) -> Result<SampleModel, ModelError> {
        let params = &self.ctx.params;
        let bp = &params.battery;
        let op = self.operating_point(i);
        let inputs = self.sample_inputs(z, i);
        let (_, t_bat, t_cab) = self.layout.knot_state(z, i);
        let p_bat = models::battery_power(&inputs, &params.cooling, op.charging);
        let current = models::battery_current(p_bat, bp)?;
        let slope = models::battery_current_slope(p_bat, bp)?;
        let curvature = 2.0 * bp.internal_resistance_ohm * slope.powi(3);
        let q_gen = models::battery_heat_gen(current, bp);
        let q_amb = models::battery_ambient_exchange(t_bat, op.ambient_c, bp);
        let inv_heat_bat = 1.0 / bp.heat_capacity_j_per_k();
        let inv_heat_cab = 1.0 / params.cabin.heat_capacity_j_per_k();
        Ok(SampleModel {
            step: self.step_length(z, i),
            rates: [
                -current / bp.charge_capacity_c,
                models::battery_temp_rate(q_gen, q_amb, inputs.q_bat_cool_w, bp),
                models::cabin_temp_rate(t_cab, op.ambient_c, inputs.q_cab_cool_w, &params.cabin, op.occupied),
            ],
            d_power: [-slope / bp.charge_capacity_c, 2.0 * current * bp.internal_resistance_ohm * slope * inv_heat_bat],
            d2_power: [
                -curvature / bp.charge_capacity_c,
                2.0 * bp.internal_resistance_ohm * (slope * slope + current * curvature) * inv_heat_bat,
            ],
            d_t_bat: -bp.ambient_exchange_w_per_k * inv_heat_bat,
            d_t_cab: -params.cabin.convection_conductance_w_per_k * inv_heat_cab,
            inv_heat_bat,
            inv_heat_cab,
        })
    }

    fn cost_factor(&self) -> f64 {
        let u = self.weights.power_unit_w;
        1.0 / (u * u * self.ctx.params.cooling.cop)
    }

    pub fn eval_objective(&self, z: &[f64]) -> f64 {
        let l = &self.layout;
        let kappa = self.cost_factor();
        let mut f = 0.0;
        for i in 0..l.samples() {
            let (qb, qc) = (z[l.q_bat.start + i], z[l.q_cab.start + i]);
            let dt = self.step_length(z, i);
            f += (qb * qb + qc * qc) * kappa * dt;
            if self.is_charging(i) {
                f += self.weights.alpha * dt * dt;
            }
        }
        let (e1, e2) = (z[l.eps_bat], z[l.eps_cab]);
        f + self.weights.beta1 * e1 * e1 + self.weights.beta2 * e2 * e2
    }

    pub fn eval_objective_gradient(&self, z: &[f64], grad: &mut [f64]) {
        let l = &self.layout;
        let kappa = self.cost_factor();
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..l.samples() {
            let (qb, qc) = (z[l.q_bat.start + i], z[l.q_cab.start + i]);
            let dt = self.step_length(z, i);
            grad[l.q_bat.start + i] = 2.0 * qb * kappa * dt;
            grad[l.q_cab.start + i] = 2.0 * qc * kappa * dt;
            if self.is_charging(i) {
                grad[l.dt2.start + i - l.n1] = (qb * qb + qc * qc) * kappa + 2.0 * self.weights.alpha * dt;
            }
        }
        grad[l.eps_bat] = 2.0 * self.weights.beta1 * z[l.eps_bat];
        grad[l.eps_cab] = 2.0 * self.weights.beta2 * z[l.eps_cab];
    }

    /// Equality residuals (Euler defects, then the terminal SOC row) and
    /// inequality residuals `g(z) ≤ 0`.
    pub fn eval_constraints(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
        let mut eq = vec![0.0; self.n_eq];
        let mut ineq = vec![0.0; self.n_ineq];
        self.fill_constraints(z, &mut eq, &mut ineq)?;
        Ok((eq, ineq))
    }

    fn fill_constraints(&self, z: &[f64], eq: &mut [f64], ineq: &mut [f64]) -> Result<(), ModelError> {
        let l = &self.layout;
        let k = l.samples();
        for i in 0..k {
            let m = self.sample_model(z, i)?;
            let now = l.knot_state(z, i);
            let next = l.knot_state(z, i + 1);
            eq[3 * i] = next.0 - now.0 - m.rates[0] * m.step;
            eq[3 * i + 1] = next.1 - now.1 - m.rates[1] * m.step;
            eq[3 * i + 2] = next.2 - now.2 - m.rates[2] * m.step;
        }
        if self.spec.charging_in_horizon {
            eq[3 * k] = z[l.soc.start + k] - self.spec.soc_targ;
        }

        let b = &self.ctx.bounds;
        let cool = &self.ctx.params.cooling;
        for j in 0..k {
            ineq[j] = z[l.t_bat.start + j + 1] - b.t_bat_max_c - z[l.eps_bat];
            ineq[k + j] = z[l.t_cab.start + j + 1] - b.t_cab_max_c - z[l.eps_cab];
            ineq[2 * k + j] = z[l.q_bat.start + j] + z[l.q_cab.start + j] - cool.q_total_max_w;
        }
        ineq[3 * k] = -z[l.eps_bat];
        ineq[3 * k + 1] = -z[l.eps_cab];
        if let Some(budget) = self.budget_row() {
            ineq[3 * k + 2] = z[l.dt2.clone()].iter().sum::<f64>() - budget;
        }
        Ok(())
    }

    fn budget_row(&self) -> Option<f64> {
        if self.layout.n2 > 0 {
            self.weights.budget_t_chg_s
        } else {
            None
        }
    }

    /// Analytic Jacobians of the equality and inequality residuals.
    pub fn eval_jacobians(&self, z: &[f64]) -> Result<(CsrMatrix, CsrMatrix), ModelError> {
        let l = &self.layout;
        let k = l.samples();
        let cop = self.ctx.params.cooling.cop;
        let mut jc = CsrMatrix::with_capacity(l.dim, self.n_eq, 16 * k + 1);
        for i in 0..k {
            let m = self.sample_model(z, i)?;
            let h = m.step;
            let (qb, qc) = (l.q_bat.start + i, l.q_cab.start + i);
            let charge_cols = self.is_charging(i).then(|| (l.p_chg.start + i - l.n1, l.dt2.start + i - l.n1));

            // dP_bat/dq = 1/COP; dP_bat/dp_chg = -1
            let soc_p = -h * m.d_power[0];
            let mut row =
                vec![(l.soc.start + i + 1, 1.0), (l.soc.start + i, -1.0), (qb, soc_p / cop), (qc, soc_p / cop)];
            if let Some((p, dt)) = charge_cols {
                row.push((p, -soc_p));
                row.push((dt, -m.rates[0]));
            }
            jc.push_row(&row);

            let tb_p = -h * m.d_power[1];
            let mut row = vec![
                (l.t_bat.start + i + 1, 1.0),
                (l.t_bat.start + i, -1.0 - h * m.d_t_bat),
                (qb, tb_p / cop + h * m.inv_heat_bat),
                (qc, tb_p / cop),
            ];
            if let Some((p, dt)) = charge_cols {
                row.push((p, -tb_p));
                row.push((dt, -m.rates[1]));
            }
            jc.push_row(&row);

            let mut row =
                vec![(l.t_cab.start + i + 1, 1.0), (l.t_cab.start + i, -1.0 - h * m.d_t_cab), (qc, h * m.inv_heat_cab)];
            if let Some((_, dt)) = charge_cols {
                row.push((dt, -m.rates[2]));
            }
            jc.push_row(&row);
        }
        if self.spec.charging_in_horizon {
            jc.push_row(&[(l.soc.start + k, 1.0)]);
        }

        let mut jg = CsrMatrix::with_capacity(l.dim, self.n_ineq, 6 * k + 2 + l.n2);
        for j in 0..k {
            jg.push_row(&[(l.t_bat.start + j + 1, 1.0), (l.eps_bat, -1.0)]);
        }
        for j in 0..k {
            jg.push_row(&[(l.t_cab.start + j + 1, 1.0), (l.eps_cab, -1.0)]);
        }
        for j in 0..k {
            jg.push_row(&[(l.q_bat.start + j, 1.0), (l.q_cab.start + j, 1.0)]);
        }
        jg.push_row(&[(l.eps_bat, -1.0)]);
        jg.push_row(&[(l.eps_cab, -1.0)]);
        if self.budget_row().is_some() {
            let row: Vec<(usize, f64)> = l.dt2.clone().map(|j| (j, 1.0)).collect();
            jg.push_row(&row);
        }
        Ok((jc, jg))
    }

    /// Lower triangle of `∇²(σ f + Σ wᵢ cᵢ)`. The inequality rows are linear.
    pub fn push_lagrangian_hessian(
        &self,
        z: &[f64],
        sigma: f64,
        eq_weights: &[f64],
        out: &mut Vec<(usize, usize, f64)>,
    ) -> Result<(), ModelError> {
        let l = &self.layout;
        let kappa = self.cost_factor();
        let inv_cop = 1.0 / self.ctx.params.cooling.cop;
        let mut push = |a: usize, b: usize, v: f64| {
            if v != 0.0 {
                out.push((a.max(b), a.min(b), v));
            }
        };
        for i in 0..l.samples() {
            let m = self.sample_model(z, i)?;
            let (qb, qc) = (l.q_bat.start + i, l.q_cab.start + i);
            let dt = self.step_length(z, i);
            push(qb, qb, sigma * 2.0 * kappa * dt);
            push(qc, qc, sigma * 2.0 * kappa * dt);

            let (w_soc, w_tb, w_tc) = (eq_weights[3 * i], eq_weights[3 * i + 1], eq_weights[3 * i + 2]);
            let mut power_vars = vec![(qb, inv_cop), (qc, inv_cop)];
            let charge_cols = self.is_charging(i).then(|| (l.p_chg.start + i - l.n1, l.dt2.start + i - l.n1));
            if let Some((p, _)) = charge_cols {
                power_vars.push((p, -1.0));
            }
            let p_curv = -dt * (w_soc * m.d2_power[0] + w_tb * m.d2_power[1]);
            for (a, &(va, da)) in power_vars.iter().enumerate() {
                for &(vb, db) in &power_vars[..=a] {
                    push(va, vb, p_curv * da * db);
                }
            }

            if let Some((_, dt_col)) = charge_cols {
                push(dt_col, dt_col, sigma * 2.0 * self.weights.alpha);
                push(dt_col, qb, sigma * 2.0 * kappa * z[qb]);
                push(dt_col, qc, sigma * 2.0 * kappa * z[qc]);
                let p_cross = -(w_soc * m.d_power[0] + w_tb * m.d_power[1]);
                for &(v, d) in &power_vars {
                    push(dt_col, v, p_cross * d);
                }
                push(dt_col, qb, w_tb * m.inv_heat_bat);
                push(dt_col, qc, w_tc * m.inv_heat_cab);
                push(dt_col, l.t_bat.start + i, -w_tb * m.d_t_bat);
                push(dt_col, l.t_cab.start + i, -w_tc * m.d_t_cab);
            }
        }
        push(l.eps_bat, l.eps_bat, sigma * 2.0 * self.weights.beta1);
        push(l.eps_cab, l.eps_cab, sigma * 2.0 * self.weights.beta2);
        Ok(())
    }

    /// Objective gradient and both constraint Jacobians at `z`.
    pub fn eval_gradients(&self, z: &[f64]) -> Result<(Vec<f64>, CsrMatrix, CsrMatrix), ModelError> {
        let mut grad = vec![0.0; self.layout.dim];
        self.eval_objective_gradient(z, &mut grad);
        let (jc, jg) = self.eval_jacobians(z)?;
        Ok((grad, jc, jg))
    }

    /// Overwrites the state blocks of `z` by forward simulation from the
    /// initial state under the controls in `z`, clipping each knot into the
    /// state box.
    pub fn rollout(&self, z: &mut [f64]) -> Result<(), ModelError> {
        let l = &self.layout;
        z[l.soc.start] = self.x0.soc;
        z[l.t_bat.start] = self.x0.t_bat_c;
        z[l.t_cab.start] = self.x0.t_cab_c;
        for i in 0..l.samples() {
            let m = self.sample_model(z, i)?;
            let (soc, t_bat, t_cab) = l.knot_state(z, i);
            let next = [soc + m.rates[0] * m.step, t_bat + m.rates[1] * m.step, t_cab + m.rates[2] * m.step];
            for (slot, v) in [l.soc.start, l.t_bat.start, l.t_cab.start].into_iter().zip(next) {
                let j = slot + i + 1;
                z[j] = v.max(self.lower[j]).min(self.upper[j]);
            }
        }
        Ok(())
    }

    /// Cold-start point: controls at mid-bounds, equal charging steps that
    /// spend the budget (or half the step limit), rolled-out states, zero slacks.
    pub fn initial_guess(&self) -> Result<Vec<f64>, ModelError> {
        let l = &self.layout;
        let mut z = vec![0.0; l.dim];
        for j in l.q_bat.start..l.p_chg.end {
            z[j] = 0.5 * (self.lower[j] + self.upper[j]);
        }
        let dt2 = match self.weights.budget_t_chg_s {
            Some(budget) if l.n2 > 0 => (budget / l.n2 as f64).min(self.spec.dt2_max_s),
            _ => 0.5 * self.spec.dt2_max_s,
        };
        z[l.dt2.clone()].iter_mut().for_each(|v| *v = dt2);
        self.rollout(&mut z)?;
        Ok(z)
    }

    /// A point drawn inside the box, with states in a physically plausible
    /// band and strictly positive charging steps. `uniform` yields values in
    /// `[0, 1)`.
    pub fn sample_point(&self, mut uniform: impl FnMut() -> f64) -> Vec<f64> {
        let l = &self.layout;
        let b = &self.ctx.bounds;
        let mut z = vec![0.0; l.dim];
        let mut draw = |lo: f64, hi: f64| lo + (hi - lo) * uniform();
        for j in l.q_bat.start..l.p_chg.end {
            z[j] = draw(self.lower[j], self.upper[j]);
        }
        for j in l.dt2.clone() {
            z[j] = draw(0.05, 1.0) * self.spec.dt2_max_s;
        }
        for j in l.soc.clone() {
            z[j] = draw(b.soc_min.max(0.05), b.soc_max.min(0.95));
        }
        for j in l.t_bat.clone() {
            z[j] = draw(b.t_bat_min_c, b.t_bat_max_c + 5.0);
        }
        for j in l.t_cab.clone() {
            z[j] = draw(b.t_cab_min_c, b.t_cab_max_c + 5.0);
        }
        z[l.eps_bat] = draw(0.0, 2.0);
        z[l.eps_cab] = draw(0.0, 2.0);
        for (j, v) in z.iter_mut().enumerate() {
            *v = v.max(self.lower[j]).min(self.upper[j]);
        }
        z
    }

    pub fn debug_dump(&self, z: &[f64]) -> NlpDump {
        let (eq, ineq) = self.eval_constraints(z).unwrap_or_default();
        NlpDump {
            layout: self.layout.clone(),
            spec: self.spec.clone(),
            weights: self.weights,
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            z: z.to_vec(),
            objective: self.eval_objective(z),
            eq_residuals: eq,
            ineq_residuals: ineq,
        }
    }
}

/// JSON-serializable snapshot of a problem evaluated at one point.
/// Infinite bounds serialize as `null`.
#[derive(Debug, Clone, Serialize)]
pub struct NlpDump {
    pub layout: Layout,
    pub spec: HorizonSpec,
    pub weights: Weights,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub z: Vec<f64>,
    pub objective: f64,
    pub eq_residuals: Vec<f64>,
    pub ineq_residuals: Vec<f64>,
}

impl Nlp for NlpProblem {
    fn dim(&self) -> usize {
        self.layout.dim
    }

    fn n_eq(&self) -> usize {
        self.n_eq
    }

    fn n_ineq(&self) -> usize {
        self.n_ineq
    }

    fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    fn objective(&self, z: &[f64]) -> Result<f64, EvalError> {
        Ok(self.eval_objective(z))
    }

    fn objective_gradient(&self, z: &[f64], grad: &mut [f64]) -> Result<(), EvalError> {
        self.eval_objective_gradient(z, grad);
        Ok(())
    }

    fn lagrangian_hessian(
        &self,
        z: &[f64],
        sigma: f64,
        eq_weights: &[f64],
        _ineq_weights: &[f64],
        out: &mut Vec<(usize, usize, f64)>,
    ) -> Result<(), EvalError> {
        self.push_lagrangian_hessian(z, sigma, eq_weights, out)?;
        Ok(())
    }

    fn constraints(&self, z: &[f64], eq: &mut [f64], ineq: &mut [f64]) -> Result<(), EvalError> {
        Ok(self.fill_constraints(z, eq, ineq)?)
    }

    fn jacobians(&self, z: &[f64]) -> Result<(CsrMatrix, CsrMatrix), EvalError> {
        Ok(self.eval_jacobians(z)?)
    }

    fn variable_scales(&self) -> Vec<f64> {
        let l = &self.layout;
        let cool = &self.ctx.params.cooling;
        let mut s = vec![1.0; l.dim];
        let mut fill = |r: Range<usize>, v: f64| s[r].iter_mut().for_each(|x| *x = v);
        fill(l.q_bat.start..l.q_cab.end, cool.q_total_max_w);
        fill(l.p_chg.clone(), self.ctx.p_chg_max_w);
        fill(l.dt2.clone(), self.spec.dt2_max_s);
        fill(l.soc.clone(), SOC_SCALE);
        s
    }

    fn objective_scale(&self) -> f64 {
        let q = self.ctx.params.cooling.q_total_max_w;
        q * q * self.cost_factor() * REFERENCE_STEP_S
    }

    fn eq_scales(&self) -> Vec<f64> {
        let mut s = vec![1.0; self.n_eq];
        for i in 0..self.layout.samples() {
            s[3 * i] = SOC_SCALE;
        }
        if self.spec.charging_in_horizon {
            s[self.n_eq - 1] = SOC_SCALE;
        }
        s
    }

    fn ineq_scales(&self) -> Vec<f64> {
        let k = self.layout.samples();
        let mut s = vec![1.0; self.n_ineq];
        s[2 * k..3 * k].iter_mut().for_each(|v| *v = self.ctx.params.cooling.q_total_max_w);
        if self.budget_row().is_some() {
            s[self.n_ineq - 1] = self.spec.dt2_max_s;
        }
        s
    }
}
