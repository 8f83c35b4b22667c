use std::time::Instant;

use log::{debug, trace};
use nalgebra::{DMatrix, DVector};

use super::{CsrMatrix, EvalError, KktResiduals, Multipliers, Nlp, Solution, SolveStatus, SolverOptions, TraceRecord};

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;
const STALL_REL: f64 = 1e-12;
/// Fraction by which constraint violation must drop before the penalty is
/// left unchanged.
const PROGRESS_RATIO: f64 = 0.25;
/// At the penalty cap, an outer iteration that keeps more than this fraction
/// of the violation counts as stagnant.
const STAGNATION_RATIO: f64 = 0.9;
const MAX_STAGNANT_AT_CAP: usize = 3;

struct Values {
    f: f64,
    c: Vec<f64>,
    g: Vec<f64>,
}

struct Derivatives {
    values: Values,
    grad: Vec<f64>,
    jc: CsrMatrix,
    jg: CsrMatrix,
}

/// The problem viewed in scaled coordinates `y = z / s`.
struct Scaled<'a, P: Nlp + ?Sized> {
    nlp: &'a P,
    xs: Vec<f64>,
    inv_fs: f64,
    inv_cs: Vec<f64>,
    inv_gs: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl<'a, P: Nlp + ?Sized> Scaled<'a, P> {
    fn new(nlp: &'a P) -> Self {
        let xs = nlp.variable_scales();
        let positive = |v: f64| if v > 0.0 && v.is_finite() { v } else { 1.0 };
        let xs: Vec<f64> = xs.into_iter().map(positive).collect();
        let lo = nlp.lower_bounds().iter().zip(&xs).map(|(l, s)| l / s).collect();
        let hi = nlp.upper_bounds().iter().zip(&xs).map(|(h, s)| h / s).collect();
        Self {
            nlp,
            inv_fs: 1.0 / positive(nlp.objective_scale()),
            inv_cs: nlp.eq_scales().into_iter().map(|s| 1.0 / positive(s)).collect(),
            inv_gs: nlp.ineq_scales().into_iter().map(|s| 1.0 / positive(s)).collect(),
            xs,
            lo,
            hi,
        }
    }

    fn n(&self) -> usize {
        self.xs.len()
    }

    fn to_z(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.xs).map(|(y, s)| y * s).collect()
    }

    fn to_y(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.xs).map(|(z, s)| z / s).collect()
    }

    fn project(&self, y: &mut [f64]) {
        for ((v, l), h) in y.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.max(*l).min(*h);
        }
    }

    fn values(&self, y: &[f64]) -> Result<Values, EvalError> {
        let z = self.to_z(y);
        let f = self.nlp.objective(&z)? * self.inv_fs;
        let mut c = vec![0.0; self.inv_cs.len()];
        let mut g = vec![0.0; self.inv_gs.len()];
        self.nlp.constraints(&z, &mut c, &mut g)?;
        c.iter_mut().zip(&self.inv_cs).for_each(|(v, s)| *v *= s);
        g.iter_mut().zip(&self.inv_gs).for_each(|(v, s)| *v *= s);
        if !f.is_finite() || c.iter().chain(&g).any(|v| !v.is_finite()) {
            return Err(EvalError { message: "non-finite objective or residual".into() });
        }
        Ok(Values { f, c, g })
    }

    fn derivatives(&self, y: &[f64]) -> Result<Derivatives, EvalError> {
        let values = self.values(y)?;
        let z = self.to_z(y);
        let mut grad = vec![0.0; self.n()];
        self.nlp.objective_gradient(&z, &mut grad)?;
        for (g, s) in grad.iter_mut().zip(&self.xs) {
            *g *= s * self.inv_fs;
        }
        let (mut jc, mut jg) = self.nlp.jacobians(&z)?;
        jc.scale(&self.inv_cs, &self.xs);
        jg.scale(&self.inv_gs, &self.xs);
        Ok(Derivatives { values, grad, jc, jg })
    }

    /// Scaled-space Hessian of `f̃ + Σ wᵢ c̃ᵢ + Σ vⱼ g̃ⱼ`.
    fn lagrangian_hessian(
        &self,
        y: &[f64],
        eq_weights: &[f64],
        ineq_weights: &[f64],
    ) -> Result<Vec<(usize, usize, f64)>, EvalError> {
        let z = self.to_z(y);
        let eq: Vec<f64> = eq_weights.iter().zip(&self.inv_cs).map(|(w, s)| w * s).collect();
        let ineq: Vec<f64> = ineq_weights.iter().zip(&self.inv_gs).map(|(w, s)| w * s).collect();
        let mut hess = Vec::new();
        self.nlp.lagrangian_hessian(&z, self.inv_fs, &eq, &ineq, &mut hess)?;
        for (i, j, v) in hess.iter_mut() {
            *v *= self.xs[*i] * self.xs[*j];
        }
        Ok(hess)
    }
}

/// Multipliers and penalty defining one augmented Lagrangian subproblem.
struct Penalized<'m> {
    lambda: &'m [f64],
    mu: &'m [f64],
    rho: f64,
}

impl Penalized<'_> {
    fn merit(&self, v: &Values) -> f64 {
        let mut phi = v.f;
        for (c, l) in v.c.iter().zip(self.lambda) {
            phi += l * c + 0.5 * self.rho * c * c;
        }
        for (g, m) in v.g.iter().zip(self.mu) {
            let shifted = (m + self.rho * g).max(0.0);
            phi += (shifted * shifted - m * m) / (2.0 * self.rho);
        }
        phi
    }

    fn eq_weights(&self, v: &Values) -> Vec<f64> {
        v.c.iter().zip(self.lambda).map(|(c, l)| l + self.rho * c).collect()
    }

    fn ineq_weights(&self, v: &Values) -> Vec<f64> {
        v.g.iter().zip(self.mu).map(|(g, m)| (m + self.rho * g).max(0.0)).collect()
    }

    fn gradient(&self, d: &Derivatives) -> Vec<f64> {
        let mut grad = d.grad.clone();
        d.jc.tr_mul_acc(&self.eq_weights(&d.values), &mut grad);
        d.jg.tr_mul_acc(&self.ineq_weights(&d.values), &mut grad);
        grad
    }
}

fn projected_gradient_norm(y: &[f64], grad: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    y.iter()
        .zip(grad)
        .zip(lo.iter().zip(hi))
        .map(|((y, g), (l, h))| ((y - g).max(*l).min(*h) - y).abs())
        .fold(0.0, f64::max)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

struct InnerReport {
    iterations: usize,
    stalled: bool,
}

/// Projected Newton iterations on the augmented Lagrangian with curvature
/// `∇²ₓₓL(w) + ρ JᵀJ`, where `w` are the shifted multipliers and the
/// inequality terms count only while active.
fn minimize_subproblem<P: Nlp + ?Sized>(
    sp: &Scaled<'_, P>,
    y: &mut Vec<f64>,
    pen: &Penalized<'_>,
    tol: f64,
    max_iters: usize,
) -> Result<InnerReport, EvalError> {
    let n = sp.n();
    let mut deriv = sp.derivatives(y)?;
    let mut phi = pen.merit(&deriv.values);
    let mut free_pos = vec![usize::MAX; n];

    for it in 0..max_iters {
        let grad = pen.gradient(&deriv);
        let pg = projected_gradient_norm(y, &grad, &sp.lo, &sp.hi);
        if pg <= tol {
            return Ok(InnerReport { iterations: it, stalled: false });
        }

        // Pin only variables sitting on a bound first; if that step fails,
        // widen to the ε-active set.
        let mut accepted = None;
        for pin_width in [0.0, pg.min(1e-3)] {
            let direction = newton_direction(sp, y, &deriv, &grad, pen, pin_width, &mut free_pos)?;
            accepted = line_search(sp, y, &direction, &grad, pen, phi);
            if accepted.is_some() {
                break;
            }
        }

        let Some((trial, trial_phi)) = accepted else {
            trace!("inner line search failed at iteration {it}, pg = {pg:e}");
            return Ok(InnerReport { iterations: it + 1, stalled: true });
        };
        let change = (phi - trial_phi).abs();
        *y = trial;
        phi = trial_phi;
        deriv = sp.derivatives(y)?;
        if change <= STALL_REL * (1.0 + phi.abs()) {
            let grad = pen.gradient(&deriv);
            let pg = projected_gradient_norm(y, &grad, &sp.lo, &sp.hi);
            return Ok(InnerReport { iterations: it + 1, stalled: pg > tol });
        }
    }
    Ok(InnerReport { iterations: max_iters, stalled: false })
}

/// Newton step of the subproblem on the variables not pinned at a bound.
/// A variable within `pin_width` of a bound with the gradient pushing
/// outward is pinned. Falls back to steepest descent on the free set when
/// the step is not a descent direction.
fn newton_direction<P: Nlp + ?Sized>(
    sp: &Scaled<'_, P>,
    y: &[f64],
    deriv: &Derivatives,
    grad: &[f64],
    pen: &Penalized<'_>,
    pin_width: f64,
    free_pos: &mut [usize],
) -> Result<Vec<f64>, EvalError> {
    let n = sp.n();
    let mut free = Vec::with_capacity(n);
    for j in 0..n {
        let at_lo = y[j] - sp.lo[j] <= pin_width && grad[j] > 0.0;
        let at_hi = sp.hi[j] - y[j] <= pin_width && grad[j] < 0.0;
        let fixed = sp.hi[j] - sp.lo[j] <= 0.0;
        if at_lo || at_hi || fixed {
            free_pos[j] = usize::MAX;
        } else {
            free_pos[j] = free.len();
            free.push(j);
        }
    }

    let mut direction = vec![0.0; n];
    if !free.is_empty() {
        let curvature = sp.lagrangian_hessian(y, &pen.eq_weights(&deriv.values), &pen.ineq_weights(&deriv.values))?;
        let h = assemble_hessian(deriv, &curvature, pen, &free, free_pos);
        let rhs = DVector::from_iterator(free.len(), free.iter().map(|&j| -grad[j]));
        let step = solve_regularized(h, rhs);
        for (k, &j) in free.iter().enumerate() {
            direction[j] = step[k];
        }
    }
    let slope: f64 = direction.iter().zip(grad).map(|(d, g)| d * g).sum();
    if !(slope < 0.0) {
        for &j in &free {
            direction[j] = -grad[j];
        }
    }
    Ok(direction)
}

/// Projected backtracking search along `direction` for an Armijo decrease of
/// the merit function. Steps whose projection is not a descent step are
/// rejected.
fn line_search<P: Nlp + ?Sized>(
    sp: &Scaled<'_, P>,
    y: &[f64],
    direction: &[f64],
    grad: &[f64],
    pen: &Penalized<'_>,
    phi: f64,
) -> Option<(Vec<f64>, f64)> {
    let mut t = 1.0;
    for _ in 0..MAX_BACKTRACKS {
        let mut trial: Vec<f64> = y.iter().zip(direction).map(|(y, d)| y + t * d).collect();
        sp.project(&mut trial);
        let decrease: f64 = trial.iter().zip(y).zip(grad).map(|((a, b), g)| g * (a - b)).sum();
        if decrease < 0.0 {
            if let Ok(values) = sp.values(&trial) {
                let trial_phi = pen.merit(&values);
                if trial_phi.is_finite() && trial_phi <= phi + ARMIJO * decrease {
                    return Some((trial, trial_phi));
                }
            }
        }
        t *= 0.5;
    }
    None
}

fn assemble_hessian(
    d: &Derivatives,
    curvature: &[(usize, usize, f64)],
    pen: &Penalized<'_>,
    free: &[usize],
    free_pos: &[usize],
) -> DMatrix<f64> {
    let nf = free.len();
    let mut h = DMatrix::<f64>::zeros(nf, nf);
    for &(i, j, v) in curvature {
        let (a, b) = (free_pos[i], free_pos[j]);
        if a == usize::MAX || b == usize::MAX {
            continue;
        }
        h[(a, b)] += v;
        if a != b {
            h[(b, a)] += v;
        }
    }
    let mut add_outer = |jac: &CsrMatrix, row: usize, weight: f64| {
        let entries: Vec<(usize, f64)> =
            jac.row(row).filter(|&(c, _)| free_pos[c] != usize::MAX).map(|(c, v)| (free_pos[c], v)).collect();
        for &(a, va) in &entries {
            for &(b, vb) in &entries {
                h[(a, b)] += weight * va * vb;
            }
        }
    };
    for i in 0..d.jc.n_rows() {
        add_outer(&d.jc, i, pen.rho);
    }
    for (i, (g, m)) in d.values.g.iter().zip(pen.mu).enumerate() {
        if m + pen.rho * g > 0.0 {
            add_outer(&d.jg, i, pen.rho);
        }
    }
    // Directions without any modelled curvature take a unit gradient step.
    for k in 0..nf {
        if h[(k, k)] <= 1e-12 {
            h[(k, k)] = 1.0;
        }
    }
    h
}

/// Cholesky solve, adding diagonal damping until the matrix factors.
fn solve_regularized(h: DMatrix<f64>, rhs: DVector<f64>) -> DVector<f64> {
    let n = h.nrows();
    let mut delta = 1e-12;
    loop {
        let mut m = h.clone();
        for k in 0..n {
            let d = m[(k, k)];
            m[(k, k)] = d + delta * (1.0 + d.abs());
        }
        if let Some(chol) = m.cholesky() {
            let x = chol.solve(&rhs);
            if x.iter().all(|v| v.is_finite()) {
                return x;
            }
        }
        delta *= 100.0;
        if delta > 1e12 {
            return rhs;
        }
    }
}

fn residuals(y: &[f64], grad_l: &[f64], v: &Values, mu: &[f64], lo: &[f64], hi: &[f64]) -> KktResiduals {
    KktResiduals {
        stationarity: projected_gradient_norm(y, grad_l, lo, hi),
        eq_feasibility: inf_norm(&v.c),
        ineq_feasibility: v.g.iter().fold(0.0, |a, g| a.max(*g)),
        complementarity: v.g.iter().zip(mu).fold(0.0, |a, (g, m)| a.max((-g).min(*m).abs())),
    }
}

/// KKT residuals of `(z, multipliers)` in the problem's scaled space.
pub fn check_kkt<P: Nlp + ?Sized>(nlp: &P, z: &[f64], multipliers: &Multipliers) -> Result<KktResiduals, EvalError> {
    let sp = Scaled::new(nlp);
    let y = sp.to_y(z);
    let d = sp.derivatives(&y)?;
    let fs = 1.0 / sp.inv_fs;
    let lambda: Vec<f64> = scale_multipliers(&multipliers.eq, &sp.inv_cs, fs, d.values.c.len());
    let mu: Vec<f64> = scale_multipliers(&multipliers.ineq, &sp.inv_gs, fs, d.values.g.len());
    let mut grad_l = d.grad.clone();
    d.jc.tr_mul_acc(&lambda, &mut grad_l);
    d.jg.tr_mul_acc(&mu, &mut grad_l);
    Ok(residuals(&y, &grad_l, &d.values, &mu, &sp.lo, &sp.hi))
}

/// Problem-unit multipliers to scaled-space multipliers; missing entries are 0.
fn scale_multipliers(m: &[f64], inv_scale: &[f64], fs: f64, len: usize) -> Vec<f64> {
    (0..len).map(|i| m.get(i).copied().unwrap_or(0.0) / (inv_scale[i] * fs)).collect()
}

pub fn solve<P: Nlp + ?Sized>(nlp: &P, z_init: &[f64], opts: &SolverOptions) -> Solution {
    solve_from(nlp, z_init, None, opts)
}

/// Like [`solve`], seeding the multiplier estimates (e.g. from a previous
/// receding-horizon solve). Mismatched lengths are ignored.
pub fn solve_from<P: Nlp + ?Sized>(
    nlp: &P,
    z_init: &[f64],
    multipliers: Option<&Multipliers>,
    opts: &SolverOptions,
) -> Solution {
    let start = Instant::now();
    let sp = Scaled::new(nlp);
    let n = sp.n();
    let fs = 1.0 / sp.inv_fs;

    let mut y = if z_init.len() == n { sp.to_y(z_init) } else { vec![0.0; n] };
    sp.project(&mut y);

    let (m_eq, m_in) = (nlp.n_eq(), nlp.n_ineq());
    let mut lambda = vec![0.0; m_eq];
    let mut mu = vec![0.0; m_in];
    if let Some(m) = multipliers {
        if m.eq.len() == m_eq && m.ineq.len() == m_in {
            lambda = scale_multipliers(&m.eq, &sp.inv_cs, fs, m_eq);
            mu = scale_multipliers(&m.ineq, &sp.inv_gs, fs, m_in).into_iter().map(|v| v.max(0.0)).collect();
        }
    }

    let mut rho = opts.initial_penalty;
    let mut prev_violation = f64::INFINITY;
    let mut stall_tightened = false;
    let mut stagnant_at_cap = 0;
    let mut out = Outcome {
        status: SolveStatus::MaxIterations,
        kkt: KktResiduals::default(),
        outer: 0,
        inner: 0,
        message: None,
        trace: Vec::new(),
    };

    if let Err(e) = sp.derivatives(&y) {
        out.status = SolveStatus::EvaluationError;
        out.message = Some(e.message);
        return out.into_solution(&sp, &y, &lambda, &mu, start);
    }

    let mut inner_tol = 1e-1f64.max(opts.kkt_tol);
    while out.outer < opts.max_outer_iters {
        out.outer += 1;
        let outer = out.outer;
        let pen = Penalized { lambda: &lambda, mu: &mu, rho };
        let report = match minimize_subproblem(&sp, &mut y, &pen, inner_tol, opts.max_inner_iters) {
            Ok(r) => r,
            Err(e) => {
                out.status = SolveStatus::EvaluationError;
                out.message = Some(e.message);
                break;
            }
        };
        out.inner += report.iterations;

        let d = match sp.derivatives(&y) {
            Ok(d) => d,
            Err(e) => {
                out.status = SolveStatus::EvaluationError;
                out.message = Some(e.message);
                break;
            }
        };
        let v = &d.values;
        let violation = inf_norm(&v.c).max(v.g.iter().zip(&mu).fold(0.0, |a, (g, m)| a.max(g.max(-m / rho).abs())));

        // First-order multiplier update; ∇L at the new multipliers equals
        // the subproblem gradient just minimized.
        for (l, c) in lambda.iter_mut().zip(&v.c) {
            *l += rho * c;
        }
        for (m, g) in mu.iter_mut().zip(&v.g) {
            *m = (*m + rho * g).max(0.0);
        }
        let mut grad_l = d.grad.clone();
        d.jc.tr_mul_acc(&lambda, &mut grad_l);
        d.jg.tr_mul_acc(&mu, &mut grad_l);
        let kkt = residuals(&y, &grad_l, v, &mu, &sp.lo, &sp.hi);
        out.kkt = kkt;

        debug!(
            "outer {outer}: f = {:.6e}, rho = {rho:.1e}, stat = {:.2e}, eq = {:.2e}, ineq = {:.2e}, inner = {}",
            v.f * fs,
            kkt.stationarity,
            kkt.eq_feasibility,
            kkt.ineq_feasibility,
            report.iterations
        );
        if opts.trace {
            out.trace.push(TraceRecord {
                outer_iter: outer,
                inner_iters: report.iterations,
                objective: v.f * fs,
                penalty: rho,
                stationarity: kkt.stationarity,
                eq_feasibility: kkt.eq_feasibility,
                ineq_feasibility: kkt.ineq_feasibility,
                complementarity: kkt.complementarity,
            });
        }

        if kkt.within(opts) {
            out.status = SolveStatus::Converged;
            break;
        }

        if report.stalled && kkt.infeasibility() <= opts.feas_tol {
            if stall_tightened {
                out.message = Some("inner solver stalled".into());
                break;
            }
            stall_tightened = true;
            rho = (rho * opts.penalty_growth_factor).min(opts.max_penalty);
        } else if violation > PROGRESS_RATIO * prev_violation {
            if rho >= opts.max_penalty && violation > STAGNATION_RATIO * prev_violation {
                stagnant_at_cap += 1;
                if stagnant_at_cap >= MAX_STAGNANT_AT_CAP && kkt.infeasibility() > opts.feas_tol {
                    out.status = SolveStatus::Infeasible;
                    out.message = Some("penalty at cap without feasibility progress".into());
                    break;
                }
            }
            rho = (rho * opts.penalty_growth_factor).min(opts.max_penalty);
        }
        prev_violation = prev_violation.min(violation);
        inner_tol = (inner_tol * 0.1).max(opts.inner_grad_tol.min(opts.kkt_tol));
    }

    out.into_solution(&sp, &y, &lambda, &mu, start)
}

struct Outcome {
    status: SolveStatus,
    kkt: KktResiduals,
    outer: usize,
    inner: usize,
    message: Option<String>,
    trace: Vec<TraceRecord>,
}

impl Outcome {
    fn into_solution<P: Nlp + ?Sized>(
        self,
        sp: &Scaled<'_, P>,
        y: &[f64],
        lambda: &[f64],
        mu: &[f64],
        start: Instant,
    ) -> Solution {
        let fs = 1.0 / sp.inv_fs;
        let mut z = sp.to_z(y);
        for ((v, l), h) in z.iter_mut().zip(sp.nlp.lower_bounds()).zip(sp.nlp.upper_bounds()) {
            *v = v.max(*l).min(*h);
        }
        let objective = sp.nlp.objective(&z).unwrap_or(f64::NAN);
        Solution {
            z_star: z,
            objective,
            multipliers: Multipliers {
                eq: lambda.iter().zip(&sp.inv_cs).map(|(l, s)| l * s * fs).collect(),
                ineq: mu.iter().zip(&sp.inv_gs).map(|(m, s)| m * s * fs).collect(),
            },
            status: self.status,
            kkt: self.kkt,
            outer_iters: self.outer,
            inner_iters: self.inner,
            wall_time: start.elapsed(),
            message: self.message,
            trace: self.trace,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min Σ (z_i − c_i)² over a box, no constraints.
    struct Shifted {
        c: Vec<f64>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    }

    impl Nlp for Shifted {
        fn dim(&self) -> usize {
            self.c.len()
        }
        fn n_eq(&self) -> usize {
            0
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
            Ok(z.iter().zip(&self.c).map(|(z, c)| (z - c).powi(2)).sum())
        }
        fn objective_gradient(&self, z: &[f64], g: &mut [f64]) -> Result<(), EvalError> {
            for ((g, z), c) in g.iter_mut().zip(z).zip(&self.c) {
                *g = 2.0 * (z - c);
            }
            Ok(())
        }
        fn constraints(&self, _: &[f64], _: &mut [f64], _: &mut [f64]) -> Result<(), EvalError> {
            Ok(())
        }
        fn jacobians(&self, _: &[f64]) -> Result<(CsrMatrix, CsrMatrix), EvalError> {
            Ok((CsrMatrix::new(self.dim()), CsrMatrix::new(self.dim())))
        }
    }

    #[test]
    fn unconstrained_quadratic_without_hessian() {
        let p = Shifted { c: vec![1.0, -2.0, 3.5], lo: vec![f64::NEG_INFINITY; 3], hi: vec![f64::INFINITY; 3] };
        let sol = solve(&p, &[0.0; 3], &SolverOptions::default());
        assert_eq!(sol.status, SolveStatus::Converged);
        for (z, c) in sol.z_star.iter().zip(&p.c) {
            assert!((z - c).abs() < 1e-4);
        }
    }

    #[test]
    fn box_bounds_are_respected() {
        let p = Shifted { c: vec![5.0, -5.0], lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] };
        let sol = solve(&p, &[10.0, 10.0], &SolverOptions::default());
        assert_eq!(sol.status, SolveStatus::Converged);
        assert_eq!(sol.z_star, vec![1.0, -1.0]);
    }

    #[test]
    fn regularized_solve_handles_singular_matrix() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let x = solve_regularized(h, DVector::from_vec(vec![1.0, 1.0]));
        assert!(x.iter().all(|v| v.is_finite()));
    }
}
