//! Derivative verification on a small fixed horizon problem built from the
//! nominal scenario.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::scenario::{nominal_scenario, ScenarioError};
use crate::solver::check::Component;
use crate::solver::{check_derivatives, CsrMatrix, DerivativeCheck, EvalError, Nlp};
use crate::transcription::{build_nlp, HorizonSpec, NlpProblem, TranscriptionError, Weights};

/// Largest accepted analytic-vs-finite-difference error.
pub const GRADIENT_TOLERANCE: f64 = 1e-5;
pub const CHECK_N1: usize = 3;
pub const CHECK_N2: usize = 4;
const CHECK_SLACK_WEIGHT: f64 = 1e3;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("at least one sample point is required")]
    NoPoints,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Transcription(#[from] TranscriptionError),
    #[error("point {point}: {source}")]
    Eval { point: usize, source: EvalError },
}

#[derive(Debug, Clone, Serialize)]
pub struct WorstEntry {
    pub point: usize,
    pub component: Component,
    /// Name of the decision variable the entry differentiates by.
    pub variable: String,
    pub analytic: f64,
    pub finite_difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientReport {
    pub n_points: usize,
    pub seed: u64,
    pub max_rel_error: f64,
    pub worst: WorstEntry,
}

impl GradientReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < GRADIENT_TOLERANCE
    }
}

/// Three driving samples of nominal traction, four charging samples and the
/// charging budget row. The slack weights are moderate so that central
/// differences of the objective stay well above roundoff.
pub fn check_problem() -> Result<NlpProblem, DiagnosticsError> {
    let scenario = nominal_scenario()?;
    let cfg = &scenario.controller;
    let profile = scenario.traction_profile();
    let spec = HorizonSpec {
        n1: CHECK_N1,
        dt1_s: cfg.dt1_s,
        n2: CHECK_N2,
        dt2_max_s: cfg.dt2_max_s,
        traction_preview_w: (0..CHECK_N1)
            .map(|i| profile.mean_over(i as f64 * cfg.dt1_s, (i + 1) as f64 * cfg.dt1_s))
            .collect(),
        soc_targ: scenario.soc_targ,
        charging_in_horizon: true,
    };
    let weights = Weights {
        alpha: cfg.alpha,
        beta1: CHECK_SLACK_WEIGHT,
        beta2: CHECK_SLACK_WEIGHT,
        budget_t_chg_s: Some(scenario.budget_t_chg_s / 3.0),
        power_unit_w: cfg.power_unit_w,
    };
    Ok(build_nlp(&spec, &scenario.initial_state(), &scenario.problem_context(), &weights)?)
}

/// Scales the analytic objective gradient by `1 + factor`; a negative control
/// for the checker.
pub struct PerturbedGradient<'a, P: Nlp> {
    pub inner: &'a P,
    pub factor: f64,
}

impl<P: Nlp> Nlp for PerturbedGradient<'_, P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn n_eq(&self) -> usize {
        self.inner.n_eq()
    }
    fn n_ineq(&self) -> usize {
        self.inner.n_ineq()
    }
    fn lower_bounds(&self) -> &[f64] {
        self.inner.lower_bounds()
    }
    fn upper_bounds(&self) -> &[f64] {
        self.inner.upper_bounds()
    }
    fn objective(&self, z: &[f64]) -> Result<f64, EvalError> {
        self.inner.objective(z)
    }
    fn objective_gradient(&self, z: &[f64], grad: &mut [f64]) -> Result<(), EvalError> {
        self.inner.objective_gradient(z, grad)?;
        grad.iter_mut().for_each(|g| *g *= 1.0 + self.factor);
        Ok(())
    }
    fn constraints(&self, z: &[f64], eq: &mut [f64], ineq: &mut [f64]) -> Result<(), EvalError> {
        self.inner.constraints(z, eq, ineq)
    }
    fn jacobians(&self, z: &[f64]) -> Result<(CsrMatrix, CsrMatrix), EvalError> {
        self.inner.jacobians(z)
    }
    fn variable_scales(&self) -> Vec<f64> {
        self.inner.variable_scales()
    }
    fn objective_scale(&self) -> f64 {
        self.inner.objective_scale()
    }
    fn eq_scales(&self) -> Vec<f64> {
        self.inner.eq_scales()
    }
    fn ineq_scales(&self) -> Vec<f64> {
        self.inner.ineq_scales()
    }
}

/// Checks derivatives at `n_points` seeded random points inside the variable
/// box of [`check_problem`]. `perturb` scales the analytic objective gradient.
pub fn check_gradients(n_points: usize, seed: u64, perturb: Option<f64>) -> Result<GradientReport, DiagnosticsError> {
    if n_points == 0 {
        return Err(DiagnosticsError::NoPoints);
    }
    let nlp = check_problem()?;
    let perturbed = PerturbedGradient { inner: &nlp, factor: perturb.unwrap_or(0.0) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: Option<(usize, DerivativeCheck)> = None;
    for point in 0..n_points {
        let z = nlp.sample_point(|| rng.gen::<f64>());
        let check = match perturb {
            Some(_) => check_derivatives(&perturbed, &z),
            None => check_derivatives(&nlp, &z),
        }
        .map_err(|source| DiagnosticsError::Eval { point, source })?;
        if worst.as_ref().is_none_or(|(_, w)| check.max_rel_error > w.max_rel_error) {
            worst = Some((point, check));
        }
    }
    let (point, w) = worst.expect("at least one point was checked");
    Ok(GradientReport {
        n_points,
        seed,
        max_rel_error: w.max_rel_error,
        worst: WorstEntry {
            point,
            component: w.worst,
            variable: nlp.layout().describe(w.worst.col()),
            analytic: w.analytic,
            finite_difference: w.finite_difference,
        },
    })
}
