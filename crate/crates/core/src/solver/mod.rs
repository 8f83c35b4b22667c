//! Self-contained solver for smooth nonlinear programs
//!
//! ```text
//! min f(z)  s.t.  c(z) = 0,  g(z) <= 0,  lo <= z <= hi
//! ```
//!
//! The outer loop is an augmented Lagrangian method on the equality and
//! inequality constraints. Box bounds are never relaxed: each inner
//! subproblem is minimized over the box with a projected Newton iteration
//! on a Gauss-Newton model of the augmented Lagrangian. All work happens in
//! a scaled space supplied by the problem (`variable_scales`,
//! `objective_scale`, constraint scales), and every tolerance refers to
//! that scaled space.

mod augmented;
pub mod check;
pub mod sparse;
pub mod warm;

use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

use crate::models::ModelError;
pub use augmented::{check_kkt, solve, solve_from};
pub use check::{check_derivatives, DerivativeCheck};
pub use sparse::CsrMatrix;
pub use warm::{warm_start, WarmStartError};

/// A model-domain failure while evaluating the problem at a trial point.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("evaluation failed: {message}")]
pub struct EvalError {
    pub message: String,
}

impl From<ModelError> for EvalError {
    fn from(e: ModelError) -> Self {
        Self { message: e.to_string() }
    }
}

/// Problem interface consumed by [`solve`].
pub trait Nlp {
    fn dim(&self) -> usize;
    fn n_eq(&self) -> usize;
    fn n_ineq(&self) -> usize;
    fn lower_bounds(&self) -> &[f64];
    fn upper_bounds(&self) -> &[f64];

    fn objective(&self, z: &[f64]) -> Result<f64, EvalError>;
    fn objective_gradient(&self, z: &[f64], grad: &mut [f64]) -> Result<(), EvalError>;

    /// Lower-triangle entries `(row, col, value)` with `row >= col` of the
    /// Hessian of `σ f + Σ λᵢ cᵢ + Σ μⱼ gⱼ`, exact or approximate. Repeated
    /// positions add. The default contributes nothing.
    fn lagrangian_hessian(
        &self,
        _z: &[f64],
        _objective_factor: f64,
        _eq_weights: &[f64],
        _ineq_weights: &[f64],
        _out: &mut Vec<(usize, usize, f64)>,
    ) -> Result<(), EvalError> {
        Ok(())
    }

    fn constraints(&self, z: &[f64], eq: &mut [f64], ineq: &mut [f64]) -> Result<(), EvalError>;

    /// Jacobians of the equality and inequality residuals.
    fn jacobians(&self, z: &[f64]) -> Result<(CsrMatrix, CsrMatrix), EvalError>;

    fn variable_scales(&self) -> Vec<f64> {
        vec![1.0; self.dim()]
    }
    fn objective_scale(&self) -> f64 {
        1.0
    }
    fn eq_scales(&self) -> Vec<f64> {
        vec![1.0; self.n_eq()]
    }
    fn ineq_scales(&self) -> Vec<f64> {
        vec![1.0; self.n_ineq()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Projected-gradient stationarity of the Lagrangian (∞-norm, scaled).
    pub kkt_tol: f64,
    /// Constraint violation (∞-norm of scaled residuals).
    pub feas_tol: f64,
    pub max_outer_iters: usize,
    pub max_inner_iters: usize,
    pub initial_penalty: f64,
    pub penalty_growth_factor: f64,
    /// Floor on the inner stationarity tolerance.
    pub inner_grad_tol: f64,
    pub max_penalty: f64,
    /// Record one [`TraceRecord`] per outer iteration.
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kkt_tol: 1e-4,
            feas_tol: 1e-5,
            max_outer_iters: 60,
            max_inner_iters: 200,
            initial_penalty: 10.0,
            penalty_growth_factor: 10.0,
            inner_grad_tol: 1e-6,
            max_penalty: 1e12,
            trace: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("kkt_tol", self.kkt_tol),
            ("feas_tol", self.feas_tol),
            ("initial_penalty", self.initial_penalty),
            ("inner_grad_tol", self.inner_grad_tol),
            ("max_penalty", self.max_penalty),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("solver option `{name}` must be positive, got {v}"));
            }
        }
        if !(self.penalty_growth_factor > 1.0) {
            return Err("solver option `penalty_growth_factor` must exceed 1".into());
        }
        if self.max_outer_iters == 0 || self.max_inner_iters == 0 {
            return Err("solver iteration limits must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Infeasible,
    EvaluationError,
}

/// First-order optimality measures, all in the solver's scaled space.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub eq_feasibility: f64,
    pub ineq_feasibility: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn within(&self, opts: &SolverOptions) -> bool {
        self.stationarity <= opts.kkt_tol
            && self.eq_feasibility <= opts.feas_tol
            && self.ineq_feasibility <= opts.feas_tol
            && self.complementarity <= opts.kkt_tol
    }

    /// Largest constraint violation.
    pub fn infeasibility(&self) -> f64 {
        self.eq_feasibility.max(self.ineq_feasibility)
    }
}

/// Lagrange multipliers in the problem's own units, for `L = f + λᵀc + μᵀg`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Multipliers {
    pub eq: Vec<f64>,
    /// Zero for inactive inequalities.
    pub ineq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub outer_iter: usize,
    pub inner_iters: usize,
    pub objective: f64,
    pub penalty: f64,
    pub stationarity: f64,
    pub eq_feasibility: f64,
    pub ineq_feasibility: f64,
    pub complementarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub z_star: Vec<f64>,
    pub objective: f64,
    pub multipliers: Multipliers,
    pub status: SolveStatus,
    pub kkt: KktResiduals,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub wall_time: Duration,
    pub message: Option<String>,
    pub trace: Vec<TraceRecord>,
}

impl Solution {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}
