//! Central finite-difference verification of analytic derivatives.

use serde::Serialize;

use super::{EvalError, Nlp};

/// Which derivative an entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Component {
    Objective { col: usize },
    Equality { row: usize, col: usize },
    Inequality { row: usize, col: usize },
}

impl Component {
    pub fn col(&self) -> usize {
        match *self {
            Component::Objective { col } | Component::Equality { col, .. } | Component::Inequality { col, .. } => col,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub max_rel_error: f64,
    pub worst: Component,
    pub analytic: f64,
    pub finite_difference: f64,
}

/// Entries smaller than this (in scaled units) are compared absolutely.
pub const ABSOLUTE_FLOOR: f64 = 1.0;
const RELATIVE_STEP: f64 = 1e-6;

/// Compares the analytic objective gradient and constraint Jacobians with
/// central differences, both expressed in the problem's scaled space.
///
/// The error of an entry is `|a − d| / max(|a|, |d|, ABSOLUTE_FLOOR)`.
pub fn check_derivatives<P: Nlp + ?Sized>(nlp: &P, z: &[f64]) -> Result<DerivativeCheck, EvalError> {
    let n = nlp.dim();
    let xs = nlp.variable_scales();
    let fs = nlp.objective_scale();
    let cs = nlp.eq_scales();
    let gs = nlp.ineq_scales();

    let mut grad = vec![0.0; n];
    nlp.objective_gradient(z, &mut grad)?;
    let (jc, jg) = nlp.jacobians(z)?;
    let (jc, jg) = (jc.to_dense(), jg.to_dense());

    let mut report = DerivativeCheck {
        max_rel_error: 0.0,
        worst: Component::Objective { col: 0 },
        analytic: 0.0,
        finite_difference: 0.0,
    };
    let mut consider = |component: Component, a: f64, d: f64| {
        let err = (a - d).abs() / a.abs().max(d.abs()).max(ABSOLUTE_FLOOR);
        if err > report.max_rel_error || err.is_nan() {
            report = DerivativeCheck { max_rel_error: err, worst: component, analytic: a, finite_difference: d };
        }
    };

    let eval = |point: &[f64]| -> Result<(f64, Vec<f64>, Vec<f64>), EvalError> {
        let mut c = vec![0.0; nlp.n_eq()];
        let mut g = vec![0.0; nlp.n_ineq()];
        nlp.constraints(point, &mut c, &mut g)?;
        Ok((nlp.objective(point)?, c, g))
    };

    let mut point = z.to_vec();
    for j in 0..n {
        let step = RELATIVE_STEP * (z[j].abs() / xs[j]).max(1.0) * xs[j];
        point[j] = z[j] + step;
        let (f_hi, c_hi, g_hi) = eval(&point)?;
        point[j] = z[j] - step;
        let (f_lo, c_lo, g_lo) = eval(&point)?;
        point[j] = z[j];
        let width = 2.0 * step;

        consider(Component::Objective { col: j }, grad[j] * xs[j] / fs, (f_hi - f_lo) / width * xs[j] / fs);
        for i in 0..c_hi.len() {
            let d = (c_hi[i] - c_lo[i]) / width;
            consider(Component::Equality { row: i, col: j }, jc[i][j] * xs[j] / cs[i], d * xs[j] / cs[i]);
        }
        for i in 0..g_hi.len() {
            let d = (g_hi[i] - g_lo[i]) / width;
            consider(Component::Inequality { row: i, col: j }, jg[i][j] * xs[j] / gs[i], d * xs[j] / gs[i]);
        }
    }
    Ok(report)
}
