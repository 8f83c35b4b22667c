//! Receding-horizon warm starts.

use thiserror::Error;

use super::Solution;
use crate::transcription::NlpProblem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WarmStartError {
    #[error("cannot shift a {old_n1}+{old_n2} horizon onto {new_n1}+{new_n2}")]
    DimensionMismatch { old_n1: usize, old_n2: usize, new_n1: usize, new_n2: usize },
    #[error("rollout failed: {0}")]
    Rollout(String),
}

/// Initial point for `new` built from the solution of `old`.
///
/// Driving samples that have elapsed are dropped from the front, charging
/// samples (including their step lengths) carry over unchanged, and the state
/// blocks are re-simulated from the new initial state. An unchanged problem
/// returns the previous optimum as is.
pub fn warm_start(prev: &Solution, old: &NlpProblem, new: &NlpProblem) -> Result<Vec<f64>, WarmStartError> {
    let (lo, ln) = (old.layout(), new.layout());
    let mismatch = || WarmStartError::DimensionMismatch { old_n1: lo.n1, old_n2: lo.n2, new_n1: ln.n1, new_n2: ln.n2 };
    if prev.z_star.len() != lo.dim {
        return Err(mismatch());
    }
    if old == new {
        return Ok(prev.z_star.clone());
    }
    if ln.n1 > lo.n1 || ln.n2 != lo.n2 {
        return Err(mismatch());
    }

    let old_z = &prev.z_star;
    let dropped = lo.n1 - ln.n1;
    let mut z = vec![0.0; ln.dim];
    for i in 0..ln.samples() {
        z[ln.q_bat.start + i] = old_z[lo.q_bat.start + i + dropped];
        z[ln.q_cab.start + i] = old_z[lo.q_cab.start + i + dropped];
    }
    z[ln.p_chg.clone()].copy_from_slice(&old_z[lo.p_chg.clone()]);
    z[ln.dt2.clone()].copy_from_slice(&old_z[lo.dt2.clone()]);
    z[ln.eps_bat] = old_z[lo.eps_bat];
    z[ln.eps_cab] = old_z[lo.eps_cab];

    let (lower, upper) = (crate::solver::Nlp::lower_bounds(new), crate::solver::Nlp::upper_bounds(new));
    for ((v, l), h) in z.iter_mut().zip(lower).zip(upper) {
        *v = v.max(*l).min(*h);
    }
    new.rollout(&mut z).map_err(|e| WarmStartError::Rollout(e.to_string()))?;
    Ok(z)
}
