//! Fine-step simulation of the vehicle between controller updates, the
//! closed-loop record and the metrics computed from it.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{self, ModelError, OperatingPoint, PowerInputs, VehicleParams, VehicleState};

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("plant step {plant_dt} s must be positive and no longer than the interval {duration} s")]
    InvalidStep { duration: f64, plant_dt: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("the log has no charging phase")]
    NoChargingPhase,
    #[error("target SOC {soc_targ} not reached (final SOC {final_soc})")]
    TargetNotReached { soc_targ: f64, final_soc: f64 },
    #[error("the log is empty")]
    EmptyLog,
    #[error("log invariant violated: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Driving,
    Waiting,
    Charging,
    Done,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Driving => "driving",
            Phase::Waiting => "waiting",
            Phase::Charging => "charging",
            Phase::Done => "done",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Euler,
    Rk4,
}

/// State at `state.clock_s` and the inputs held from then until the next
/// sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub state: VehicleState,
    pub inputs: PowerInputs,
    pub beta1: f64,
    pub beta2: f64,
    pub phase: Phase,
}

/// Annotation written by the controller at each re-plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanRecord {
    pub clock_s: f64,
    pub n1: usize,
    pub n2: usize,
    pub charging_in_horizon: bool,
    pub beta2: f64,
    pub predicted_t_chg_s: Option<f64>,
    pub solver_status: String,
    pub outer_iters: usize,
    pub inner_iters: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub plant_dt_s: f64,
    pub samples: Vec<Sample>,
    pub replans: Vec<ReplanRecord>,
}

/// Labels attached to the samples of one simulated interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentTag {
    pub phase: Phase,
    pub beta1: f64,
    pub beta2: f64,
}

fn step(
    integrator: Integrator,
    state: &VehicleState,
    inputs: &PowerInputs,
    dt: f64,
    params: &VehicleParams,
    op: OperatingPoint,
) -> Result<VehicleState, ModelError> {
    match integrator {
        Integrator::Euler => models::euler_step(state, inputs, dt, params, op),
        Integrator::Rk4 => models::rk4_step(state, inputs, dt, params, op),
    }
}

/// Zero-order-hold simulation of `duration` seconds at `plant_dt` (a shorter
/// final step when the duration is not a multiple). After every step `stop`
/// is consulted; simulation ends early when it returns true.
///
/// Returns the final state and one sample per step taken.
#[allow(clippy::too_many_arguments)]
pub fn simulate_until(
    state: &VehicleState,
    inputs: &PowerInputs,
    duration: f64,
    plant_dt: f64,
    params: &VehicleParams,
    op: OperatingPoint,
    tag: SegmentTag,
    integrator: Integrator,
    mut stop: impl FnMut(&VehicleState) -> bool,
) -> Result<(VehicleState, Vec<Sample>), PlantError> {
    if !(duration > 0.0 && plant_dt > 0.0 && plant_dt <= duration) {
        return Err(PlantError::InvalidStep { duration, plant_dt });
    }
    let steps = (duration / plant_dt - 1e-9).ceil().max(1.0) as usize;
    let start = state.clock_s;
    let mut current = *state;
    let mut samples = Vec::with_capacity(steps);
    for k in 0..steps {
        let end = if k + 1 == steps { start + duration } else { start + (k + 1) as f64 * plant_dt };
        let dt = end - current.clock_s;
        samples.push(Sample { state: current, inputs: *inputs, beta1: tag.beta1, beta2: tag.beta2, phase: tag.phase });
        let mut next = step(integrator, &current, inputs, dt, params, op)?;
        next.clock_s = end;
        current = next;
        if stop(&current) {
            break;
        }
    }
    Ok((current, samples))
}

pub fn simulate_interval(
    state: &VehicleState,
    inputs: &PowerInputs,
    duration: f64,
    plant_dt: f64,
    params: &VehicleParams,
    op: OperatingPoint,
    tag: SegmentTag,
) -> Result<(VehicleState, Vec<Sample>), PlantError> {
    simulate_until(state, inputs, duration, plant_dt, params, op, tag, Integrator::Euler, |_| false)
}

impl TrajectoryLog {
    pub fn new(plant_dt_s: f64) -> Self {
        Self { plant_dt_s, samples: Vec::new(), replans: Vec::new() }
    }

    pub fn extend(&mut self, samples: Vec<Sample>) {
        self.samples.extend(samples);
    }

    /// Time each sample's inputs were held; the last sample holds for 0 s.
    pub fn hold_durations(&self) -> impl Iterator<Item = (&Sample, f64)> + '_ {
        self.samples.iter().enumerate().map(move |(k, s)| {
            let dt = self.samples.get(k + 1).map_or(0.0, |n| n.state.clock_s - s.state.clock_s);
            (s, dt)
        })
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Strictly increasing clock and the phase order
    /// driving → waiting → charging → done, each as one contiguous block.
    pub fn check_invariants(&self) -> Result<(), PlantError> {
        for w in self.samples.windows(2) {
            if !(w[1].state.clock_s > w[0].state.clock_s) {
                return Err(PlantError::Inconsistent(format!("clock not increasing at {} s", w[0].state.clock_s)));
            }
            if w[1].phase < w[0].phase {
                return Err(PlantError::Inconsistent(format!(
                    "phase {} follows {} at {} s",
                    w[1].phase.as_str(),
                    w[0].phase.as_str(),
                    w[1].state.clock_s
                )));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), PlantError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "clock_s", "soc", "t_bat_c", "t_cab_c", "q_bat_w", "q_cab_w", "p_chg_w", "p_trac_w", "beta1", "beta2",
            "phase",
        ])?;
        for s in &self.samples {
            let numbers = [
                s.state.clock_s,
                s.state.soc,
                s.state.t_bat_c,
                s.state.t_cab_c,
                s.inputs.q_bat_cool_w,
                s.inputs.q_cab_cool_w,
                s.inputs.p_charge_w,
                s.inputs.p_traction_w,
                s.beta1,
                s.beta2,
            ];
            let mut record: Vec<String> = numbers.iter().map(|v| v.to_string()).collect();
            record.push(s.phase.as_str().to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<(), PlantError> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

/// CV: rectangle-rule integral of the cabin temperature excess over the
/// whole run, °C·s.
pub fn accumulate_cv(log: &TrajectoryLog, t_cab_max_c: f64) -> Result<f64, PlantError> {
    if log.samples.is_empty() {
        return Err(PlantError::EmptyLog);
    }
    Ok(log.hold_durations().map(|(s, dt)| (s.state.t_cab_c - t_cab_max_c).max(0.0) * dt).sum())
}

/// Minutes from the first charging sample to the first sample at or above
/// the target SOC.
pub fn charging_time(log: &TrajectoryLog, soc_targ: f64) -> Result<f64, PlantError> {
    let start = log.samples.iter().position(|s| s.phase == Phase::Charging).ok_or(PlantError::NoChargingPhase)?;
    let t0 = log.samples[start].state.clock_s;
    match log.samples[start..].iter().find(|s| s.state.soc >= soc_targ) {
        Some(s) => Ok((s.state.clock_s - t0) / 60.0),
        None => Err(PlantError::TargetNotReached {
            soc_targ,
            final_soc: log.samples.last().map_or(f64::NAN, |s| s.state.soc),
        }),
    }
}

/// Electrical energy spent on cooling, J.
pub fn cooling_energy(log: &TrajectoryLog, cop: f64) -> f64 {
    log.hold_durations().map(|(s, dt)| s.inputs.cooling_total_w() / cop * dt).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    TargetNotReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `None` when the target was never reached.
    pub t_chg_min: Option<f64>,
    pub cv_c_sec: f64,
    pub t_cab_final_c: f64,
    pub cooling_energy_j: f64,
    pub peak_t_bat_c: f64,
    pub final_soc: f64,
    pub status: RunStatus,
}

pub fn compute_metrics(log: &TrajectoryLog, soc_targ: f64, t_cab_max_c: f64, cop: f64) -> Result<Metrics, PlantError> {
    let last = log.last().ok_or(PlantError::EmptyLog)?;
    let t_chg = match charging_time(log, soc_targ) {
        Ok(t) => Some(t),
        Err(PlantError::TargetNotReached { .. } | PlantError::NoChargingPhase) => None,
        Err(e) => return Err(e),
    };
    Ok(Metrics {
        t_chg_min: t_chg,
        cv_c_sec: accumulate_cv(log, t_cab_max_c)?,
        t_cab_final_c: last.state.t_cab_c,
        cooling_energy_j: cooling_energy(log, cop),
        peak_t_bat_c: log.samples.iter().map(|s| s.state.t_bat_c).fold(f64::NEG_INFINITY, f64::max),
        final_soc: last.state.soc,
        status: if t_chg.is_some() { RunStatus::Converged } else { RunStatus::TargetNotReached },
    })
}
