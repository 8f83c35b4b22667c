//! Shrinking-horizon controller and the closed loop around the plant.
//!
//! Before charger arrival the horizon holds `n1 = ⌈(arrival − clock)/dt1⌉`
//! driving samples (waiting counts as driving at zero traction) followed by
//! `n2` charging samples of free length. After arrival only the charging
//! samples remain and their lengths shrink as the target SOC approaches.

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{OperatingPoint, PowerInputs, VehicleState};
use crate::plant::{self, Integrator, Metrics, Phase, PlantError, ReplanRecord, Sample, SegmentTag, TrajectoryLog};
use crate::scenario::{CasePreset, Scenario, TractionProfile};
use crate::solver::{self, warm_start, Solution, SolveStatus, SolverOptions};
use crate::transcription::{build_nlp, HorizonSpec, NlpProblem, ProblemContext, TranscriptionError, Weights};

#[derive(Debug, Error)]
pub enum MpcError {
    #[error("β₂ schedule is constant; the SOC-aware formula does not apply")]
    WrongScheduleKind,
    #[error("invalid weight schedule: {0}")]
    InvalidSchedule(String),
    #[error(transparent)]
    Transcription(#[from] TranscriptionError),
    #[error("solve at t = {clock_s} s ended with {status:?}: {message}")]
    Solver { clock_s: f64, status: SolveStatus, message: String },
    #[error(transparent)]
    Plant(#[from] PlantError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreviewKind {
    /// The charging event is part of every horizon from the start.
    AccuratePreview,
    /// The charging event enters the horizon only on arrival.
    NoChargePreview,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreviewModel {
    pub kind: PreviewKind,
    /// Clock at which charging can begin, including any wait at the charger.
    pub arrival_time_s: f64,
    /// Predicted traction demand; zero outside the drive.
    pub traction: TractionProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSchedule {
    Constant {
        beta1: f64,
        beta2: f64,
    },
    /// `β₂ = β₀·10^(b (SOC − SOC_min)/(SOC_targ − SOC_min))`, SOC clamped.
    SocAware {
        beta1: f64,
        beta0: f64,
        b: f64,
        soc_min: f64,
        soc_targ: f64,
    },
}

impl WeightSchedule {
    pub fn validate(&self) -> Result<(), MpcError> {
        match *self {
            WeightSchedule::Constant { beta1, beta2 } => {
                if !(beta1 >= 0.0 && beta2 >= 0.0) {
                    return Err(MpcError::InvalidSchedule("weights must be nonnegative".into()));
                }
            }
            WeightSchedule::SocAware { beta1, beta0, soc_min, soc_targ, .. } => {
                if !(beta0 > 0.0 && beta1 >= 0.0) {
                    return Err(MpcError::InvalidSchedule("beta0 must be positive".into()));
                }
                if !(soc_targ > soc_min) {
                    return Err(MpcError::InvalidSchedule(format!(
                        "soc_targ {soc_targ} must exceed soc_min {soc_min}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn beta1(&self) -> f64 {
        match *self {
            WeightSchedule::Constant { beta1, .. } | WeightSchedule::SocAware { beta1, .. } => beta1,
        }
    }

    /// β₂ while occupants are aboard: the constant value, or the strict end
    /// of the SOC-aware range.
    pub fn occupied_beta2(&self) -> f64 {
        match *self {
            WeightSchedule::Constant { beta2, .. } => beta2,
            WeightSchedule::SocAware { beta0, b, .. } => beta0 * 10f64.powf(b),
        }
    }

    /// Moves the lower SOC anchor of a SOC-aware schedule to `soc`, kept
    /// strictly below the target.
    pub fn anchored_at(&self, soc: f64) -> Self {
        match *self {
            WeightSchedule::SocAware { beta1, beta0, b, soc_targ, .. } => {
                WeightSchedule::SocAware { beta1, beta0, b, soc_min: soc.min(soc_targ - 1e-3), soc_targ }
            }
            constant => constant,
        }
    }

    /// β₂ in force at the given SOC.
    pub fn beta2_at(&self, soc: f64) -> f64 {
        match *self {
            WeightSchedule::Constant { beta2, .. } => beta2,
            WeightSchedule::SocAware { .. } => beta2_of_soc(soc, self).expect("schedule kind checked"),
        }
    }
}

pub fn beta2_of_soc(soc: f64, schedule: &WeightSchedule) -> Result<f64, MpcError> {
    match *schedule {
        WeightSchedule::Constant { .. } => Err(MpcError::WrongScheduleKind),
        WeightSchedule::SocAware { beta0, b, soc_min, soc_targ, .. } => {
            let progress = (soc.clamp(soc_min, soc_targ) - soc_min) / (soc_targ - soc_min);
            Ok(beta0 * 10f64.powf(b * progress))
        }
    }
}

/// Controller and simulation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcConfig {
    pub dt1_s: f64,
    pub n2: usize,
    pub dt2_max_s: f64,
    /// Re-plan period before arrival.
    pub driving_period_s: f64,
    /// Re-plan period while charging.
    pub charging_period_s: f64,
    pub plant_dt_s: f64,
    pub alpha: f64,
    /// Power unit of the cooling cost term, W.
    pub power_unit_w: f64,
    /// Margin subtracted from the temperature upper bounds inside the controller.
    pub temp_backoff_c: f64,
    /// The run stops unfinished at this clock.
    pub safety_horizon_s: f64,
    pub integrator: Integrator,
    pub solver: SolverOptions,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            dt1_s: 30.0,
            n2: 20,
            dt2_max_s: 180.0,
            driving_period_s: 30.0,
            charging_period_s: 10.0,
            plant_dt_s: 1.0,
            alpha: 1e-2,
            power_unit_w: 1.0,
            temp_backoff_c: 0.0,
            safety_horizon_s: 4.0 * 3600.0,
            integrator: Integrator::Euler,
            solver: SolverOptions::default(),
        }
    }
}

pub fn make_horizon(clock_s: f64, preview: &PreviewModel, cfg: &MpcConfig, soc_targ: f64) -> HorizonSpec {
    let remaining = preview.arrival_time_s - clock_s;
    let (n1, charging_in_horizon) = if remaining <= 1e-9 {
        (0, true)
    } else {
        let n1 = (remaining / cfg.dt1_s - 1e-9).ceil() as usize;
        (n1, preview.kind == PreviewKind::AccuratePreview)
    };
    let traction_preview_w = (0..n1)
        .map(|i| {
            let a = clock_s + i as f64 * cfg.dt1_s;
            let b = (a + cfg.dt1_s).min(preview.arrival_time_s);
            preview.traction.mean_over(a, b)
        })
        .collect();
    HorizonSpec {
        n1,
        dt1_s: cfg.dt1_s,
        n2: cfg.n2,
        dt2_max_s: cfg.dt2_max_s,
        traction_preview_w,
        soc_targ,
        charging_in_horizon,
    }
}

/// Result of one re-plan.
#[derive(Debug, Clone)]
pub struct Plan {
    /// First-sample controls, projected onto the actuator limits.
    pub inputs: PowerInputs,
    pub predicted_t_chg_s: Option<f64>,
    pub beta2: f64,
    pub solution: Solution,
    pub nlp: NlpProblem,
}

/// Receding-horizon controller state carried between re-plans.
#[derive(Debug, Clone)]
pub struct Controller {
    ctx: ProblemContext,
    cfg: MpcConfig,
    preview: PreviewModel,
    schedule: WeightSchedule,
    soc_targ: f64,
    budget_t_chg_s: Option<f64>,
    anchored: bool,
    previous: Option<(NlpProblem, Solution)>,
}

impl Controller {
    /// `ctx` carries the true bounds; the configured back-off is applied here.
    pub fn new(
        ctx: &ProblemContext,
        cfg: &MpcConfig,
        preview: PreviewModel,
        schedule: WeightSchedule,
        soc_targ: f64,
        budget_t_chg_s: Option<f64>,
    ) -> Result<Self, MpcError> {
        schedule.validate()?;
        let mut ctx = ctx.clone();
        ctx.bounds.t_bat_max_c -= cfg.temp_backoff_c;
        ctx.bounds.t_cab_max_c -= cfg.temp_backoff_c;
        Ok(Self { ctx, cfg: cfg.clone(), preview, schedule, soc_targ, budget_t_chg_s, anchored: false, previous: None })
    }

    /// The SOC-aware relaxation applies only once the occupants have left,
    /// i.e. from arrival at the charger, anchored at the arrival SOC.
    fn weights(&self, state: &VehicleState, budget: Option<f64>) -> Weights {
        let beta2 = if state.clock_s < self.preview.arrival_time_s - 1e-9 {
            self.schedule.occupied_beta2()
        } else {
            self.schedule.beta2_at(state.soc)
        };
        Weights {
            alpha: self.cfg.alpha,
            beta1: self.schedule.beta1(),
            beta2,
            budget_t_chg_s: budget,
            power_unit_w: self.cfg.power_unit_w,
        }
    }

    fn remaining_budget(&self, clock_s: f64) -> Option<f64> {
        let budget = self.budget_t_chg_s?;
        let remaining = budget - (clock_s - self.preview.arrival_time_s).max(0.0);
        (remaining > self.cfg.charging_period_s).then_some(remaining)
    }

    fn attempt(&self, nlp: &NlpProblem, warm: bool) -> Result<Solution, MpcError> {
        let mut multipliers = None;
        let z0 = match (&self.previous, warm) {
            (Some((old, sol)), true) => match warm_start(sol, old, nlp) {
                Ok(z) => {
                    multipliers = Some(&sol.multipliers);
                    z
                }
                Err(e) => {
                    debug!("cold start: {e}");
                    nlp.initial_guess().map_err(TranscriptionError::from)?
                }
            },
            _ => nlp.initial_guess().map_err(TranscriptionError::from)?,
        };
        Ok(solver::solve_from(nlp, &z0, multipliers, &self.cfg.solver))
    }

    /// Builds and solves the horizon problem at `state`, warm-starting from
    /// the previous re-plan when the layouts are compatible.
    pub fn plan(&mut self, state: &VehicleState) -> Result<Plan, MpcError> {
        let clock = state.clock_s;
        if !self.anchored && clock >= self.preview.arrival_time_s - 1e-9 {
            self.schedule = self.schedule.anchored_at(state.soc);
            self.anchored = true;
        }
        let spec = make_horizon(clock, &self.preview, &self.cfg, self.soc_targ);
        let budget = if spec.charging_in_horizon { self.remaining_budget(clock) } else { None };

        let mut nlp = build_nlp(&spec, state, &self.ctx, &self.weights(state, budget))?;
        let mut solution = self.attempt(&nlp, true)?;
        let failed = |s: &Solution| matches!(s.status, SolveStatus::Infeasible | SolveStatus::EvaluationError);
        if failed(&solution) && budget.is_some() {
            warn!("t = {clock} s: {:?} with the charging budget; retrying without it", solution.status);
            nlp = build_nlp(&spec, state, &self.ctx, &self.weights(state, None))?;
            solution = self.attempt(&nlp, true)?;
        }
        if failed(&solution) && self.previous.is_some() {
            warn!("t = {clock} s: {:?} from warm start; retrying cold", solution.status);
            solution = self.attempt(&nlp, false)?;
        }
        if failed(&solution) {
            return Err(MpcError::Solver {
                clock_s: clock,
                status: solution.status,
                message: solution.message.clone().unwrap_or_default(),
            });
        }
        if solution.status == SolveStatus::MaxIterations {
            warn!(
                "t = {clock} s: solver hit its iteration limit (stationarity {:.1e}, infeasibility {:.1e})",
                solution.kkt.stationarity,
                solution.kkt.infeasibility()
            );
        }

        let inputs = self.project(nlp.first_inputs(&solution.z_star));
        let plan = Plan {
            inputs,
            predicted_t_chg_s: nlp.predicted_t_chg(&solution.z_star),
            beta2: nlp.weights().beta2,
            solution: solution.clone(),
            nlp: nlp.clone(),
        };
        self.previous = Some((nlp, solution));
        Ok(plan)
    }

    /// Clamps controls into their boxes and scales the coolers down onto the
    /// shared capacity if the solver left them marginally above it.
    fn project(&self, mut u: PowerInputs) -> PowerInputs {
        let cool = &self.ctx.params.cooling;
        u.q_bat_cool_w = u.q_bat_cool_w.clamp(0.0, cool.q_bat_max_w);
        u.q_cab_cool_w = u.q_cab_cool_w.clamp(0.0, cool.q_cab_max_w);
        u.p_charge_w = u.p_charge_w.clamp(0.0, self.ctx.p_chg_max_w);
        let total = u.q_bat_cool_w + u.q_cab_cool_w;
        if total > cool.q_total_max_w {
            let shrink = cool.q_total_max_w / total;
            u.q_bat_cool_w *= shrink;
            u.q_cab_cool_w *= shrink;
        }
        u
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: TrajectoryLog,
    pub metrics: Metrics,
}

/// Closed-loop simulation of one case: re-plan, hold the first controls over
/// the control period, repeat until the plant SOC reaches the target while
/// charging or the safety horizon elapses.
pub fn run_closed_loop(scenario: &Scenario, case: &CasePreset) -> Result<RunOutput, MpcError> {
    let cfg = &scenario.controller;
    let ctx = scenario.problem_context();
    let preview = PreviewModel {
        kind: case.preview,
        arrival_time_s: scenario.arrival_time_s(),
        traction: scenario.traction_profile().clone(),
    };
    let budget = case.hard_budget.then_some(scenario.budget_t_chg_s);
    let mut controller = Controller::new(&ctx, cfg, preview.clone(), case.schedule, scenario.soc_targ, budget)?;

    let drive_end = scenario.drive_end_s();
    let arrival = preview.arrival_time_s;
    let params = &ctx.params;
    let mut state = scenario.initial_state();
    let mut log = TrajectoryLog::new(cfg.plant_dt_s);
    let beta1 = case.schedule.beta1();
    let mut last_beta2 = case.schedule.occupied_beta2();

    if state.clock_s >= arrival && state.soc >= scenario.soc_targ {
        log.samples.push(Sample {
            state,
            inputs: PowerInputs::default(),
            beta1,
            beta2: last_beta2,
            phase: Phase::Charging,
        });
        let metrics = plant::compute_metrics(&log, scenario.soc_targ, ctx.bounds.t_cab_max_c, params.cooling.cop)?;
        return Ok(RunOutput { log, metrics });
    }

    while state.clock_s < cfg.safety_horizon_s {
        let clock = state.clock_s;
        let (phase, boundary, period) = if clock < drive_end - 1e-9 {
            (Phase::Driving, drive_end, cfg.driving_period_s)
        } else if clock < arrival - 1e-9 {
            (Phase::Waiting, arrival, cfg.driving_period_s)
        } else {
            (Phase::Charging, f64::INFINITY, cfg.charging_period_s)
        };
        let charging = phase == Phase::Charging;

        let plan = controller.plan(&state)?;
        last_beta2 = plan.beta2;
        log.replans.push(ReplanRecord {
            clock_s: clock,
            n1: plan.nlp.spec().n1,
            n2: plan.nlp.layout().n2,
            charging_in_horizon: plan.nlp.spec().charging_in_horizon,
            beta2: plan.beta2,
            predicted_t_chg_s: plan.predicted_t_chg_s,
            solver_status: format!("{:?}", plan.solution.status),
            outer_iters: plan.solution.outer_iters,
            inner_iters: plan.solution.inner_iters,
        });

        let duration = period.min(boundary - clock).min(cfg.safety_horizon_s - clock);
        let mut inputs = plan.inputs;
        inputs.p_traction_w = match phase {
            Phase::Driving => scenario.traction_profile().mean_over(clock, clock + duration),
            _ => 0.0,
        };
        if !charging {
            inputs.p_charge_w = 0.0;
        }
        let op = if charging {
            OperatingPoint::charging(scenario.ambient_c)
        } else {
            OperatingPoint::driving(scenario.ambient_c)
        };
        let tag = SegmentTag { phase, beta1, beta2: plan.beta2 };
        let target = scenario.soc_targ;
        let (next, samples) = plant::simulate_until(
            &state,
            &inputs,
            duration,
            cfg.plant_dt_s.min(duration),
            params,
            op,
            tag,
            cfg.integrator,
            |s| charging && s.soc >= target,
        )?;
        log.extend(samples);
        state = next;
        if charging && state.soc >= target {
            break;
        }
    }

    log.samples.push(Sample { state, inputs: PowerInputs::default(), beta1, beta2: last_beta2, phase: Phase::Done });
    let metrics = plant::compute_metrics(&log, scenario.soc_targ, ctx.bounds.t_cab_max_c, params.cooling.cop)?;
    Ok(RunOutput { log, metrics })
}
