//! Scenario files, drive profiles, the case presets and α calibration.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! schema_version = 1
//! name = "nominal"
//! ambient_c = 38.0
//! soc_targ = 0.6
//! p_chg_max_w = 80000.0
//! budget_t_chg_s = 1800.0
//! waiting_s = 120.0
//!
//! [initial]      # soc, t_bat_c, t_cab_c
//! [bounds]       # soc_min, soc_max, t_bat_min_c, t_bat_max_c, t_cab_min_c, t_cab_max_c
//! [drive]        # cycle = "file.csv" (time_s,speed_mps) or power_trace = "file.csv" (time_s,power_w)
//! [battery]      # see models::BatteryParams
//! [cabin]
//! [cooling]
//! [vehicle]
//! [controller]   # see mpc::MpcConfig; [controller.solver] for solver options
//! ```
//!
//! Drive files are resolved relative to the scenario file. Omitting both
//! drive entries gives a charging-only scenario.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{BatteryParams, CabinParams, CoolingParams, VehicleBody, VehicleParams, VehicleState};
use crate::mpc::{self, MpcConfig, MpcError, PreviewKind, WeightSchedule};
use crate::plant::RunStatus;
use crate::transcription::{ProblemContext, StateBounds};

pub const SCHEMA_VERSION: u32 = 1;
pub const GRAVITY_M_S2: f64 = 9.81;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },
    #[error("{}: {message}", path.display())]
    DriveData { path: PathBuf, message: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation { field: field.into(), reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub soc: f64,
    pub t_bat_c: f64,
    pub t_cab_c: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_trace: Option<PathBuf>,
}

/// Piecewise-constant traction power: `power_w[i]` holds on
/// `[breakpoints[i], breakpoints[i + 1])`, zero elsewhere.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TractionProfile {
    breakpoints: Vec<f64>,
    power_w: Vec<f64>,
}

impl TractionProfile {
    pub fn from_steps(breakpoints: Vec<f64>, power_w: Vec<f64>) -> Result<Self, String> {
        if breakpoints.is_empty() && power_w.is_empty() {
            return Ok(Self::default());
        }
        if breakpoints.len() != power_w.len() + 1 {
            return Err(format!("{} breakpoints for {} power steps", breakpoints.len(), power_w.len()));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(format!("time must be strictly increasing ({} then {})", w[0], w[1]));
        }
        if breakpoints.iter().chain(&power_w).any(|v| !v.is_finite()) {
            return Err("non-finite value".into());
        }
        Ok(Self { breakpoints, power_w })
    }

    /// Speed trace to traction power, using the mean speed and the
    /// acceleration of each interval.
    pub fn from_drive_cycle(time_s: &[f64], speed_mps: &[f64], body: &VehicleBody) -> Result<Self, String> {
        if time_s.len() != speed_mps.len() {
            return Err("time and speed lengths differ".into());
        }
        if speed_mps.iter().any(|v| !(*v >= 0.0)) {
            return Err("speeds must be nonnegative".into());
        }
        if time_s.len() < 2 {
            return Self::from_steps(Vec::new(), Vec::new());
        }
        let power = time_s
            .windows(2)
            .zip(speed_mps.windows(2))
            .map(|(t, v)| {
                let accel = (v[1] - v[0]) / (t[1] - t[0]);
                traction_power(0.5 * (v[0] + v[1]), accel, body)
            })
            .collect();
        Self::from_steps(time_s.to_vec(), power)
    }

    pub fn end_s(&self) -> f64 {
        self.breakpoints.last().copied().unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.power_w.is_empty()
    }

    pub fn power_at(&self, t: f64) -> f64 {
        match self.breakpoints.partition_point(|b| *b <= t) {
            0 => 0.0,
            i if i > self.power_w.len() => 0.0,
            i => self.power_w[i - 1],
        }
    }

    pub fn peak_w(&self) -> f64 {
        self.power_w.iter().fold(0.0, |a, p| a.max(*p))
    }

    /// Average power over `[a, b]`; the value at `a` when the window is empty.
    pub fn mean_over(&self, a: f64, b: f64) -> f64 {
        if !(b > a) {
            return self.power_at(a);
        }
        let mut energy = 0.0;
        for (i, p) in self.power_w.iter().enumerate() {
            let lo = self.breakpoints[i].max(a);
            let hi = self.breakpoints[i + 1].min(b);
            if hi > lo {
                energy += p * (hi - lo);
            }
        }
        energy / (b - a)
    }
}

/// Wheel power demand, clipped at zero (no regeneration).
pub fn traction_power(speed_mps: f64, accel_mps2: f64, body: &VehicleBody) -> f64 {
    let drag = 0.5 * body.air_density_kg_m3 * body.drag_area_m2 * speed_mps * speed_mps;
    let rolling = body.rolling_resistance * body.mass_kg * GRAVITY_M_S2;
    let inertial = body.mass_kg * accel_mps2;
    ((drag + rolling + inertial) * speed_mps / body.drivetrain_efficiency).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub ambient_c: f64,
    pub soc_targ: f64,
    pub p_chg_max_w: f64,
    pub budget_t_chg_s: f64,
    /// Time between the end of the drive and the start of charging.
    pub waiting_s: f64,
    pub initial: InitialState,
    pub bounds: StateBounds,
    #[serde(default)]
    pub drive: DriveConfig,
    pub battery: BatteryParams,
    pub cabin: CabinParams,
    pub cooling: CoolingParams,
    pub vehicle: VehicleBody,
    #[serde(default)]
    pub controller: MpcConfig,
    #[serde(skip)]
    traction: TractionProfile,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
struct CycleRow {
    time_s: f64,
    speed_mps: f64,
}

#[derive(Debug, Deserialize)]
struct PowerRow {
    time_s: f64,
    power_w: f64,
}

fn parse_rows<T: for<'de> Deserialize<'de>>(reader: impl std::io::Read, path: &Path) -> Result<Vec<T>, ScenarioError> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader)
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| ScenarioError::DriveData { path: path.to_path_buf(), message: e.to_string() })
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ScenarioError> {
    let file = fs::File::open(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    parse_rows(file, path)
}

/// The shipped nominal scenario and its urban drive cycle.
pub const NOMINAL_TOML: &str = include_str!("../data/nominal.toml");
pub const URBAN_CYCLE_CSV: &str = include_str!("../data/urban_cycle.csv");

/// Directory holding the shipped scenario files.
pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

impl Scenario {
    pub fn params(&self) -> VehicleParams {
        VehicleParams { battery: self.battery, cabin: self.cabin, cooling: self.cooling, vehicle: self.vehicle }
    }

    pub fn problem_context(&self) -> ProblemContext {
        ProblemContext {
            params: self.params(),
            ambient_c: self.ambient_c,
            bounds: self.bounds,
            p_chg_max_w: self.p_chg_max_w,
        }
    }

    pub fn initial_state(&self) -> VehicleState {
        VehicleState {
            soc: self.initial.soc,
            t_bat_c: self.initial.t_bat_c,
            t_cab_c: self.initial.t_cab_c,
            clock_s: 0.0,
        }
    }

    pub fn traction_profile(&self) -> &TractionProfile {
        &self.traction
    }

    pub fn drive_end_s(&self) -> f64 {
        self.traction.end_s()
    }

    pub fn arrival_time_s(&self) -> f64 {
        self.drive_end_s() + self.waiting_s
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Reads the drive files named in `[drive]`.
    pub fn load_drive(&mut self) -> Result<(), ScenarioError> {
        let drive_err = |path: &Path, message: String| ScenarioError::DriveData { path: path.to_path_buf(), message };
        self.traction = match (&self.drive.cycle, &self.drive.power_trace) {
            (Some(_), Some(_)) => return Err(invalid("drive", "give either `cycle` or `power_trace`, not both")),
            (Some(cycle), None) => {
                let path = self.resolve(cycle);
                let rows: Vec<CycleRow> = read_rows(&path)?;
                let t: Vec<f64> = rows.iter().map(|r| r.time_s).collect();
                let v: Vec<f64> = rows.iter().map(|r| r.speed_mps).collect();
                TractionProfile::from_drive_cycle(&t, &v, &self.vehicle).map_err(|m| drive_err(&path, m))?
            }
            (None, Some(trace)) => {
                let path = self.resolve(trace);
                let rows: Vec<PowerRow> = read_rows(&path)?;
                if rows.len() == 1 {
                    return Err(drive_err(&path, "a power trace needs at least two rows".into()));
                }
                let t = rows.iter().map(|r| r.time_s).collect();
                let p = rows.iter().take(rows.len().saturating_sub(1)).map(|r| r.power_w).collect();
                TractionProfile::from_steps(t, p).map_err(|m| drive_err(&path, m))?
            }
            (None, None) => TractionProfile::default(),
        };
        Ok(())
    }

    /// Replaces the drive with an in-memory profile.
    pub fn set_traction_profile(&mut self, profile: TractionProfile) {
        self.drive = DriveConfig::default();
        self.traction = profile;
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid("schema_version", format!("expected {SCHEMA_VERSION}, found {}", self.schema_version)));
        }
        let finite = [
            ("ambient_c", self.ambient_c),
            ("initial.t_bat_c", self.initial.t_bat_c),
            ("initial.t_cab_c", self.initial.t_cab_c),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(invalid(field, "must be finite"));
            }
        }
        let b = &self.bounds;
        let pairs = [
            ("bounds.soc_min/soc_max", b.soc_min, b.soc_max),
            ("bounds.t_bat_min_c/t_bat_max_c", b.t_bat_min_c, b.t_bat_max_c),
            ("bounds.t_cab_min_c/t_cab_max_c", b.t_cab_min_c, b.t_cab_max_c),
        ];
        for (field, lo, hi) in pairs {
            if !(lo < hi) {
                return Err(invalid(field, format!("minimum {lo} must be below maximum {hi}")));
            }
        }
        if !(0.0 <= b.soc_min && b.soc_max <= 1.0) {
            return Err(invalid("bounds.soc_min/soc_max", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.initial.soc) {
            return Err(invalid("initial.soc", "must lie in [0, 1]"));
        }
        if !(b.soc_min <= self.soc_targ && self.soc_targ <= b.soc_max) {
            return Err(invalid("soc_targ", format!("must lie within [{}, {}]", b.soc_min, b.soc_max)));
        }
        if !(self.initial.soc <= self.soc_targ) {
            return Err(invalid("initial.soc", "must not exceed soc_targ"));
        }
        if !(self.p_chg_max_w > 0.0 && self.p_chg_max_w.is_finite()) {
            return Err(invalid("p_chg_max_w", "must be positive"));
        }
        if !(self.budget_t_chg_s > 0.0 && self.budget_t_chg_s.is_finite()) {
            return Err(invalid("budget_t_chg_s", "must be positive"));
        }
        if !(self.waiting_s >= 0.0 && self.waiting_s.is_finite()) {
            return Err(invalid("waiting_s", "must be nonnegative"));
        }
        let envelope = self.traction.peak_w()
            + self.vehicle.aux_base_w
            + self.cooling.q_total_max_w / self.cooling.cop.max(f64::MIN_POSITIVE);
        self.params().validate(envelope).map_err(|e| match e {
            crate::models::ModelError::InvalidParameter { field, reason } => invalid(field, reason),
            other => invalid("params", other.to_string()),
        })?;
        self.validate_controller()
    }

    fn validate_controller(&self) -> Result<(), ScenarioError> {
        let c = &self.controller;
        let positive = [
            ("controller.dt1_s", c.dt1_s),
            ("controller.dt2_max_s", c.dt2_max_s),
            ("controller.driving_period_s", c.driving_period_s),
            ("controller.charging_period_s", c.charging_period_s),
            ("controller.plant_dt_s", c.plant_dt_s),
            ("controller.power_unit_w", c.power_unit_w),
            ("controller.safety_horizon_s", c.safety_horizon_s),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(field, "must be positive"));
            }
        }
        if c.n2 == 0 {
            return Err(invalid("controller.n2", "must be at least 1"));
        }
        if !(c.alpha >= 0.0 && c.alpha.is_finite()) {
            return Err(invalid("controller.alpha", "must be nonnegative"));
        }
        if !(c.temp_backoff_c >= 0.0) {
            return Err(invalid("controller.temp_backoff_c", "must be nonnegative"));
        }
        if c.plant_dt_s > c.charging_period_s.min(c.driving_period_s) {
            return Err(invalid("controller.plant_dt_s", "must not exceed the control periods"));
        }
        c.solver.validate().map_err(|r| invalid("controller.solver", r))
    }

    /// TOML text of the configuration fields.
    pub fn to_toml(&self) -> Result<String, String> {
        toml::to_string_pretty(self).map_err(|e| e.to_string())
    }

    /// Parses and validates scenario TOML text; drive files resolve
    /// against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path, origin: &Path) -> Result<Self, ScenarioError> {
        let mut scenario: Scenario = toml::from_str(text)
            .map_err(|e| ScenarioError::Parse { path: origin.to_path_buf(), message: e.to_string() })?;
        scenario.base_dir = base_dir.to_path_buf();
        scenario.load_drive()?;
        scenario.validate()?;
        Ok(scenario)
    }
}

/// The nominal scenario built from the embedded copies of the shipped files.
pub fn nominal_scenario() -> Result<Scenario, ScenarioError> {
    let origin = Path::new("nominal.toml");
    let mut scenario: Scenario = toml::from_str(NOMINAL_TOML)
        .map_err(|e| ScenarioError::Parse { path: origin.to_path_buf(), message: e.to_string() })?;
    scenario.base_dir = data_dir();
    let cycle_path = Path::new("urban_cycle.csv");
    let rows: Vec<CycleRow> = parse_rows(URBAN_CYCLE_CSV.as_bytes(), cycle_path)?;
    let t: Vec<f64> = rows.iter().map(|r| r.time_s).collect();
    let v: Vec<f64> = rows.iter().map(|r| r.speed_mps).collect();
    scenario.traction = TractionProfile::from_drive_cycle(&t, &v, &scenario.vehicle)
        .map_err(|message| ScenarioError::DriveData { path: cycle_path.to_path_buf(), message })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Scenario::from_toml_str(&text, &base, path)
}

/// Writes the scenario as TOML. Relative drive paths are rewritten as
/// absolute paths when the file moves to another directory.
pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<(), ScenarioError> {
    let io_err = |source| ScenarioError::Io { path: path.to_path_buf(), source };
    let target_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut out = scenario.clone();
    let same_dir = match (fs::canonicalize(&target_dir), fs::canonicalize(&scenario.base_dir)) {
        (Ok(a), Ok(b)) => a == b,
        _ => target_dir == scenario.base_dir,
    };
    if !same_dir {
        for p in [&mut out.drive.cycle, &mut out.drive.power_trace].into_iter().flatten() {
            if p.is_relative() {
                let joined = scenario.base_dir.join(&*p);
                *p = fs::canonicalize(&joined).unwrap_or(joined);
            }
        }
    }
    let text = out.to_toml().map_err(|message| ScenarioError::Parse { path: path.to_path_buf(), message })?;
    fs::write(path, text).map_err(io_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseId {
    I,
    IIa,
    IIb,
    IIc,
    III,
}

impl CaseId {
    pub const ALL: [CaseId; 5] = [CaseId::I, CaseId::IIa, CaseId::IIb, CaseId::IIc, CaseId::III];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::I => "I",
            CaseId::IIa => "IIa",
            CaseId::IIb => "IIb",
            CaseId::IIc => "IIc",
            CaseId::III => "III",
        }
    }

    pub fn preset(self, scenario: &Scenario) -> CasePreset {
        let constant = |beta2| WeightSchedule::Constant { beta1: BATTERY_SLACK_WEIGHT, beta2 };
        let (preview, schedule) = match self {
            CaseId::I => (PreviewKind::AccuratePreview, constant(1e10)),
            CaseId::IIa => (PreviewKind::NoChargePreview, constant(1e10)),
            CaseId::IIb => (PreviewKind::NoChargePreview, constant(1e5)),
            CaseId::IIc => (PreviewKind::NoChargePreview, constant(1e3)),
            CaseId::III => (
                PreviewKind::NoChargePreview,
                WeightSchedule::SocAware {
                    beta1: BATTERY_SLACK_WEIGHT,
                    beta0: 10.0,
                    b: 10.0,
                    soc_min: scenario.initial.soc.min(scenario.soc_targ - 1e-3),
                    soc_targ: scenario.soc_targ,
                },
            ),
        };
        CasePreset { label: self.as_str().to_string(), preview, schedule, hard_budget: self == CaseId::I }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown case `{s}` (expected I, IIa, IIb, IIc or III)"))
    }
}

pub const BATTERY_SLACK_WEIGHT: f64 = 1e11;

/// Preview assumption and weight schedule of one case study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CasePreset {
    pub label: String,
    pub preview: PreviewKind,
    pub schedule: WeightSchedule,
    /// Enforce Σ Δt₂ ≤ budget as a hard constraint.
    pub hard_budget: bool,
}

impl CasePreset {
    /// Blind-preview case with a constant cabin slack weight.
    pub fn no_charge_preview(beta2: f64) -> Self {
        Self {
            label: format!("II(beta2={beta2:e})"),
            preview: PreviewKind::NoChargePreview,
            schedule: WeightSchedule::Constant { beta1: BATTERY_SLACK_WEIGHT, beta2 },
            hard_budget: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("no α in [{lo:e}, {hi:e}] gives a charging time within 1 % of {target_s} s (reached {reached_s:?})")]
    BracketFailure { lo: f64, hi: f64, target_s: f64, reached_s: Option<f64> },
    #[error(transparent)]
    Run(#[from] MpcError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub alpha: f64,
    pub t_chg_s: f64,
    pub evaluations: usize,
}

pub const ALPHA_BRACKET: (f64, f64) = (1e-8, 1e4);
const CALIBRATION_TOLERANCE: f64 = 0.01;
const MAX_BISECTIONS: usize = 40;

/// Log-space bisection on α for the accurate-preview case without the hard
/// budget, until the closed-loop charging time is within 1 % of the target.
pub fn calibrate_alpha(scenario: &Scenario, target_t_chg_s: f64) -> Result<Calibration, CalibrationError> {
    let mut case = CaseId::I.preset(scenario);
    case.hard_budget = false;
    let mut evaluations = 0;
    let mut t_chg = |alpha: f64| -> Result<Option<f64>, MpcError> {
        let mut s = scenario.clone();
        s.controller.alpha = alpha;
        evaluations += 1;
        let out = mpc::run_closed_loop(&s, &case)?;
        let t = match out.metrics.status {
            RunStatus::Converged => out.metrics.t_chg_min.map(|m| m * 60.0),
            RunStatus::TargetNotReached => None,
        };
        info!("calibration: alpha = {alpha:e} -> t_chg = {t:?} s");
        Ok(t)
    };
    let within = |t: f64| (t - target_t_chg_s).abs() <= CALIBRATION_TOLERANCE * target_t_chg_s;
    let (lo, hi) = ALPHA_BRACKET;
    let failure = |reached_s| CalibrationError::BracketFailure { lo, hi, target_s: target_t_chg_s, reached_s };

    // The fastest charging the bracket allows must reach the target.
    let fastest = t_chg(hi)?;
    match fastest {
        Some(t) if within(t) => return Ok(Calibration { alpha: hi, t_chg_s: t, evaluations }),
        Some(t) if t <= target_t_chg_s => {}
        other => return Err(failure(other)),
    }

    let (mut log_lo, mut log_hi) = (lo.log10(), hi.log10());
    let mut closest: Option<f64> = fastest;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (log_lo + log_hi);
        let alpha = 10f64.powf(mid);
        match t_chg(alpha)? {
            Some(t) if within(t) => {
                return Ok(Calibration { alpha, t_chg_s: t, evaluations });
            }
            Some(t) if t < target_t_chg_s => {
                log_hi = mid;
                closest = Some(t);
            }
            Some(t) => {
                log_lo = mid;
                closest = Some(t);
            }
            None => log_lo = mid,
        }
        if log_hi - log_lo < 1e-6 {
            break;
        }
    }
    Err(failure(closest))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body() -> VehicleBody {
        VehicleBody {
            mass_kg: 2500.0,
            drag_area_m2: 2.0,
            air_density_kg_m3: 1.2,
            rolling_resistance: 0.01,
            drivetrain_efficiency: 0.9,
            aux_base_w: 500.0,
        }
    }

    #[test]
    fn traction_power_examples() {
        assert_eq!(traction_power(0.0, 1.0, &body()), 0.0);
        let p = traction_power(15.0, 0.0, &body());
        assert!((p - (270.0 + 245.25) * 15.0 / 0.9).abs() < 1e-9);
        assert!((p - 8587.5).abs() < 1e-9);
        assert_eq!(traction_power(10.0, -5.0, &body()), 0.0);
    }

    #[test]
    fn profile_means() {
        let p = TractionProfile::from_steps(vec![0.0, 10.0, 20.0], vec![100.0, 300.0]).unwrap();
        assert_eq!(p.mean_over(0.0, 20.0), 200.0);
        assert_eq!(p.mean_over(15.0, 25.0), 150.0);
        assert_eq!(p.mean_over(30.0, 40.0), 0.0);
        assert_eq!(p.power_at(10.0), 300.0);
        assert_eq!(p.power_at(20.0), 0.0);
        assert_eq!(p.end_s(), 20.0);
        assert!(TractionProfile::from_steps(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn case_ids_parse_and_print() {
        for c in CaseId::ALL {
            assert_eq!(c.as_str().parse::<CaseId>().unwrap(), c);
        }
        assert!("IV".parse::<CaseId>().is_err());
    }
}
