//! Lumped dynamics of the battery state of charge, battery temperature and
//! cabin temperature.
//!
//! Sign conventions used throughout the crate:
//!
//! * battery power `P_bat > 0` discharges the pack, `P_bat < 0` charges it;
//! * heat flows (`Q̇_gen`, `Q̇_amb`, loads) are positive when they add heat to
//!   the lumped mass they act on;
//! * cooling powers are nonnegative magnitudes removed from the mass.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("battery power {p_bat_w} W exceeds the deliverable limit of {limit_w} W")]
    DiscriminantNegative { p_bat_w: f64, limit_w: f64 },
    #[error("integration step must be positive, got {0} s")]
    NonPositiveStep(f64),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

fn require_positive(field: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            field,
            reason: format!("must be finite and strictly positive, got {value}"),
        })
    }
}

fn require_nonnegative(field: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { field, reason: format!("must be finite and nonnegative, got {value}") })
    }
}

/// Equivalent-circuit and lumped thermal parameters of the traction battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryParams {
    pub open_circuit_voltage_v: f64,
    pub internal_resistance_ohm: f64,
    /// Charge capacity in coulombs.
    pub charge_capacity_c: f64,
    pub thermal_mass_kg: f64,
    pub specific_heat_j_per_kg_k: f64,
    /// Heat exchange coefficient between pack and ambient air.
    pub ambient_exchange_w_per_k: f64,
}

impl BatteryParams {
    /// Largest discharge power the circuit can deliver, `U_oc² / (4 R_int)`.
    pub fn max_deliverable_power_w(&self) -> f64 {
        self.open_circuit_voltage_v.powi(2) / (4.0 * self.internal_resistance_ohm)
    }

    pub fn heat_capacity_j_per_k(&self) -> f64 {
        self.thermal_mass_kg * self.specific_heat_j_per_kg_k
    }

    /// Checks positivity and that every power magnitude up to `power_envelope_w`
    /// keeps the current equation real.
    pub fn validate(&self, power_envelope_w: f64) -> Result<(), ModelError> {
        require_positive("battery.open_circuit_voltage_v", self.open_circuit_voltage_v)?;
        require_positive("battery.internal_resistance_ohm", self.internal_resistance_ohm)?;
        require_positive("battery.charge_capacity_c", self.charge_capacity_c)?;
        require_positive("battery.thermal_mass_kg", self.thermal_mass_kg)?;
        require_positive("battery.specific_heat_j_per_kg_k", self.specific_heat_j_per_kg_k)?;
        require_positive("battery.ambient_exchange_w_per_k", self.ambient_exchange_w_per_k)?;
        if power_envelope_w > self.max_deliverable_power_w() {
            return Err(ModelError::InvalidParameter {
                field: "battery.open_circuit_voltage_v",
                reason: format!(
                    "power envelope {power_envelope_w} W exceeds U_oc^2/(4 R_int) = {} W",
                    self.max_deliverable_power_w()
                ),
            });
        }
        Ok(())
    }
}

/// Lumped cabin model with simplified load terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CabinParams {
    pub thermal_mass_kg: f64,
    pub specific_heat_j_per_kg_k: f64,
    /// Envelope conductance; convective gain is `conductance · (T_amb − T_cab)`.
    pub convection_conductance_w_per_k: f64,
    pub solar_load_w: f64,
    pub ventilation_load_w: f64,
    pub metabolic_load_per_occupant_w: f64,
    pub occupant_count: u32,
}

impl CabinParams {
    pub fn heat_capacity_j_per_k(&self) -> f64 {
        self.thermal_mass_kg * self.specific_heat_j_per_kg_k
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        require_positive("cabin.thermal_mass_kg", self.thermal_mass_kg)?;
        require_positive("cabin.specific_heat_j_per_kg_k", self.specific_heat_j_per_kg_k)?;
        require_positive("cabin.convection_conductance_w_per_k", self.convection_conductance_w_per_k)?;
        require_nonnegative("cabin.solar_load_w", self.solar_load_w)?;
        require_nonnegative("cabin.ventilation_load_w", self.ventilation_load_w)?;
        require_nonnegative("cabin.metabolic_load_per_occupant_w", self.metabolic_load_per_occupant_w)
    }
}

/// Shared heat-rejection system feeding both the battery and the cabin loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolingParams {
    pub cop: f64,
    pub q_total_max_w: f64,
    pub q_bat_max_w: f64,
    pub q_cab_max_w: f64,
}

impl CoolingParams {
    /// Share of the total capacity each loop may draw on its own.
    pub const DEFAULT_LOOP_SHARE: f64 = 0.83;

    pub fn with_total(q_total_max_w: f64, cop: f64) -> Self {
        Self {
            cop,
            q_total_max_w,
            q_bat_max_w: Self::DEFAULT_LOOP_SHARE * q_total_max_w,
            q_cab_max_w: Self::DEFAULT_LOOP_SHARE * q_total_max_w,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        require_positive("cooling.cop", self.cop)?;
        require_positive("cooling.q_total_max_w", self.q_total_max_w)?;
        require_positive("cooling.q_bat_max_w", self.q_bat_max_w)?;
        require_positive("cooling.q_cab_max_w", self.q_cab_max_w)?;
        if self.q_bat_max_w > self.q_total_max_w {
            return Err(ModelError::InvalidParameter {
                field: "cooling.q_bat_max_w",
                reason: "must not exceed q_total_max_w".into(),
            });
        }
        if self.q_cab_max_w > self.q_total_max_w {
            return Err(ModelError::InvalidParameter {
                field: "cooling.q_cab_max_w",
                reason: "must not exceed q_total_max_w".into(),
            });
        }
        Ok(())
    }
}

/// Longitudinal road-load model and non-HVAC auxiliary draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleBody {
    pub mass_kg: f64,
    pub drag_area_m2: f64,
    pub air_density_kg_m3: f64,
    pub rolling_resistance: f64,
    pub drivetrain_efficiency: f64,
    pub aux_base_w: f64,
}

impl VehicleBody {
    pub fn validate(&self) -> Result<(), ModelError> {
        require_positive("vehicle.mass_kg", self.mass_kg)?;
        require_nonnegative("vehicle.drag_area_m2", self.drag_area_m2)?;
        require_positive("vehicle.air_density_kg_m3", self.air_density_kg_m3)?;
        require_nonnegative("vehicle.rolling_resistance", self.rolling_resistance)?;
        require_positive("vehicle.drivetrain_efficiency", self.drivetrain_efficiency)?;
        if self.drivetrain_efficiency > 1.0 {
            return Err(ModelError::InvalidParameter {
                field: "vehicle.drivetrain_efficiency",
                reason: "must be at most 1".into(),
            });
        }
        require_nonnegative("vehicle.aux_base_w", self.aux_base_w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub battery: BatteryParams,
    pub cabin: CabinParams,
    pub cooling: CoolingParams,
    pub vehicle: VehicleBody,
}

impl VehicleParams {
    pub fn validate(&self, power_envelope_w: f64) -> Result<(), ModelError> {
        self.battery.validate(power_envelope_w)?;
        self.cabin.validate()?;
        self.cooling.validate()?;
        self.vehicle.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub soc: f64,
    pub t_bat_c: f64,
    pub t_cab_c: f64,
    /// Seconds since scenario start.
    pub clock_s: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerInputs {
    pub q_bat_cool_w: f64,
    pub q_cab_cool_w: f64,
    /// Power delivered by the charger (magnitude).
    pub p_charge_w: f64,
    pub p_traction_w: f64,
    pub p_aux_base_w: f64,
}

impl PowerInputs {
    pub fn cooling_total_w(&self) -> f64 {
        self.q_bat_cool_w + self.q_cab_cool_w
    }
}

/// Exogenous conditions that select the dynamics branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub ambient_c: f64,
    /// Plugged in: battery power is `−P_chg + P_aux` and traction is ignored.
    pub charging: bool,
    /// Occupants present; gates the metabolic cabin load.
    pub occupied: bool,
}

impl OperatingPoint {
    pub fn driving(ambient_c: f64) -> Self {
        Self { ambient_c, charging: false, occupied: true }
    }

    /// Occupants leave the vehicle while it charges.
    pub fn charging(ambient_c: f64) -> Self {
        Self { ambient_c, charging: true, occupied: false }
    }
}

/// Auxiliary electrical load: base draw plus the compressor work for cooling.
pub fn auxiliary_power(inputs: &PowerInputs, cooling: &CoolingParams) -> f64 {
    inputs.p_aux_base_w + inputs.cooling_total_w() / cooling.cop
}

pub fn battery_power(inputs: &PowerInputs, cooling: &CoolingParams, charging: bool) -> f64 {
    let p_aux = auxiliary_power(inputs, cooling);
    if charging {
        -inputs.p_charge_w + p_aux
    } else {
        inputs.p_traction_w + p_aux
    }
}

fn discriminant(p_bat: f64, bp: &BatteryParams) -> Result<f64, ModelError> {
    let u = bp.open_circuit_voltage_v;
    let d = u * u - 4.0 * bp.internal_resistance_ohm * p_bat;
    if d < 0.0 || !d.is_finite() {
        return Err(ModelError::DiscriminantNegative { p_bat_w: p_bat, limit_w: bp.max_deliverable_power_w() });
    }
    Ok(d)
}

/// Pack current drawn at terminal power `p_bat`; positive on discharge.
pub fn battery_current(p_bat: f64, bp: &BatteryParams) -> Result<f64, ModelError> {
    let d = discriminant(p_bat, bp)?;
    let u = bp.open_circuit_voltage_v;
    // (U - sqrt(D)) / 2R loses every digit to cancellation for small powers;
    // the conjugate form 2P / (U + sqrt(D)) is algebraically identical.
    Ok(2.0 * p_bat / (u + d.sqrt()))
}

/// `dI/dP = 1 / sqrt(U² − 4 R P)`.
pub fn battery_current_slope(p_bat: f64, bp: &BatteryParams) -> Result<f64, ModelError> {
    Ok(1.0 / discriminant(p_bat, bp)?.sqrt())
}

pub fn soc_rate(p_bat: f64, bp: &BatteryParams) -> Result<f64, ModelError> {
    Ok(-battery_current(p_bat, bp)? / bp.charge_capacity_c)
}

pub fn battery_heat_gen(i_bat: f64, bp: &BatteryParams) -> f64 {
    i_bat * i_bat * bp.internal_resistance_ohm
}

pub fn battery_ambient_exchange(t_bat_c: f64, t_amb_c: f64, bp: &BatteryParams) -> f64 {
    bp.ambient_exchange_w_per_k * (t_amb_c - t_bat_c)
}

/// `Ṫ_bat = (Q̇_gen + Q̇_amb − Q̇_bat) / (m c)`; `q_amb` is heat flowing in.
pub fn battery_temp_rate(q_gen: f64, q_amb: f64, q_cool: f64, bp: &BatteryParams) -> f64 {
    (q_gen + q_amb - q_cool) / bp.heat_capacity_j_per_k()
}

/// Sum of the cabin heat gains (solar, convection, ventilation, metabolic).
pub fn cabin_heat_load(t_cab_c: f64, t_amb_c: f64, cp: &CabinParams, occupied: bool) -> f64 {
    let convection = cp.convection_conductance_w_per_k * (t_amb_c - t_cab_c);
    let metabolic = if occupied { f64::from(cp.occupant_count) * cp.metabolic_load_per_occupant_w } else { 0.0 };
    cp.solar_load_w + convection + cp.ventilation_load_w + metabolic
}

pub fn cabin_temp_rate(t_cab_c: f64, t_amb_c: f64, q_cool: f64, cp: &CabinParams, occupied: bool) -> f64 {
    (cabin_heat_load(t_cab_c, t_amb_c, cp, occupied) - q_cool) / cp.heat_capacity_j_per_k()
}

/// Time derivatives of `(SOC, T_bat, T_cab)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRates {
    pub soc: f64,
    pub t_bat: f64,
    pub t_cab: f64,
}

pub fn state_rates(
    state: &VehicleState,
    inputs: &PowerInputs,
    params: &VehicleParams,
    op: OperatingPoint,
) -> Result<StateRates, ModelError> {
    let bp = &params.battery;
    let p_bat = battery_power(inputs, &params.cooling, op.charging);
    let current = battery_current(p_bat, bp)?;
    let q_gen = battery_heat_gen(current, bp);
    let q_amb = battery_ambient_exchange(state.t_bat_c, op.ambient_c, bp);
    Ok(StateRates {
        soc: -current / bp.charge_capacity_c,
        t_bat: battery_temp_rate(q_gen, q_amb, inputs.q_bat_cool_w, bp),
        t_cab: cabin_temp_rate(state.t_cab_c, op.ambient_c, inputs.q_cab_cool_w, &params.cabin, op.occupied),
    })
}

fn advance(state: &VehicleState, rates: &StateRates, dt: f64) -> VehicleState {
    VehicleState {
        soc: state.soc + rates.soc * dt,
        t_bat_c: state.t_bat_c + rates.t_bat * dt,
        t_cab_c: state.t_cab_c + rates.t_cab * dt,
        clock_s: state.clock_s + dt,
    }
}

/// Forward-Euler step, the same discretization the controller's defect
/// constraints use.
pub fn euler_step(
    state: &VehicleState,
    inputs: &PowerInputs,
    dt: f64,
    params: &VehicleParams,
    op: OperatingPoint,
) -> Result<VehicleState, ModelError> {
    if !(dt > 0.0) {
        return Err(ModelError::NonPositiveStep(dt));
    }
    let rates = state_rates(state, inputs, params, op)?;
    Ok(advance(state, &rates, dt))
}

/// Classical fourth-order Runge-Kutta step, for plant/model mismatch studies.
pub fn rk4_step(
    state: &VehicleState,
    inputs: &PowerInputs,
    dt: f64,
    params: &VehicleParams,
    op: OperatingPoint,
) -> Result<VehicleState, ModelError> {
    if !(dt > 0.0) {
        return Err(ModelError::NonPositiveStep(dt));
    }
    let k1 = state_rates(state, inputs, params, op)?;
    let k2 = state_rates(&advance(state, &k1, 0.5 * dt), inputs, params, op)?;
    let k3 = state_rates(&advance(state, &k2, 0.5 * dt), inputs, params, op)?;
    let k4 = state_rates(&advance(state, &k3, dt), inputs, params, op)?;
    let blended = StateRates {
        soc: (k1.soc + 2.0 * k2.soc + 2.0 * k3.soc + k4.soc) / 6.0,
        t_bat: (k1.t_bat + 2.0 * k2.t_bat + 2.0 * k3.t_bat + k4.t_bat) / 6.0,
        t_cab: (k1.t_cab + 2.0 * k2.t_cab + 2.0 * k3.t_cab + k4.t_cab) / 6.0,
    };
    Ok(advance(state, &blended, dt))
}
