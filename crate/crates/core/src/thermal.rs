//! Discrete-time thermal model of a single room fed by damper-controlled duct air.
//!
//! The room is treated as a perfectly mixed air volume: over one step a
//! fraction of the room air is replaced by duct air, and internal gains
//! (occupants, equipment) add sensible heat on top. All functions here are
//! pure; the scenario runner owns the mutable state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermalError {
    #[error("damper angle {0} deg is outside [0, 90)")]
    AngleOutOfRange(f64),
    #[error("time step {0} min must be positive")]
    NonPositiveStep(f64),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
}

/// True physical state of one room.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomState {
    pub temperature_c: f64,
    /// Room air volume (m³), strictly positive.
    pub volume_m3: f64,
    pub occupants: u32,
}

/// Supply air conditions in the duct feeding the room.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuctAir {
    pub temperature_c: f64,
    /// Air speed in the duct (m/min), non-negative.
    pub speed_m_per_min: f64,
}

impl Default for DuctAir {
    /// Chilled supply air at the AHU set point (55.1 °F = 12.8 °C), 100 m/min.
    fn default() -> Self {
        Self {
            temperature_c: 12.8,
            speed_m_per_min: 100.0,
        }
    }
}

/// Physical constants of the room/damper assembly, all strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Air density ρ (kg/m³).
    pub air_density_kg_per_m3: f64,
    /// Side length L of the square damper plate (m); open area scales with L².
    pub damper_side_m: f64,
    /// Sensible heat emitted per occupant (W).
    pub heat_per_person_w: f64,
    /// Specific heat capacity of air c_p (J/(kg·K)).
    pub specific_heat_j_per_kg_k: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            air_density_kg_per_m3: 1.225,
            damper_side_m: 0.5,
            heat_per_person_w: 100.0,
            specific_heat_j_per_kg_k: 1005.0,
        }
    }
}

/// One step's worth of duct inflow, before it is applied to the room.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirflowSample {
    pub volumetric_flow_m3_per_min: f64,
    /// Fraction of the room air replaced this step, q·dt/V clamped to [0, 1].
    pub mixing_fraction: f64,
}

/// Volumetric duct-air inflow (m³/min) through a damper opened to `alpha_deg`.
///
/// The open aperture is modeled as L²·tan(α): closed at 0°, growing with the
/// angle. Flow is duct speed times that area.
pub fn volumetric_flow(
    alpha_deg: f64,
    duct: &DuctAir,
    constants: &PhysicalConstants,
) -> Result<f64, ThermalError> {
    if !alpha_deg.is_finite() {
        return Err(ThermalError::NonFinite("alpha_deg"));
    }
    if !(0.0..90.0).contains(&alpha_deg) {
        return Err(ThermalError::AngleOutOfRange(alpha_deg));
    }
    if !duct.speed_m_per_min.is_finite() {
        return Err(ThermalError::NonFinite("duct.speed_m_per_min"));
    }
    let area_m2 = constants.damper_side_m * constants.damper_side_m;
    Ok(duct.speed_m_per_min * area_m2 * alpha_deg.to_radians().tan())
}

/// Internal sensible heat gains (W): occupants plus miscellaneous equipment.
pub fn internal_gain_w(state: &RoomState, constants: &PhysicalConstants, misc_w: f64) -> f64 {
    f64::from(state.occupants) * constants.heat_per_person_w + misc_w
}

/// Flow and mixing fraction for one plant step of `dt_min` minutes.
pub fn airflow_sample(
    alpha_deg: f64,
    duct: &DuctAir,
    constants: &PhysicalConstants,
    volume_m3: f64,
    dt_min: f64,
) -> Result<AirflowSample, ThermalError> {
    if !(dt_min.is_finite() && dt_min > 0.0) {
        return Err(ThermalError::NonPositiveStep(dt_min));
    }
    let flow = volumetric_flow(alpha_deg, duct, constants)?;
    let fraction = (flow * dt_min / volume_m3).min(1.0);
    Ok(AirflowSample {
        volumetric_flow_m3_per_min: flow,
        mixing_fraction: fraction,
    })
}

/// Advance the room by one step of `dt_min` minutes.
///
/// New temperature: T' = T + f·(T_duct − T) + Q·dt·60 / (ρ·V·c_p), where f is
/// the mixing fraction and Q the internal gains in watts. Occupants are left
/// unchanged; occupancy changes are scenario events, not physics.
pub fn step_room(
    state: &RoomState,
    alpha_deg: f64,
    duct: &DuctAir,
    constants: &PhysicalConstants,
    misc_w: f64,
    dt_min: f64,
) -> Result<RoomState, ThermalError> {
    if !state.temperature_c.is_finite() {
        return Err(ThermalError::NonFinite("state.temperature_c"));
    }
    if !duct.temperature_c.is_finite() {
        return Err(ThermalError::NonFinite("duct.temperature_c"));
    }
    if !misc_w.is_finite() {
        return Err(ThermalError::NonFinite("misc_w"));
    }
    let sample = airflow_sample(alpha_deg, duct, constants, state.volume_m3, dt_min)?;
    let gains_w = internal_gain_w(state, constants, misc_w);
    let heat_capacity_j_per_k =
        constants.air_density_kg_per_m3 * state.volume_m3 * constants.specific_heat_j_per_kg_k;
    // Rounding must not push the mix past either endpoint: mixing alone can
    // approach the duct temperature but never cross it.
    let mixed = (state.temperature_c
        + sample.mixing_fraction * (duct.temperature_c - state.temperature_c))
        .clamp(
            state.temperature_c.min(duct.temperature_c),
            state.temperature_c.max(duct.temperature_c),
        );
    let temperature_c = mixed + gains_w * dt_min * 60.0 / heat_capacity_j_per_k;
    Ok(RoomState {
        temperature_c,
        ..*state
    })
}
