//! Damper-angle control law and the per-minute receding-horizon loop.
//!
//! Each tick the controller recomputes the damper angle from the latest
//! sensor readings and the time left to the deadline:
//!
//! ```text
//! α = atan( ρ · V_room · (T_target − T_room)
//!         / (Δt_remaining · v_duct · L² · (T_duct − T_room)) )
//! ```
//!
//! Recomputing the full-horizon angle every minute is algebraically the same
//! as chasing per-minute partial objectives on a linear target trajectory, and
//! it absorbs disturbances (occupancy changes, sensing error) as they appear.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::thermal::{DuctAir, PhysicalConstants};

/// Duct/room temperature differences at or below this have no usable cooling
/// or heating capacity.
pub const EPSILON_CAPACITY_C: f64 = 1e-6;

/// Virtual horizon used to hold the achieved target after the deadline.
const HOLD_HORIZON_MIN: f64 = 1.0;

/// Why a requested target cannot be reached with the current duct air.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleReason {
    /// Duct air would move the room temperature away from the target.
    WrongDirection,
    /// The target lies past the duct temperature and can only be approached.
    TargetBeyondDuct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AngleError {
    #[error("duct air cannot move the room: |T_duct - T_room| <= {EPSILON_CAPACITY_C} or no flow")]
    NoCapacity,
    #[error("no time remaining before the deadline")]
    DeadlinePassed,
    #[error("request is infeasible: {0:?}")]
    Infeasible(InfeasibleReason),
}

impl AngleError {
    /// Short token for trace flags.
    pub fn flag(&self) -> &'static str {
        match self {
            AngleError::NoCapacity => "no_capacity",
            AngleError::DeadlinePassed => "deadline_passed",
            AngleError::Infeasible(InfeasibleReason::WrongDirection) => "infeasible_direction",
            AngleError::Infeasible(InfeasibleReason::TargetBeyondDuct) => "target_beyond_duct",
        }
    }
}

/// Which form of the angle law to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleModel {
    /// The law as written above, air-density factor included.
    #[default]
    Standard,
    /// Dimensionally consistent variant with the density factor dropped.
    DensityFree,
}

/// A user's request: reach `target_temperature_c` within `deadline_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlRequest {
    pub target_temperature_c: f64,
    pub deadline_min: f64,
}

/// Commanded damper angle, clamped to the physical range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamperCommand {
    pub alpha_deg: f64,
    /// True when clamping changed the computed angle.
    pub saturated: bool,
    pub issued_at_min: f64,
}

impl DamperCommand {
    /// Damper closed; the actuator's initial state.
    pub fn closed(issued_at_min: f64) -> Self {
        Self {
            alpha_deg: 0.0,
            saturated: false,
            issued_at_min,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    Idle,
    Tracking,
    Holding,
}

impl ControlMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControlMode::Idle => "idle",
            ControlMode::Tracking => "tracking",
            ControlMode::Holding => "holding",
        }
    }
}

/// Controller state between ticks. A value type: `tick` consumes nothing and
/// returns the successor state, so the caller owns the single mutable copy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub active_request: Option<ControlRequest>,
    pub request_time_min: f64,
    pub mode: ControlMode,
    pub last_command: DamperCommand,
    /// Upper damper limit (deg), in (0, 90). Beyond 45° the tan-area model
    /// exceeds the physical plate area, so 45° is the default.
    pub max_alpha_deg: f64,
    /// Hold-mode dead band (°C) around the target, avoids command chatter.
    pub tolerance_c: f64,
    /// Volume of the controlled room (m³); commissioning data, not sensed.
    pub room_volume_m3: f64,
    pub angle_model: AngleModel,
}

impl ControllerState {
    pub fn new(room_volume_m3: f64) -> Self {
        Self {
            active_request: None,
            request_time_min: 0.0,
            mode: ControlMode::Idle,
            last_command: DamperCommand::closed(0.0),
            max_alpha_deg: 45.0,
            tolerance_c: 0.2,
            room_volume_m3,
            angle_model: AngleModel::Standard,
        }
    }

    /// Accept a new request, replacing any prior one, and start tracking.
    pub fn submit_request(&self, request: ControlRequest, now_min: f64) -> Self {
        Self {
            active_request: Some(request),
            request_time_min: now_min,
            mode: ControlMode::Tracking,
            ..*self
        }
    }

    /// One controller period: read, recompute, command.
    pub fn tick(
        &self,
        room_reading_c: f64,
        duct_reading: &DuctAir,
        now_min: f64,
        constants: &PhysicalConstants,
    ) -> TickResult {
        let mut next = *self;
        let request = match self.active_request {
            Some(request) => request,
            None => {
                let command = DamperCommand::closed(now_min);
                next.last_command = command;
                return TickResult {
                    state: next,
                    command,
                    flag: None,
                };
            }
        };

        let deadline_at = self.request_time_min + request.deadline_min;
        if next.mode == ControlMode::Tracking && now_min >= deadline_at {
            next.mode = ControlMode::Holding;
        }

        let dt_remaining_min = match next.mode {
            ControlMode::Tracking => deadline_at - now_min,
            _ => HOLD_HORIZON_MIN,
        };

        if next.mode == ControlMode::Holding
            && (room_reading_c - request.target_temperature_c).abs() <= self.tolerance_c
        {
            // Inside the dead band: leave the damper closed and let the room sit.
            let command = DamperCommand::closed(now_min);
            next.last_command = command;
            return TickResult {
                state: next,
                command,
                flag: None,
            };
        }

        let angle = compute_angle_with(
            self.angle_model,
            request.target_temperature_c,
            room_reading_c,
            duct_reading.temperature_c,
            dt_remaining_min,
            duct_reading.speed_m_per_min,
            self.room_volume_m3,
            constants,
        );
        let (command, flag) = match angle {
            Ok(alpha_deg) => (clamp_command(alpha_deg, self.max_alpha_deg, now_min), None),
            Err(err @ AngleError::Infeasible(InfeasibleReason::TargetBeyondDuct)) => {
                // Duct air points the right way but cannot reach the target:
                // run wide open and get as close as possible.
                (
                    DamperCommand {
                        alpha_deg: self.max_alpha_deg,
                        saturated: true,
                        issued_at_min: now_min,
                    },
                    Some(err),
                )
            }
            Err(err) => (DamperCommand::closed(now_min), Some(err)),
        };
        next.last_command = command;
        TickResult {
            state: next,
            command,
            flag,
        }
    }
}

/// Outcome of one controller tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickResult {
    pub state: ControllerState,
    pub command: DamperCommand,
    /// Set when the angle law had no usable solution; the command is the
    /// fail-safe fallback and the trace records the flag.
    pub flag: Option<AngleError>,
}

/// Unclamped damper angle (deg) for the standard model. See [`compute_angle_with`].
#[allow(clippy::too_many_arguments)]
pub fn compute_angle(
    k_target_c: f64,
    k_in_c: f64,
    k_out_c: f64,
    dt_remaining_min: f64,
    duct_speed_m_per_min: f64,
    volume_m3: f64,
    constants: &PhysicalConstants,
) -> Result<f64, AngleError> {
    compute_angle_with(
        AngleModel::Standard,
        k_target_c,
        k_in_c,
        k_out_c,
        dt_remaining_min,
        duct_speed_m_per_min,
        volume_m3,
        constants,
    )
}

/// Unclamped damper angle (deg) that meets `k_target_c` by the remaining time.
///
/// Evaluates `atan(ρ·V·(target − room) / (Δt·v·L²·(duct − room)))`, in
/// (−90°, 90°), and exactly 0 when the target equals the room reading.
#[allow(clippy::too_many_arguments)]
pub fn compute_angle_with(
    model: AngleModel,
    k_target_c: f64,
    k_in_c: f64,
    k_out_c: f64,
    dt_remaining_min: f64,
    duct_speed_m_per_min: f64,
    volume_m3: f64,
    constants: &PhysicalConstants,
) -> Result<f64, AngleError> {
    if dt_remaining_min <= 0.0 {
        return Err(AngleError::DeadlinePassed);
    }
    let want = k_target_c - k_in_c;
    if want == 0.0 {
        return Ok(0.0);
    }
    let drive = k_out_c - k_in_c;
    let area_m2 = constants.damper_side_m * constants.damper_side_m;
    if drive.abs() <= EPSILON_CAPACITY_C || duct_speed_m_per_min * area_m2 <= 0.0 {
        return Err(AngleError::NoCapacity);
    }
    if want.signum() != drive.signum() {
        return Err(AngleError::Infeasible(InfeasibleReason::WrongDirection));
    }
    if (k_target_c - k_out_c) * (k_in_c - k_out_c) < 0.0 {
        return Err(AngleError::Infeasible(InfeasibleReason::TargetBeyondDuct));
    }
    let density = match model {
        AngleModel::Standard => constants.air_density_kg_per_m3,
        AngleModel::DensityFree => 1.0,
    };
    let tangent =
        density * volume_m3 * want / (dt_remaining_min * duct_speed_m_per_min * area_m2 * drive);
    Ok(tangent.atan().to_degrees())
}

/// Clamp an unclamped angle into [0, max_alpha] and record whether it changed.
/// Negative angles clamp to 0: the damper admits air, it cannot extract it.
pub fn clamp_command(alpha_unclamped_deg: f64, max_alpha_deg: f64, now_min: f64) -> DamperCommand {
    debug_assert!(max_alpha_deg > 0.0 && max_alpha_deg < 90.0);
    let alpha_deg = alpha_unclamped_deg.clamp(0.0, max_alpha_deg);
    DamperCommand {
        alpha_deg,
        saturated: alpha_deg != alpha_unclamped_deg,
        issued_at_min: now_min,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const V_ROOM: f64 = 150.0;

    fn constants() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    fn duct() -> DuctAir {
        DuctAir {
            temperature_c: 12.8,
            speed_m_per_min: 100.0,
        }
    }

    #[test]
    fn zero_error_gives_zero_angle() {
        let alpha = compute_angle(22.0, 22.0, 12.8, 30.0, 100.0, V_ROOM, &constants()).unwrap();
        assert_eq!(alpha, 0.0);
    }

    #[test]
    fn first_tick_angle_matches_hand_value() {
        // tan α = 1.225·150·(21−24) / (30·100·0.25·(12.8−24)) = 551.25/8400.
        let alpha = compute_angle(21.0, 24.0, 12.8, 30.0, 100.0, V_ROOM, &constants()).unwrap();
        assert!((alpha - 3.754).abs() < 0.01, "alpha = {alpha}");
    }

    #[test]
    fn equal_duct_and_room_has_no_capacity() {
        let result = compute_angle(21.0, 24.0, 24.0, 30.0, 100.0, V_ROOM, &constants());
        assert_eq!(result, Err(AngleError::NoCapacity));
    }

    #[test]
    fn stationary_duct_air_has_no_capacity() {
        let result = compute_angle(21.0, 24.0, 12.8, 30.0, 0.0, V_ROOM, &constants());
        assert_eq!(result, Err(AngleError::NoCapacity));
    }

    #[test]
    fn heating_with_cold_duct_is_infeasible() {
        let result = compute_angle(26.0, 24.0, 12.8, 30.0, 100.0, V_ROOM, &constants());
        assert_eq!(
            result,
            Err(AngleError::Infeasible(InfeasibleReason::WrongDirection))
        );
    }

    #[test]
    fn target_below_duct_is_infeasible() {
        let result = compute_angle(10.0, 24.0, 12.8, 30.0, 100.0, V_ROOM, &constants());
        assert_eq!(
            result,
            Err(AngleError::Infeasible(InfeasibleReason::TargetBeyondDuct))
        );
    }

    #[test]
    fn expired_deadline_is_an_error() {
        let result = compute_angle(21.0, 24.0, 12.8, 0.0, 100.0, V_ROOM, &constants());
        assert_eq!(result, Err(AngleError::DeadlinePassed));
    }

    #[test]
    fn doubling_volume_doubles_the_tangent() {
        let a1 = compute_angle(21.0, 24.0, 12.8, 30.0, 100.0, V_ROOM, &constants()).unwrap();
        let a2 = compute_angle(21.0, 24.0, 12.8, 30.0, 100.0, 2.0 * V_ROOM, &constants()).unwrap();
        let ratio = a2.to_radians().tan() / a1.to_radians().tan();
        assert!((ratio - 2.0).abs() < 1e-12, "ratio = {ratio}");
    }

    #[test]
    fn density_free_model_drops_the_density_factor() {
        let standard =
            compute_angle(21.0, 24.0, 12.8, 30.0, 100.0, V_ROOM, &constants()).unwrap();
        let free = compute_angle_with(
            AngleModel::DensityFree,
            21.0,
            24.0,
            12.8,
            30.0,
            100.0,
            V_ROOM,
            &constants(),
        )
        .unwrap();
        let ratio = standard.to_radians().tan() / free.to_radians().tan();
        assert!((ratio - 1.225).abs() < 1e-12);
    }

    #[test]
    fn clamp_passes_in_range_angles_through() {
        let cmd = clamp_command(3.754, 45.0, 0.0);
        assert_eq!(cmd.alpha_deg, 3.754);
        assert!(!cmd.saturated);
    }

    #[test]
    fn clamp_saturates_high_and_low() {
        let high = clamp_command(60.0, 45.0, 5.0);
        assert_eq!(high.alpha_deg, 45.0);
        assert!(high.saturated);
        assert_eq!(high.issued_at_min, 5.0);

        let low = clamp_command(-10.0, 45.0, 0.0);
        assert_eq!(low.alpha_deg, 0.0);
        assert!(low.saturated);
    }

    #[test]
    fn idle_controller_commands_closed() {
        let state = ControllerState::new(V_ROOM);
        let result = state.tick(24.0, &duct(), 0.0, &constants());
        assert_eq!(result.command.alpha_deg, 0.0);
        assert_eq!(result.state.mode, ControlMode::Idle);
        assert!(result.flag.is_none());
    }

    #[test]
    fn first_tracking_tick_reproduces_hand_angle() {
        let state = ControllerState::new(V_ROOM).submit_request(
            ControlRequest {
                target_temperature_c: 21.0,
                deadline_min: 30.0,
            },
            0.0,
        );
        let result = state.tick(24.0, &duct(), 0.0, &constants());
        assert!((result.command.alpha_deg - 3.754).abs() < 0.01);
        assert!(!result.command.saturated);
        assert_eq!(result.state.mode, ControlMode::Tracking);
    }

    #[test]
    fn tracking_at_target_commands_exactly_zero() {
        let state = ControllerState::new(V_ROOM).submit_request(
            ControlRequest {
                target_temperature_c: 21.0,
                deadline_min: 30.0,
            },
            0.0,
        );
        let result = state.tick(21.0, &duct(), 10.0, &constants());
        assert_eq!(result.command.alpha_deg, 0.0);
        assert!(!result.command.saturated);
    }

    #[test]
    fn new_request_replaces_the_old_one() {
        let first = ControlRequest {
            target_temperature_c: 21.0,
            deadline_min: 30.0,
        };
        let second = ControlRequest {
            target_temperature_c: 23.0,
            deadline_min: 10.0,
        };
        let state = ControllerState::new(V_ROOM).submit_request(first, 0.0);
        let state = state.submit_request(second, 5.0);
        assert_eq!(state.active_request, Some(second));
        assert_eq!(state.request_time_min, 5.0);
        assert_eq!(state.mode, ControlMode::Tracking);
    }

    #[test]
    fn holding_resumes_tracking_on_new_request() {
        let state = ControllerState::new(V_ROOM).submit_request(
            ControlRequest {
                target_temperature_c: 21.0,
                deadline_min: 5.0,
            },
            0.0,
        );
        // Past the deadline the mode flips to holding.
        let result = state.tick(21.05, &duct(), 5.0, &constants());
        assert_eq!(result.state.mode, ControlMode::Holding);
        assert_eq!(result.command.alpha_deg, 0.0);

        let resumed = result.state.submit_request(
            ControlRequest {
                target_temperature_c: 22.0,
                deadline_min: 15.0,
            },
            6.0,
        );
        assert_eq!(resumed.mode, ControlMode::Tracking);
    }

    #[test]
    fn holding_corrects_drift_outside_the_band() {
        let state = ControllerState::new(V_ROOM).submit_request(
            ControlRequest {
                target_temperature_c: 21.0,
                deadline_min: 5.0,
            },
            0.0,
        );
        let result = state.tick(21.5, &duct(), 8.0, &constants());
        assert_eq!(result.state.mode, ControlMode::Holding);
        assert!(result.command.alpha_deg > 0.0, "damper should reopen");
        assert!(result.flag.is_none());
    }

    #[test]
    fn infeasible_heating_request_commands_closed_with_flag() {
        let state = ControllerState::new(V_ROOM).submit_request(
            ControlRequest {
                target_temperature_c: 26.0,
                deadline_min: 30.0,
            },
            0.0,
        );
        let result = state.tick(24.0, &duct(), 0.0, &constants());
        assert_eq!(result.command.alpha_deg, 0.0);
        assert_eq!(
            result.flag,
            Some(AngleError::Infeasible(InfeasibleReason::WrongDirection))
        );
    }

    #[test]
    fn unreachable_target_runs_wide_open() {
        let state = ControllerState::new(V_ROOM).submit_request(
            ControlRequest {
                target_temperature_c: 10.0,
                deadline_min: 30.0,
            },
            0.0,
        );
        let result = state.tick(24.0, &duct(), 0.0, &constants());
        assert_eq!(result.command.alpha_deg, 45.0);
        assert!(result.command.saturated);
        assert_eq!(
            result.flag,
            Some(AngleError::Infeasible(InfeasibleReason::TargetBeyondDuct))
        );
    }
}
