//! Scenario configuration, occupancy event generation, and the closed-loop
//! simulation driver.
//!
//! A scenario file is a TOML document with sections `[room]`, `[duct]`,
//! `[constants]`, `[request]`, `[occupancy]`, `[network]`, and `[sim]`; key
//! names carry their units (`volume_m3`, `deadline_min`). `[room]` and
//! `[request]` are required, everything else has defaults. Unknown keys are
//! rejected.

mod occupancy;
mod run;

pub use occupancy::{generate_occupancy, OccupancyEvent, OccupancySpec};
pub use run::{
    run_scenario, run_scenario_direct, write_event_log_csv, write_summary, write_trace_csv,
    RunResult, RunSummary, TraceRow, TRACE_HEADER,
};

use serde::Deserialize;
use thiserror::Error;

use crate::controller::{AngleModel, ControlRequest};
use crate::thermal::{DuctAir, PhysicalConstants, RoomState};
use crate::wsn::{NetLink, NoiseModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    /// TOML syntax or type error; the message carries the offending key/line.
    #[error("scenario syntax: {0}")]
    Syntax(String),
    #[error("scenario is missing required sections/keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),
    #[error("invalid scenario: {key}: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Fully validated simulation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub room: RoomState,
    /// Constant miscellaneous heat input (W), e.g. equipment.
    pub misc_gain_w: f64,
    pub duct: DuctAir,
    pub constants: PhysicalConstants,
    pub request: ControlRequest,
    pub occupancy: OccupancySpec,
    pub network: NetworkConfig,
    pub horizon_min: u32,
    /// Plant integration step; divides the 1-minute controller period.
    pub dt_min: f64,
    pub seed: u64,
    pub max_alpha_deg: f64,
    pub tolerance_c: f64,
    pub angle_model: AngleModel,
}

/// Link and sensor models for the star network. Defaults are ideal, which
/// makes the networked loop behave exactly like direct coupling.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub room_link: NetLink,
    pub duct_link: NetLink,
    pub actuator_link: NetLink,
    pub room_sensor: NoiseModel,
    pub duct_sensor: NoiseModel,
}

// Raw file shape: everything optional so missing sections can be reported
// together, with defaults applied afterwards.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    room: Option<RoomSection>,
    duct: Option<DuctSection>,
    constants: Option<ConstantsSection>,
    request: Option<RequestSection>,
    occupancy: Option<OccupancySection>,
    network: Option<NetworkConfig>,
    sim: Option<SimSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoomSection {
    volume_m3: Option<f64>,
    initial_temperature_c: Option<f64>,
    #[serde(default)]
    occupants: u32,
    #[serde(default)]
    misc_gain_w: f64,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DuctSection {
    temperature_c: f64,
    speed_m_per_min: f64,
}

impl Default for DuctSection {
    fn default() -> Self {
        let duct = DuctAir::default();
        Self {
            temperature_c: duct.temperature_c,
            speed_m_per_min: duct.speed_m_per_min,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConstantsSection {
    air_density_kg_per_m3: f64,
    damper_side_m: f64,
    heat_per_person_w: f64,
    specific_heat_j_per_kg_k: f64,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        let constants = PhysicalConstants::default();
        Self {
            air_density_kg_per_m3: constants.air_density_kg_per_m3,
            damper_side_m: constants.damper_side_m,
            heat_per_person_w: constants.heat_per_person_w,
            specific_heat_j_per_kg_k: constants.specific_heat_j_per_kg_k,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RequestSection {
    target_c: Option<f64>,
    deadline_min: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OccupancySection {
    events: Option<Vec<OccupancyEvent>>,
    arrival_rate_per_hour: Option<f64>,
    departure_rate_per_hour: Option<f64>,
    max_occupants: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimSection {
    horizon_min: Option<u32>,
    dt_min: f64,
    seed: u64,
    max_alpha_deg: f64,
    tolerance_c: f64,
    angle_model: AngleModel,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            horizon_min: None,
            dt_min: 1.0,
            seed: 0,
            max_alpha_deg: 45.0,
            tolerance_c: 0.2,
            angle_model: AngleModel::Standard,
        }
    }
}

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc =
        toml::from_str(text).map_err(|err| ScenarioError::Syntax(err.to_string()))?;

    let mut missing = Vec::new();
    let room_section = doc.room.unwrap_or(RoomSection {
        volume_m3: None,
        initial_temperature_c: None,
        occupants: 0,
        misc_gain_w: 0.0,
    });
    if room_section.volume_m3.is_none() {
        missing.push("room.volume_m3".to_string());
    }
    if room_section.initial_temperature_c.is_none() {
        missing.push("room.initial_temperature_c".to_string());
    }
    let request_section = doc.request.unwrap_or(RequestSection {
        target_c: None,
        deadline_min: None,
    });
    if request_section.target_c.is_none() {
        missing.push("request.target_c".to_string());
    }
    if request_section.deadline_min.is_none() {
        missing.push("request.deadline_min".to_string());
    }
    if !missing.is_empty() {
        return Err(ScenarioError::MissingKeys(missing));
    }

    let duct_section = doc.duct.unwrap_or_default();
    let constants_section = doc.constants.unwrap_or_default();
    let occupancy_section = doc.occupancy.unwrap_or_default();
    let sim = doc.sim.unwrap_or_default();

    let request = ControlRequest {
        target_temperature_c: request_section.target_c.expect("checked"),
        deadline_min: request_section.deadline_min.expect("checked"),
    };
    let horizon_min = sim
        .horizon_min
        .unwrap_or_else(|| request.deadline_min.ceil() as u32 + 10);

    let scenario = Scenario {
        room: RoomState {
            temperature_c: room_section.initial_temperature_c.expect("checked"),
            volume_m3: room_section.volume_m3.expect("checked"),
            occupants: room_section.occupants,
        },
        misc_gain_w: room_section.misc_gain_w,
        duct: DuctAir {
            temperature_c: duct_section.temperature_c,
            speed_m_per_min: duct_section.speed_m_per_min,
        },
        constants: PhysicalConstants {
            air_density_kg_per_m3: constants_section.air_density_kg_per_m3,
            damper_side_m: constants_section.damper_side_m,
            heat_per_person_w: constants_section.heat_per_person_w,
            specific_heat_j_per_kg_k: constants_section.specific_heat_j_per_kg_k,
        },
        request,
        occupancy: occupancy_spec(occupancy_section)?,
        network: doc.network.unwrap_or_default(),
        horizon_min,
        dt_min: sim.dt_min,
        seed: sim.seed,
        max_alpha_deg: sim.max_alpha_deg,
        tolerance_c: sim.tolerance_c,
        angle_model: sim.angle_model,
    };
    scenario.validate()?;
    Ok(scenario)
}

fn occupancy_spec(section: OccupancySection) -> Result<OccupancySpec, ScenarioError> {
    let has_rates =
        section.arrival_rate_per_hour.is_some() || section.departure_rate_per_hour.is_some();
    match (section.events, has_rates) {
        (Some(_), true) => Err(invalid(
            "occupancy",
            "give either explicit events or arrival/departure rates, not both",
        )),
        (Some(events), false) => Ok(OccupancySpec::Explicit(events)),
        (None, true) => {
            let max_occupants = section.max_occupants.ok_or_else(|| {
                invalid("occupancy.max_occupants", "required with random occupancy")
            })?;
            Ok(OccupancySpec::Random {
                arrival_rate_per_hour: section.arrival_rate_per_hour.unwrap_or(0.0),
                departure_rate_per_hour: section.departure_rate_per_hour.unwrap_or(0.0),
                max_occupants,
            })
        }
        (None, false) => Ok(OccupancySpec::Explicit(Vec::new())),
    }
}

impl Scenario {
    /// Check every cross-field invariant. `parse_scenario` calls this; call
    /// it directly on hand-built scenarios.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.room.volume_m3.is_finite() && self.room.volume_m3 > 0.0) {
            return Err(invalid("room.volume_m3", "must be > 0"));
        }
        if !self.room.temperature_c.is_finite() {
            return Err(invalid("room.initial_temperature_c", "must be finite"));
        }
        if !(self.misc_gain_w.is_finite() && self.misc_gain_w >= 0.0) {
            return Err(invalid("room.misc_gain_w", "must be >= 0"));
        }
        if !self.duct.temperature_c.is_finite() {
            return Err(invalid("duct.temperature_c", "must be finite"));
        }
        if !(self.duct.speed_m_per_min.is_finite() && self.duct.speed_m_per_min >= 0.0) {
            return Err(invalid("duct.speed_m_per_min", "must be >= 0"));
        }
        for (key, value) in [
            (
                "constants.air_density_kg_per_m3",
                self.constants.air_density_kg_per_m3,
            ),
            ("constants.damper_side_m", self.constants.damper_side_m),
            ("constants.heat_per_person_w", self.constants.heat_per_person_w),
            (
                "constants.specific_heat_j_per_kg_k",
                self.constants.specific_heat_j_per_kg_k,
            ),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(key, "must be > 0"));
            }
        }
        if !self.request.target_temperature_c.is_finite() {
            return Err(invalid("request.target_c", "must be finite"));
        }
        if !(self.request.deadline_min.is_finite() && self.request.deadline_min > 0.0) {
            return Err(invalid("request.deadline_min", "must be > 0"));
        }
        if (self.horizon_min as f64) < self.request.deadline_min {
            return Err(invalid(
                "sim.horizon_min",
                "must be at least request.deadline_min",
            ));
        }
        let substeps = (1.0 / self.dt_min).round();
        if !(self.dt_min.is_finite()
            && self.dt_min > 0.0
            && substeps >= 1.0
            && (substeps * self.dt_min - 1.0).abs() < 1e-9)
        {
            return Err(invalid(
                "sim.dt_min",
                "must divide the 1-minute controller period exactly",
            ));
        }
        if !(self.max_alpha_deg > 0.0 && self.max_alpha_deg < 90.0) {
            return Err(invalid("sim.max_alpha_deg", "must lie in (0, 90)"));
        }
        if !(self.tolerance_c.is_finite() && self.tolerance_c > 0.0) {
            return Err(invalid("sim.tolerance_c", "must be > 0"));
        }
        self.validate_network()?;
        self.validate_occupancy()?;
        Ok(())
    }

    fn validate_network(&self) -> Result<(), ScenarioError> {
        let links = [
            ("network.room_link", &self.network.room_link),
            ("network.duct_link", &self.network.duct_link),
            ("network.actuator_link", &self.network.actuator_link),
        ];
        for (key, link) in links {
            if !(link.latency_min.is_finite() && link.latency_min >= 0.0) {
                return Err(invalid(key, "latency_min must be >= 0"));
            }
            if !(link.jitter_min.is_finite() && link.jitter_min >= 0.0) {
                return Err(invalid(key, "jitter_min must be >= 0"));
            }
            if !(0.0..=1.0).contains(&link.loss_probability) {
                return Err(invalid(key, "loss_probability must lie in [0, 1]"));
            }
        }
        let sensors = [
            ("network.room_sensor", &self.network.room_sensor),
            ("network.duct_sensor", &self.network.duct_sensor),
        ];
        for (key, noise) in sensors {
            if !(noise.std_dev_c.is_finite() && noise.std_dev_c >= 0.0) {
                return Err(invalid(key, "std_dev_c must be >= 0"));
            }
            if !(noise.quantization_c.is_finite() && noise.quantization_c >= 0.0) {
                return Err(invalid(key, "quantization_c must be >= 0"));
            }
        }
        Ok(())
    }

    fn validate_occupancy(&self) -> Result<(), ScenarioError> {
        match &self.occupancy {
            OccupancySpec::Explicit(events) => {
                let mut count = i64::from(self.room.occupants);
                let mut last_at = f64::NEG_INFINITY;
                for event in events {
                    if !(event.at_min.is_finite() && event.at_min >= 0.0) {
                        return Err(invalid("occupancy.events", "at_min must be >= 0"));
                    }
                    if event.at_min < last_at {
                        return Err(invalid(
                            "occupancy.events",
                            "events must be ordered by at_min",
                        ));
                    }
                    last_at = event.at_min;
                    count += i64::from(event.delta);
                    if count < 0 {
                        return Err(invalid(
                            "occupancy.events",
                            format!("occupant count goes negative at t = {} min", event.at_min),
                        ));
                    }
                }
                Ok(())
            }
            OccupancySpec::Random {
                arrival_rate_per_hour,
                departure_rate_per_hour,
                ..
            } => {
                for (key, rate) in [
                    ("occupancy.arrival_rate_per_hour", arrival_rate_per_hour),
                    ("occupancy.departure_rate_per_hour", departure_rate_per_hour),
                ] {
                    if !(rate.is_finite() && *rate >= 0.0) {
                        return Err(invalid(key, "must be >= 0"));
                    }
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = r#"
[room]
volume_m3 = 150.0
initial_temperature_c = 24.0

[duct]
temperature_c = 12.8
speed_m_per_min = 100.0

[request]
target_c = 21.0
deadline_min = 30.0

[sim]
horizon_min = 40
seed = 1
"#;

    #[test]
    fn reference_scenario_parses_with_defaults() {
        let scenario = parse_scenario(REFERENCE).unwrap();
        assert_eq!(scenario.room.volume_m3, 150.0);
        assert_eq!(scenario.room.temperature_c, 24.0);
        assert_eq!(scenario.duct.speed_m_per_min, 100.0);
        assert_eq!(scenario.request.target_temperature_c, 21.0);
        assert_eq!(scenario.request.deadline_min, 30.0);
        assert_eq!(scenario.constants.air_density_kg_per_m3, 1.225);
        assert_eq!(scenario.constants.damper_side_m, 0.5);
        assert_eq!(scenario.max_alpha_deg, 45.0);
        assert_eq!(scenario.tolerance_c, 0.2);
        assert_eq!(scenario.dt_min, 1.0);
        assert_eq!(scenario.horizon_min, 40);
        assert_eq!(scenario.network, NetworkConfig::default());
    }

    #[test]
    fn empty_document_lists_required_keys() {
        let err = parse_scenario("").unwrap_err();
        match err {
            ScenarioError::MissingKeys(keys) => {
                assert_eq!(
                    keys,
                    vec![
                        "room.volume_m3",
                        "room.initial_temperature_c",
                        "request.target_c",
                        "request.deadline_min",
                    ]
                );
            }
            other => panic!("expected MissingKeys, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{REFERENCE}\n[sim2]\nx = 1\n");
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(err, ScenarioError::Syntax(_)), "{err}");

        let text = REFERENCE.replace("volume_m3", "volume_ft3");
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(err, ScenarioError::Syntax(_)), "{err}");
    }

    #[test]
    fn type_errors_name_the_line() {
        let text = REFERENCE.replace("volume_m3 = 150.0", "volume_m3 = \"big\"");
        let err = parse_scenario(&text).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("line"), "no line info in: {message}");
    }

    #[test]
    fn negative_occupancy_is_rejected() {
        let text = format!(
            "{REFERENCE}\n[occupancy]\nevents = [{{ at_min = 10.0, delta = 2 }}, {{ at_min = 20.0, delta = -3 }}]\n"
        );
        let err = parse_scenario(&text).unwrap_err();
        assert!(
            matches!(&err, ScenarioError::Invalid { key, .. } if key == "occupancy.events"),
            "{err}"
        );
    }

    #[test]
    fn horizon_shorter_than_deadline_is_rejected() {
        let text = REFERENCE.replace("horizon_min = 40", "horizon_min = 20");
        let err = parse_scenario(&text).unwrap_err();
        assert!(
            matches!(&err, ScenarioError::Invalid { key, .. } if key == "sim.horizon_min"),
            "{err}"
        );
    }

    #[test]
    fn fractional_steps_must_divide_the_period() {
        let ok = format!("{REFERENCE}\n# split\n").replace("seed = 1", "seed = 1\ndt_min = 0.25");
        assert!(parse_scenario(&ok).is_ok());

        let bad = REFERENCE.replace("seed = 1", "seed = 1\ndt_min = 0.3");
        let err = parse_scenario(&bad).unwrap_err();
        assert!(
            matches!(&err, ScenarioError::Invalid { key, .. } if key == "sim.dt_min"),
            "{err}"
        );
    }

    #[test]
    fn random_occupancy_requires_a_cap() {
        let text = format!("{REFERENCE}\n[occupancy]\narrival_rate_per_hour = 2.0\n");
        let err = parse_scenario(&text).unwrap_err();
        assert!(
            matches!(&err, ScenarioError::Invalid { key, .. } if key == "occupancy.max_occupants"),
            "{err}"
        );
    }
}
