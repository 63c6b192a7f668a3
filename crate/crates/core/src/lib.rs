//! Deterministic simulator for a sensor-network-controlled room airflow
//! system, plus chilled-water plant efficiency analytics.
//!
//! A damper in the supply duct modulates how much conditioned air enters a
//! room. Each minute a controller reads the room and duct temperature nodes,
//! recomputes the damper angle needed to hit the user's target temperature by
//! the deadline, and commands the actuator over a simulated wireless link.
//! Everything is seeded: a scenario run twice produces byte-identical traces.
//!
//! Modules:
//! * [`thermal`] — mixed-air room model and damper flow.
//! * [`controller`] — angle law and receding-horizon loop.
//! * [`wsn`] — star network with latency, jitter, loss, and sensor noise.
//! * [`scenario`] — configuration, occupancy events, closed-loop driver.
//! * [`metrics`] — KFG / ΔT / NT plant-efficiency analytics.

pub mod controller;
pub mod fmt;
pub mod metrics;
pub mod scenario;
pub mod thermal;
pub mod wsn;

pub use scenario::{
    parse_scenario, run_scenario, run_scenario_direct, RunResult, Scenario, ScenarioError,
};
