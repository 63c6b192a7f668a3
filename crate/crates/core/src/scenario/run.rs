//! Closed-loop simulation driver.
//!
//! Tick order is fixed: occupancy events, sensor sampling/transmission,
//! network delivery, controller tick, command transmission and delivery,
//! plant step(s). One trace row is emitted per controller tick; the row
//! carries the pre-step temperature, the reading the controller used, and
//! the angle actually applied by the actuator during the step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{generate_occupancy, Scenario};
use crate::controller::{ControlMode, ControllerState, DamperCommand};
use crate::fmt::sig6;
use crate::thermal::{self, DuctAir};
use crate::wsn::{EventQueue, LinkId, NetworkEvent, NodeId, Payload, SensorReading, SimTime};

/// One line of the per-minute output trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t_min: u32,
    /// True room temperature at the start of the tick.
    pub true_temp_c: f64,
    /// Room reading the controller used; `None` before the first delivery.
    pub sensed_temp_c: Option<f64>,
    /// Damper angle in effect during this tick's plant step.
    pub alpha_deg: f64,
    pub saturated: bool,
    pub occupants: u32,
    pub flow_m3_per_min: f64,
    pub mode: ControlMode,
    pub flags: Vec<&'static str>,
}

/// End-of-run summary, also written as the sidecar file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub target_met: bool,
    pub final_temp_c: f64,
    pub saturation_count: u32,
    pub dropped_messages: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub trace: Vec<TraceRow>,
    pub summary: RunSummary,
    /// Every transmission, in send order (empty for direct coupling).
    pub events: Vec<NetworkEvent>,
}

/// Per-purpose random streams, so enabling one noise source never perturbs
/// another's sequence.
mod stream {
    pub const OCCUPANCY: u64 = 0;
    pub const ROOM_NOISE: u64 = 1;
    pub const DUCT_NOISE: u64 = 2;
    pub const ROOM_LINK: u64 = 3;
    pub const DUCT_LINK: u64 = 4;
    pub const ACTUATOR_LINK: u64 = 5;
}

fn seeded_stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Run the scenario with the sensor network in the loop.
pub fn run_scenario(scenario: &Scenario) -> RunResult {
    run_impl(scenario, false)
}

/// Run the scenario with controller and plant coupled directly: true values
/// in, commands applied instantly, no transmissions. The reference the
/// networked loop must match bit-for-bit when the network is ideal.
pub fn run_scenario_direct(scenario: &Scenario) -> RunResult {
    run_impl(scenario, true)
}

fn run_impl(scenario: &Scenario, direct: bool) -> RunResult {
    let constants = scenario.constants;
    let duct_true = scenario.duct;
    let mut room = scenario.room;

    let mut controller = ControllerState::new(room.volume_m3);
    controller.max_alpha_deg = scenario.max_alpha_deg;
    controller.tolerance_c = scenario.tolerance_c;
    controller.angle_model = scenario.angle_model;
    controller = controller.submit_request(scenario.request, 0.0);
    let deadline_at_min = scenario.request.deadline_min;

    let mut occupancy_rng = seeded_stream(scenario.seed, stream::OCCUPANCY);
    let occupancy_events = generate_occupancy(
        &scenario.occupancy,
        scenario.horizon_min,
        room.occupants,
        &mut occupancy_rng,
    );
    let mut next_occupancy = 0usize;

    let mut room_noise_rng = seeded_stream(scenario.seed, stream::ROOM_NOISE);
    let mut duct_noise_rng = seeded_stream(scenario.seed, stream::DUCT_NOISE);
    let mut room_link_rng = seeded_stream(scenario.seed, stream::ROOM_LINK);
    let mut duct_link_rng = seeded_stream(scenario.seed, stream::DUCT_LINK);
    let mut actuator_link_rng = seeded_stream(scenario.seed, stream::ACTUATOR_LINK);

    let mut queue = EventQueue::new();
    let mut room_sequence = 0u64;
    let mut duct_sequence = 0u64;
    let mut latest_room: Option<SensorReading> = None;
    let mut latest_duct: Option<SensorReading> = None;
    let mut applied = DamperCommand::closed(0.0);

    let substeps = (1.0 / scenario.dt_min).round() as u32;
    let mut temp_at_deadline: Option<f64> = None;
    let mut saturation_count = 0u32;
    let mut trace = Vec::with_capacity(scenario.horizon_min as usize);

    for t in 0..scenario.horizon_min {
        let now_min = f64::from(t);
        let now = SimTime::from_min(now_min);

        // Occupancy events due at or before this tick.
        while next_occupancy < occupancy_events.len()
            && occupancy_events[next_occupancy].at_min <= now_min
        {
            let delta = i64::from(occupancy_events[next_occupancy].delta);
            room.occupants = (i64::from(room.occupants) + delta).max(0) as u32;
            next_occupancy += 1;
        }

        if temp_at_deadline.is_none() && now_min >= deadline_at_min {
            temp_at_deadline = Some(room.temperature_c);
        }

        let mut flags: Vec<&'static str> = Vec::new();

        // Sensing.
        if direct {
            latest_room = Some(SensorReading {
                node_id: NodeId::RoomSensor,
                measured_c: room.temperature_c,
                sampled_at_min: now_min,
                sequence: room_sequence,
            });
            latest_duct = Some(SensorReading {
                node_id: NodeId::DuctSensor,
                measured_c: duct_true.temperature_c,
                sampled_at_min: now_min,
                sequence: duct_sequence,
            });
            room_sequence += 1;
            duct_sequence += 1;
        } else {
            let room_reading = SensorReading {
                node_id: NodeId::RoomSensor,
                measured_c: crate::wsn::sample(
                    room.temperature_c,
                    &scenario.network.room_sensor,
                    &mut room_noise_rng,
                ),
                sampled_at_min: now_min,
                sequence: room_sequence,
            };
            room_sequence += 1;
            queue.send(
                LinkId::RoomSensor,
                &scenario.network.room_link,
                Payload::Reading(room_reading),
                now,
                &mut room_link_rng,
            );
            let duct_reading = SensorReading {
                node_id: NodeId::DuctSensor,
                measured_c: crate::wsn::sample(
                    duct_true.temperature_c,
                    &scenario.network.duct_sensor,
                    &mut duct_noise_rng,
                ),
                sampled_at_min: now_min,
                sequence: duct_sequence,
            };
            duct_sequence += 1;
            queue.send(
                LinkId::DuctSensor,
                &scenario.network.duct_link,
                Payload::Reading(duct_reading),
                now,
                &mut duct_link_rng,
            );
            for event in queue.advance(now) {
                apply_delivery(&event, &mut latest_room, &mut latest_duct, &mut applied);
            }
        }

        // Controller tick on the freshest delivered readings.
        let mut sensed_temp_c = None;
        let mut command_dropped = false;
        match (latest_room, latest_duct) {
            (Some(room_reading), Some(duct_reading)) => {
                sensed_temp_c = Some(room_reading.measured_c);
                let duct_for_controller = DuctAir {
                    temperature_c: duct_reading.measured_c,
                    speed_m_per_min: duct_true.speed_m_per_min,
                };
                let outcome =
                    controller.tick(room_reading.measured_c, &duct_for_controller, now_min, &constants);
                controller = outcome.state;
                if let Some(error) = outcome.flag {
                    flags.push(error.flag());
                }
                if direct {
                    applied = outcome.command;
                } else {
                    let event = queue.send(
                        LinkId::Actuator,
                        &scenario.network.actuator_link,
                        Payload::Command(outcome.command),
                        now,
                        &mut actuator_link_rng,
                    );
                    command_dropped = event.dropped;
                    for delivered in queue.advance(now) {
                        apply_delivery(&delivered, &mut latest_room, &mut latest_duct, &mut applied);
                    }
                }
            }
            _ => flags.push("no_reading"),
        }
        if command_dropped {
            flags.push("cmd_dropped");
        }
        if applied.saturated {
            saturation_count += 1;
        }

        // Plant step(s) with the actuator's current angle.
        let true_temp_c = room.temperature_c;
        let flow_m3_per_min = thermal::volumetric_flow(applied.alpha_deg, &duct_true, &constants)
            .expect("clamped angle is valid");
        let mut mixing_saturated = false;
        for _ in 0..substeps {
            let sample = thermal::airflow_sample(
                applied.alpha_deg,
                &duct_true,
                &constants,
                room.volume_m3,
                scenario.dt_min,
            )
            .expect("validated step");
            if sample.mixing_fraction >= 1.0 {
                mixing_saturated = true;
            }
            room = thermal::step_room(
                &room,
                applied.alpha_deg,
                &duct_true,
                &constants,
                scenario.misc_gain_w,
                scenario.dt_min,
            )
            .expect("validated step");
        }
        if mixing_saturated {
            flags.push("mixing_saturated");
        }

        trace.push(TraceRow {
            t_min: t,
            true_temp_c,
            sensed_temp_c,
            alpha_deg: applied.alpha_deg,
            saturated: applied.saturated,
            occupants: room.occupants,
            flow_m3_per_min,
            mode: controller.mode,
            flags,
        });
    }

    let temp_at_deadline = temp_at_deadline.unwrap_or(room.temperature_c);
    let target_met = (temp_at_deadline - scenario.request.target_temperature_c).abs()
        <= scenario.tolerance_c;
    if let Some(last) = trace.last_mut() {
        last.flags.push(if target_met { "target_met" } else { "target_missed" });
    }

    let summary = RunSummary {
        target_met,
        final_temp_c: room.temperature_c,
        saturation_count,
        dropped_messages: queue.dropped_count() as u32,
    };
    RunResult {
        trace,
        summary,
        events: queue.log().to_vec(),
    }
}

fn apply_delivery(
    event: &NetworkEvent,
    latest_room: &mut Option<SensorReading>,
    latest_duct: &mut Option<SensorReading>,
    applied: &mut DamperCommand,
) {
    match event.payload {
        Payload::Reading(reading) => {
            let slot = match reading.node_id {
                NodeId::RoomSensor => latest_room,
                NodeId::DuctSensor => latest_duct,
            };
            let is_newer = slot.map_or(true, |held| reading.sequence > held.sequence);
            if is_newer {
                *slot = Some(reading);
            }
        }
        Payload::Command(command) => *applied = command,
    }
}

pub const TRACE_HEADER: &str =
    "t_min,true_temp_c,sensed_temp_c,alpha_deg,saturated,occupants,flow_m3_per_min,mode,flags";

/// Render the trace as CSV, header row included. Byte-stable for a fixed run.
pub fn write_trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for row in trace {
        let sensed = row
            .sensed_temp_c
            .map(sig6)
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.t_min,
            sig6(row.true_temp_c),
            sensed,
            sig6(row.alpha_deg),
            row.saturated,
            row.occupants,
            sig6(row.flow_m3_per_min),
            row.mode.as_str(),
            row.flags.join(";"),
        ));
    }
    out
}

/// Render the network event log as CSV. Dropped events keep an empty
/// deliver_min column.
pub fn write_event_log_csv(events: &[NetworkEvent]) -> String {
    let mut out = String::from("send_min,deliver_min,link_id,kind,dropped,payload_summary\n");
    for event in events {
        let deliver = if event.dropped {
            String::new()
        } else {
            sig6(event.deliver_min.as_min())
        };
        let summary = match event.payload {
            Payload::Reading(reading) => format!(
                "reading node={} seq={} measured_c={}",
                reading.node_id.as_str(),
                reading.sequence,
                sig6(reading.measured_c)
            ),
            Payload::Command(command) => format!(
                "command alpha_deg={} saturated={}",
                sig6(command.alpha_deg),
                command.saturated
            ),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            sig6(event.send_min.as_min()),
            deliver,
            event.link_id.as_str(),
            event.payload.kind(),
            event.dropped,
            summary,
        ));
    }
    out
}

/// Render the sidecar summary as `key = value` lines.
pub fn write_summary(summary: &RunSummary) -> String {
    format!(
        "target_met = {}\nfinal_temp_c = {}\nsaturation_count = {}\ndropped_messages = {}\n",
        summary.target_met,
        sig6(summary.final_temp_c),
        summary.saturation_count,
        summary.dropped_messages,
    )
}
