//! Simulated wireless sensor network: one temperature node in the room, one
//! in the duct, a damper actuator node, and a coordinator, star-connected by
//! links with configurable latency, jitter, and loss.
//!
//! Delivery order is total and deterministic: events are keyed by
//! (deliver time, link, sequence), and time is fixed-point micro-minutes so
//! ordering never depends on float rounding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::controller::DamperCommand;

/// Simulated time in whole micro-minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(i64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_min(minutes: f64) -> Self {
        SimTime((minutes * 1e6).round() as i64)
    }

    pub fn as_min(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn plus_min(self, minutes: f64) -> Self {
        SimTime(self.0 + (minutes * 1e6).round() as i64)
    }
}

/// Sensing nodes in the star.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeId {
    RoomSensor,
    DuctSensor,
}

impl NodeId {
    pub fn as_str(&self) -> &'static str {
        match self {
            NodeId::RoomSensor => "room_sensor",
            NodeId::DuctSensor => "duct_sensor",
        }
    }
}

/// Links of the star, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LinkId {
    RoomSensor,
    DuctSensor,
    Actuator,
}

impl LinkId {
    pub const ALL: [LinkId; 3] = [LinkId::RoomSensor, LinkId::DuctSensor, LinkId::Actuator];

    fn index(self) -> usize {
        match self {
            LinkId::RoomSensor => 0,
            LinkId::DuctSensor => 1,
            LinkId::Actuator => 2,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            LinkId::RoomSensor => "room_sensor",
            LinkId::DuctSensor => "duct_sensor",
            LinkId::Actuator => "actuator",
        }
    }
}

/// One sensor measurement stamped with its origin and a per-node counter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorReading {
    pub node_id: NodeId,
    pub measured_c: f64,
    pub sampled_at_min: f64,
    pub sequence: u64,
}

/// Point-to-point link characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetLink {
    pub latency_min: f64,
    pub jitter_min: f64,
    pub loss_probability: f64,
}

impl Default for NetLink {
    /// Ideal link: instant, lossless.
    fn default() -> Self {
        Self {
            latency_min: 0.0,
            jitter_min: 0.0,
            loss_probability: 0.0,
        }
    }
}

/// Additive gaussian noise plus quantization applied by a sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub std_dev_c: f64,
    pub quantization_c: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            std_dev_c: 0.0,
            quantization_c: 0.0,
        }
    }
}

/// Measure a true value through a sensor: gaussian noise, then quantization
/// to the nearest multiple (ties away from zero). With both parameters zero
/// the true value passes through untouched.
pub fn sample<R: Rng>(true_value_c: f64, noise: &NoiseModel, rng: &mut R) -> f64 {
    let mut value = true_value_c;
    if noise.std_dev_c > 0.0 {
        let normal = Normal::new(0.0, noise.std_dev_c).expect("valid std dev");
        value += normal.sample(rng);
    }
    if noise.quantization_c > 0.0 {
        value = (value / noise.quantization_c).round() * noise.quantization_c;
    }
    value
}

/// What travels over a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payload {
    Reading(SensorReading),
    Command(DamperCommand),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Reading(_) => "reading",
            Payload::Command(_) => "command",
        }
    }
}

/// One transmission: either queued for delivery or dropped at send time.
#[derive(Debug, Clone, Copy)]
pub struct NetworkEvent {
    pub send_min: SimTime,
    pub deliver_min: SimTime,
    pub link_id: LinkId,
    /// Per-link send counter; the final ordering tie-break.
    pub sequence: u64,
    pub payload: Payload,
    pub dropped: bool,
}

impl NetworkEvent {
    fn order_key(&self) -> (SimTime, usize, u64) {
        (self.deliver_min, self.link_id.index(), self.sequence)
    }
}

// Ordering ignores the payload: (deliver time, link, sequence) is unique
// because the sequence counter is per link.
impl PartialEq for NetworkEvent {
    fn eq(&self, other: &Self) -> bool {
        self.order_key() == other.order_key()
    }
}

impl Eq for NetworkEvent {}

impl PartialOrd for NetworkEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NetworkEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order_key().cmp(&other.order_key())
    }
}

/// Pending transmissions plus a log of everything ever sent.
#[derive(Debug, Default)]
pub struct EventQueue {
    pending: BinaryHeap<std::cmp::Reverse<NetworkEvent>>,
    log: Vec<NetworkEvent>,
    next_sequence: [u64; 3],
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Transmit a payload over a link. Loss is decided at send time; dropped
    /// events are logged but never delivered. Delivery time is
    /// now + latency + uniform(0, jitter).
    pub fn send<R: Rng>(
        &mut self,
        link_id: LinkId,
        link: &NetLink,
        payload: Payload,
        now: SimTime,
        rng: &mut R,
    ) -> NetworkEvent {
        let sequence = self.next_sequence[link_id.index()];
        self.next_sequence[link_id.index()] += 1;

        let dropped = rng.random::<f64>() < link.loss_probability;
        let jitter = if link.jitter_min > 0.0 {
            rng.random_range(0.0..link.jitter_min)
        } else {
            0.0
        };
        let event = NetworkEvent {
            send_min: now,
            deliver_min: now.plus_min(link.latency_min + jitter),
            link_id,
            sequence,
            payload,
            dropped,
        };
        self.log.push(event);
        if !dropped {
            self.pending.push(std::cmp::Reverse(event));
        }
        event
    }

    /// Remove and return every pending event due at or before `until`,
    /// ordered by (deliver time, link, sequence).
    pub fn advance(&mut self, until: SimTime) -> Vec<NetworkEvent> {
        let mut delivered = Vec::new();
        while let Some(std::cmp::Reverse(event)) = self.pending.peek() {
            if event.deliver_min > until {
                break;
            }
            delivered.push(self.pending.pop().expect("peeked").0);
        }
        delivered
    }

    pub fn log(&self) -> &[NetworkEvent] {
        &self.log
    }

    pub fn dropped_count(&self) -> usize {
        self.log.iter().filter(|event| event.dropped).count()
    }
}
