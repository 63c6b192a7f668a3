//! Occupancy event generation: explicit schedules or a seeded birth-death
//! process with a capacity cap.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::Deserialize;

/// A change in the number of people in the room.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupancyEvent {
    pub at_min: f64,
    pub delta: i32,
}

/// How occupancy evolves over the run.
#[derive(Debug, Clone, PartialEq)]
pub enum OccupancySpec {
    /// Fixed schedule, applied verbatim.
    Explicit(Vec<OccupancyEvent>),
    /// People arrive and leave at exponential rates, capped at `max_occupants`.
    Random {
        arrival_rate_per_hour: f64,
        departure_rate_per_hour: f64,
        max_occupants: u32,
    },
}

impl OccupancySpec {
    pub fn none() -> Self {
        OccupancySpec::Explicit(Vec::new())
    }
}

/// Expand a spec into a concrete event list over `[0, horizon_min)`.
///
/// Explicit specs are returned verbatim. Random specs race two exponential
/// clocks (arrival vs departure); events that would exceed the cap or empty
/// an empty room are skipped. Fully deterministic for a given generator.
pub fn generate_occupancy<R: Rng>(
    spec: &OccupancySpec,
    horizon_min: u32,
    initial_occupants: u32,
    rng: &mut R,
) -> Vec<OccupancyEvent> {
    match spec {
        OccupancySpec::Explicit(events) => events.clone(),
        OccupancySpec::Random {
            arrival_rate_per_hour,
            departure_rate_per_hour,
            max_occupants,
        } => {
            let horizon = f64::from(horizon_min);
            let arrival_per_min = arrival_rate_per_hour / 60.0;
            let departure_per_min = departure_rate_per_hour / 60.0;
            let mut events = Vec::new();
            let mut count = initial_occupants;
            let mut now = 0.0_f64;
            let mut next_arrival = now + sample_exp(arrival_per_min, rng);
            let mut next_departure = now + sample_exp(departure_per_min, rng);
            loop {
                let (at, delta) = if next_arrival <= next_departure {
                    (next_arrival, 1)
                } else {
                    (next_departure, -1)
                };
                if at >= horizon {
                    break;
                }
                now = at;
                if delta > 0 {
                    next_arrival = now + sample_exp(arrival_per_min, rng);
                    if count < *max_occupants {
                        count += 1;
                        events.push(OccupancyEvent { at_min: at, delta });
                    }
                } else {
                    next_departure = now + sample_exp(departure_per_min, rng);
                    if count > 0 {
                        count -= 1;
                        events.push(OccupancyEvent { at_min: at, delta });
                    }
                }
            }
            events
        }
    }
}

fn sample_exp<R: Rng>(rate_per_min: f64, rng: &mut R) -> f64 {
    if rate_per_min <= 0.0 {
        return f64::INFINITY;
    }
    Exp::new(rate_per_min).expect("positive rate").sample(rng)
}
