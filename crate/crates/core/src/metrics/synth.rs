//! Synthetic plant-log generator.
//!
//! Real plant logs are not redistributable, so the analytics pipeline ships
//! with a generator instead. It plants a known efficiency structure: power
//! and flow fluctuate independently of load while ΔT swings with the hour of
//! day, so mean KFG falls as ΔT rises and the hourly profile shows a clear
//! daily shape.

use chrono::{Days, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PlantRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub records: usize,
    pub seed: u64,
    pub start: NaiveDateTime,
    /// Log cadence in minutes.
    pub interval_min: u32,
}

impl SynthConfig {
    pub fn new(records: usize, seed: u64) -> Self {
        Self {
            records,
            seed,
            start: NaiveDate::from_ymd_opt(2025, 3, 1)
                .expect("valid date")
                .and_hms_opt(0, 0, 0)
                .expect("valid time"),
            interval_min: 120,
        }
    }
}

/// Generate a deterministic synthetic log.
pub fn generate_plant_log(config: &SynthConfig) -> Vec<PlantRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records = Vec::with_capacity(config.records);
    let mut timestamp = config.start;
    for _ in 0..config.records {
        let hour = chrono::Timelike::hour(&timestamp) as f64;
        // ΔT peaks mid-afternoon (heavy cooling load) and bottoms out at night.
        let daily = 0.5 - 0.5 * (std::f64::consts::TAU * (hour - 14.0) / 24.0).cos();
        let delta_t = 4.0 + 12.0 * (1.0 - daily) + rng.random_range(-0.4..0.4);
        let supply_f = 44.0 + rng.random_range(-0.5..0.5);
        let power_kw = 2000.0 * (1.0 + rng.random_range(-0.03..0.03));
        let flow_gpm = 20_000.0 * (1.0 + rng.random_range(-0.03..0.03));
        records.push(PlantRecord {
            timestamp,
            power_kw,
            flow_gpm,
            supply_f,
            return_f: supply_f + delta_t,
        });
        timestamp = advance(timestamp, config.interval_min);
    }
    records
}

fn advance(timestamp: NaiveDateTime, interval_min: u32) -> NaiveDateTime {
    let minutes = i64::from(interval_min);
    timestamp
        .checked_add_signed(chrono::Duration::minutes(minutes))
        .or_else(|| timestamp.checked_add_days(Days::new(1)))
        .expect("timestamp in range")
}
