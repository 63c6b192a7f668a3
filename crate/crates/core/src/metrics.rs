//! Chilled-water plant efficiency analytics.
//!
//! Works on operation log rows (power, flow, supply/return water temperature)
//! and computes three measures per record:
//!
//! * KFG — kWh needed to cool 10,000 GPM of chilled water by 1 °F in one hour,
//! * ΔT — return minus supply water temperature (positive for a working loop),
//! * NT — AHU chilled-water set point (55.1 °F) minus the return temperature,
//!
//! plus hour-of-day and (NT, ΔT)-binned aggregations of mean KFG.

use chrono::{NaiveDateTime, Timelike};
use thiserror::Error;

/// AHU chilled-water set point used for NT unless overridden.
pub const DEFAULT_AHU_SETPOINT_F: f64 = 55.1;

/// Below this ΔT (°F) a KFG value is unreliable (denominator too small) and
/// is excluded from aggregations rather than allowed to explode.
pub const MIN_RELIABLE_DELTA_T_F: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("KFG is undefined when return and supply temperatures are equal")]
    ZeroDeltaT,
    #[error("no usable records (all missing or below the ΔT reliability cutoff)")]
    EmptyInput,
    #[error("bin edges must be strictly increasing with at least two entries: {0}")]
    InvalidBins(String),
    #[error("plant log header must be exactly `{expected}`, got `{got}`")]
    MissingHeader { expected: String, got: String },
}

/// One plant-log row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantRecord {
    pub timestamp: NaiveDateTime,
    pub power_kw: f64,
    pub flow_gpm: f64,
    pub supply_f: f64,
    pub return_f: f64,
}

impl PlantRecord {
    pub fn hour_of_day(&self) -> u32 {
        self.timestamp.hour()
    }

    /// A record is usable for aggregation when its ΔT is positive and clears
    /// the reliability cutoff. Records failing this are flagged, not errors.
    pub fn is_reliable(&self) -> bool {
        delta_t(self) >= MIN_RELIABLE_DELTA_T_F
    }
}

/// Per-record efficiency measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyPoint {
    pub kfg: f64,
    pub delta_t_f: f64,
    pub nt_f: f64,
    pub hour_of_day: u32,
}

/// kWh per (10,000 GPM · °F · hour): power divided by flow (in units of
/// 10 kGPM) times the water temperature rise. Negative ΔT yields a negative,
/// flagged value; zero ΔT is an error.
pub fn kfg(record: &PlantRecord) -> Result<f64, MetricsError> {
    let delta = delta_t(record);
    if delta == 0.0 {
        return Err(MetricsError::ZeroDeltaT);
    }
    Ok(record.power_kw / ((record.flow_gpm / 10_000.0) * delta))
}

/// Return minus supply chilled-water temperature (°F). Oriented so a healthy
/// loop (warmer return) is positive.
pub fn delta_t(record: &PlantRecord) -> f64 {
    record.return_f - record.supply_f
}

/// Set point minus return temperature (°F); how far the buildings pulled the
/// loop from the AHU set point.
pub fn nt(record: &PlantRecord, setpoint_f: f64) -> f64 {
    setpoint_f - record.return_f
}

pub fn efficiency_point(
    record: &PlantRecord,
    setpoint_f: f64,
) -> Result<EfficiencyPoint, MetricsError> {
    Ok(EfficiencyPoint {
        kfg: kfg(record)?,
        delta_t_f: delta_t(record),
        nt_f: nt(record, setpoint_f),
        hour_of_day: record.hour_of_day(),
    })
}

/// Mean KFG and population of one aggregation slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanKfg {
    pub mean_kfg: f64,
    pub count: u32,
}

/// Mean of a slot's values, summed in a canonical order so the result is
/// exactly independent of input record order (and of any parallel
/// partitioning upstream).
fn stable_mean(values: &mut Vec<f64>) -> Option<MeanKfg> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let sum: f64 = values.iter().sum();
    Some(MeanKfg {
        mean_kfg: sum / values.len() as f64,
        count: values.len() as u32,
    })
}

/// Mean KFG per hour of day over the reliable records. Hours with no data
/// stay `None`; they are absent, not zero.
pub fn hourly_kfg(records: &[PlantRecord]) -> Result<[Option<MeanKfg>; 24], MetricsError> {
    let mut buckets: [Vec<f64>; 24] = Default::default();
    for record in records.iter().filter(|r| r.is_reliable()) {
        let hour = record.hour_of_day() as usize;
        buckets[hour].push(kfg(record).expect("reliable record has nonzero delta"));
    }
    if buckets.iter().all(Vec::is_empty) {
        return Err(MetricsError::EmptyInput);
    }
    let mut slots = [None; 24];
    for (slot, bucket) in slots.iter_mut().zip(buckets.iter_mut()) {
        *slot = stable_mean(bucket);
    }
    Ok(slots)
}

/// Mean KFG binned over (NT, ΔT) cells.
#[derive(Debug, Clone, PartialEq)]
pub struct KfgSurface {
    pub nt_edges: Vec<f64>,
    pub dt_edges: Vec<f64>,
    /// Row-major `[nt_bin][dt_bin]`; `None` where no record landed.
    pub cells: Vec<Vec<Option<MeanKfg>>>,
}

/// Bin the reliable records over (NT, ΔT) and average KFG per cell. Bins are
/// left-open/right-closed, `(lo, hi]`: a value sitting exactly on an interior
/// edge belongs to the cell that edge closes on the right. Values at or below
/// the first edge, or above the last, fall outside the table.
pub fn kfg_surface(
    records: &[PlantRecord],
    nt_edges: &[f64],
    dt_edges: &[f64],
    setpoint_f: f64,
) -> Result<KfgSurface, MetricsError> {
    validate_edges(nt_edges, "nt")?;
    validate_edges(dt_edges, "dt")?;
    let nt_bins = nt_edges.len() - 1;
    let dt_bins = dt_edges.len() - 1;
    let mut buckets = vec![vec![Vec::<f64>::new(); dt_bins]; nt_bins];

    for record in records.iter().filter(|r| r.is_reliable()) {
        let point = efficiency_point(record, setpoint_f).expect("reliable record");
        let (Some(nt_bin), Some(dt_bin)) = (
            bin_index(nt_edges, point.nt_f),
            bin_index(dt_edges, point.delta_t_f),
        ) else {
            continue;
        };
        buckets[nt_bin][dt_bin].push(point.kfg);
    }

    let cells = buckets
        .into_iter()
        .map(|row| row.into_iter().map(|mut bucket| stable_mean(&mut bucket)).collect())
        .collect();
    Ok(KfgSurface {
        nt_edges: nt_edges.to_vec(),
        dt_edges: dt_edges.to_vec(),
        cells,
    })
}

fn validate_edges(edges: &[f64], what: &str) -> Result<(), MetricsError> {
    if edges.len() < 2 || edges.windows(2).any(|pair| pair[0] >= pair[1]) {
        return Err(MetricsError::InvalidBins(format!("{what}: {edges:?}")));
    }
    Ok(())
}

/// Index of the `(lo, hi]` bin containing `value`, if any.
fn bin_index(edges: &[f64], value: f64) -> Option<usize> {
    if value <= edges[0] || value > *edges.last().expect("validated") {
        return None;
    }
    Some(edges.partition_point(|edge| *edge < value) - 1)
}

pub const PLANT_LOG_HEADER: &str = "timestamp,power_kw,flow_gpm,supply_f,return_f";

/// A row the parser refused, with its 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRow {
    pub line: usize,
    pub content: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedLog {
    pub records: Vec<PlantRecord>,
    pub rejects: Vec<RejectedRow>,
}

/// Parse a plant operations log. The header line is mandatory; malformed data
/// rows are collected into `rejects` instead of failing the whole file.
/// Rows with return ≤ supply are kept (flagged via [`PlantRecord::is_reliable`]).
pub fn parse_plant_log(text: &str) -> Result<ParsedLog, MetricsError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) if line.trim().is_empty() => continue,
            Some((_, line)) => break line.trim().to_string(),
            None => break String::new(),
        }
    };
    if header != PLANT_LOG_HEADER {
        return Err(MetricsError::MissingHeader {
            expected: PLANT_LOG_HEADER.to_string(),
            got: header,
        });
    }

    let mut parsed = ParsedLog::default();
    for (index, line) in lines {
        let line_number = index + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        match parse_row(trimmed) {
            Ok(record) => parsed.records.push(record),
            Err(reason) => parsed.rejects.push(RejectedRow {
                line: line_number,
                content: trimmed.to_string(),
                reason,
            }),
        }
    }
    Ok(parsed)
}

fn parse_row(line: &str) -> Result<PlantRecord, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 5 {
        return Err(format!("expected 5 fields, got {}", fields.len()));
    }
    let timestamp = parse_timestamp(fields[0])?;
    let power_kw = parse_number(fields[1], "power_kw")?;
    let flow_gpm = parse_number(fields[2], "flow_gpm")?;
    let supply_f = parse_number(fields[3], "supply_f")?;
    let return_f = parse_number(fields[4], "return_f")?;
    if power_kw <= 0.0 {
        return Err(format!("power_kw must be > 0, got {power_kw}"));
    }
    if flow_gpm <= 0.0 {
        return Err(format!("flow_gpm must be > 0, got {flow_gpm}"));
    }
    Ok(PlantRecord {
        timestamp,
        power_kw,
        flow_gpm,
        supply_f,
        return_f,
    })
}

fn parse_timestamp(field: &str) -> Result<NaiveDateTime, String> {
    for format in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(timestamp) = NaiveDateTime::parse_from_str(field, format) {
            return Ok(timestamp);
        }
    }
    Err(format!("unparseable timestamp `{field}`"))
}

fn parse_number(field: &str, name: &str) -> Result<f64, String> {
    let value: f64 = field
        .parse()
        .map_err(|_| format!("{name} is not a number: `{field}`"))?;
    if !value.is_finite() {
        return Err(format!("{name} must be finite, got `{field}`"));
    }
    Ok(value)
}

/// Render a plant log as CSV (inverse of [`parse_plant_log`]).
pub fn write_plant_log_csv(records: &[PlantRecord]) -> String {
    use crate::fmt::sig6;
    let mut out = String::from(PLANT_LOG_HEADER);
    out.push('\n');
    for record in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            record.timestamp.format("%Y-%m-%dT%H:%M:%S"),
            sig6(record.power_kw),
            sig6(record.flow_gpm),
            sig6(record.supply_f),
            sig6(record.return_f),
        ));
    }
    out
}

/// Hourly series as CSV; only populated hours get a row.
pub fn write_hourly_csv(slots: &[Option<MeanKfg>; 24]) -> String {
    use crate::fmt::sig6;
    let mut out = String::from("hour,mean_kfg,count\n");
    for (hour, slot) in slots.iter().enumerate() {
        if let Some(slot) = slot {
            out.push_str(&format!("{hour},{},{}\n", sig6(slot.mean_kfg), slot.count));
        }
    }
    out
}

/// Surface table as CSV; only populated cells get a row.
pub fn write_surface_csv(surface: &KfgSurface) -> String {
    use crate::fmt::sig6;
    let mut out = String::from("nt_bin_lo,nt_bin_hi,dt_bin_lo,dt_bin_hi,mean_kfg,count\n");
    for (nt_bin, row) in surface.cells.iter().enumerate() {
        for (dt_bin, cell) in row.iter().enumerate() {
            if let Some(cell) = cell {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    sig6(surface.nt_edges[nt_bin]),
                    sig6(surface.nt_edges[nt_bin + 1]),
                    sig6(surface.dt_edges[dt_bin]),
                    sig6(surface.dt_edges[dt_bin + 1]),
                    sig6(cell.mean_kfg),
                    cell.count,
                ));
            }
        }
    }
    out
}

/// Rejects report, one line per refused row.
pub fn write_rejects_report(parsed: &ParsedLog) -> String {
    let mut out = format!(
        "accepted = {}\nrejected = {}\n",
        parsed.records.len(),
        parsed.rejects.len()
    );
    for reject in &parsed.rejects {
        out.push_str(&format!(
            "line {}: {} ({})\n",
            reject.line, reject.reason, reject.content
        ));
    }
    out
}

pub mod synth;
