//! Time grid, scenario data and CSV ingestion.
//!
//! All series hold energy per step (kWh), never average power. A step of
//! duration `h` hours carrying `x` kWh corresponds to an average power of
//! `x / h` kW.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TIMESTAMP_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

/// Canonical output format for timestamps.
pub const TIMESTAMP_OUT: &str = "%Y-%m-%dT%H:%M:%S";

pub fn parse_timestamp(raw: &str) -> Result<NaiveDateTime> {
    let raw = raw.trim();
    for fmt in TIMESTAMP_FORMATS {
        if let Ok(ts) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Ok(ts);
        }
    }
    // Offsets are accepted but dropped: day types resolve on local wall-clock time.
    DateTime::parse_from_rfc3339(raw)
        .map(|dt| dt.naive_local())
        .map_err(|_| Error::Parse(format!("unrecognised timestamp '{raw}'")))
}

pub fn format_timestamp(ts: NaiveDateTime) -> String {
    ts.format(TIMESTAMP_OUT).to_string()
}

/// Uniform time discretisation of the optimisation horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    step_hours: f64,
    steps: usize,
    start: NaiveDateTime,
}

impl TimeGrid {
    pub fn new(step_hours: f64, steps: usize, start: NaiveDateTime) -> Result<Self> {
        if !(step_hours.is_finite() && step_hours > 0.0) {
            return Err(Error::Grid(format!(
                "step duration must be positive, got {step_hours}"
            )));
        }
        if steps == 0 {
            return Err(Error::Grid("a time grid needs at least one step".into()));
        }
        Ok(TimeGrid {
            step_hours,
            steps,
            start,
        })
    }

    pub fn step_hours(&self) -> f64 {
        self.step_hours
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    /// Total duration T = h·N in hours.
    pub fn duration_hours(&self) -> f64 {
        self.step_hours * self.steps as f64
    }

    pub fn step_duration(&self) -> Duration {
        Duration::milliseconds((self.step_hours * 3_600_000.0).round() as i64)
    }

    pub fn step_start(&self, i: usize) -> NaiveDateTime {
        self.start + self.step_duration() * i as i32
    }

    /// Number of steps in a day, when `h` divides 24 hours exactly.
    pub fn steps_per_day(&self) -> Option<usize> {
        let per_day = 24.0 / self.step_hours;
        let rounded = per_day.round();
        ((per_day - rounded).abs() < 1e-9 && rounded >= 1.0).then_some(rounded as usize)
    }

    /// Grid covering `len` steps starting at step `offset` of this grid.
    pub fn window(&self, offset: usize, len: usize) -> Result<TimeGrid> {
        TimeGrid::new(self.step_hours, len, self.step_start(offset))
    }
}

/// Aligned demand and generation series on a shared time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    grid: TimeGrid,
    demand: Vec<f64>,
    generation: Vec<f64>,
}

impl Scenario {
    pub fn new(grid: TimeGrid, demand: Vec<f64>, generation: Vec<f64>) -> Result<Self> {
        if demand.len() != grid.steps() || generation.len() != grid.steps() {
            return Err(Error::Alignment(format!(
                "grid has {} steps but demand has {} and generation {}",
                grid.steps(),
                demand.len(),
                generation.len()
            )));
        }
        for (name, series) in [("demand", &demand), ("generation", &generation)] {
            if let Some(i) = series.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("{name} entry {i} is not finite")));
            }
            if let Some(i) = series.iter().position(|&v| v < 0.0) {
                return Err(Error::Validation(format!(
                    "{name} entry {i} is negative ({} kWh)",
                    series[i]
                )));
            }
        }
        Ok(Scenario {
            grid,
            demand,
            generation,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }

    pub fn generation(&self) -> &[f64] {
        &self.generation
    }

    pub fn len(&self) -> usize {
        self.grid.steps()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn net_load(&self) -> NetLoadSeries {
        net_load(self)
    }

    /// Sub-scenario over steps `offset..offset + len`.
    pub fn slice(&self, offset: usize, len: usize) -> Result<Scenario> {
        if offset + len > self.len() {
            return Err(Error::Alignment(format!(
                "slice {offset}..{} exceeds scenario length {}",
                offset + len,
                self.len()
            )));
        }
        Scenario::new(
            self.grid.window(offset, len)?,
            self.demand[offset..offset + len].to_vec(),
            self.generation[offset..offset + len].to_vec(),
        )
    }

    /// Same demand with generation removed.
    pub fn without_generation(&self) -> Scenario {
        Scenario {
            grid: self.grid,
            demand: self.demand.clone(),
            generation: vec![0.0; self.len()],
        }
    }
}

/// Net load without storage, z_i = d_i − r_i, in kWh per step.
#[derive(Debug, Clone, PartialEq)]
pub struct NetLoadSeries(Vec<f64>);

impl NetLoadSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "net load entry {i} is not finite"
            )));
        }
        Ok(NetLoadSeries(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest average grid draw over one step, max_i z_i / h, in kW.
    pub fn peak_kw(&self, step_hours: f64) -> f64 {
        self.0.iter().fold(f64::NEG_INFINITY, |m, &z| m.max(z)) / step_hours
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub fn net_load(s: &Scenario) -> NetLoadSeries {
    NetLoadSeries(
        s.demand
            .iter()
            .zip(&s.generation)
            .map(|(d, r)| d - r)
            .collect(),
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    timestamp: String,
    kwh: f64,
}

/// Reads a `timestamp,kwh` file. Values may be signed.
pub fn read_series(path: &Path) -> Result<Vec<(NaiveDateTime, f64)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "timestamp" {
        return Err(csv_err(format!(
            "expected header 'timestamp,<value>', found '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        let ts =
            parse_timestamp(&record[0]).map_err(|e| csv_err(format!("row {}: {e}", line + 1)))?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| csv_err(format!("row {}: bad value '{}'", line + 1, &record[1])))?;
        if !value.is_finite() {
            return Err(csv_err(format!("row {}: non-finite value", line + 1)));
        }
        out.push((ts, value));
    }
    Ok(out)
}

/// Checks the timestamps are uniformly spaced by `h` and returns the grid.
pub fn grid_from_timestamps(stamps: &[NaiveDateTime], step_hours: f64) -> Result<TimeGrid> {
    let first = *stamps
        .first()
        .ok_or_else(|| Error::Grid("series is empty".into()))?;
    let grid = TimeGrid::new(step_hours, stamps.len(), first)?;
    let step = grid.step_duration();
    for (i, pair) in stamps.windows(2).enumerate() {
        let gap = pair[1] - pair[0];
        if gap != step {
            return Err(Error::Grid(format!(
                "rows {} and {} are {} s apart, expected {} s",
                i + 1,
                i + 2,
                gap.num_seconds(),
                step.num_seconds()
            )));
        }
    }
    Ok(grid)
}

/// Loads aligned demand and generation files into a scenario.
pub fn load_scenario(
    demand_path: &Path,
    generation_path: &Path,
    step_hours: f64,
) -> Result<Scenario> {
    let demand = read_series(demand_path)?;
    let generation = read_series(generation_path)?;
    if demand.len() != generation.len() {
        return Err(Error::Alignment(format!(
            "demand has {} rows but generation has {}",
            demand.len(),
            generation.len()
        )));
    }
    if let Some(i) = demand.iter().zip(&generation).position(|(d, g)| d.0 != g.0) {
        return Err(Error::Alignment(format!(
            "row {}: demand timestamp {} differs from generation timestamp {}",
            i + 1,
            demand[i].0,
            generation[i].0
        )));
    }
    let stamps: Vec<_> = demand.iter().map(|r| r.0).collect();
    let grid = grid_from_timestamps(&stamps, step_hours)?;
    Scenario::new(
        grid,
        demand.into_iter().map(|r| r.1).collect(),
        generation.into_iter().map(|r| r.1).collect(),
    )
}

/// Writes one value per step as `timestamp,kwh`.
pub fn write_series<W: Write>(out: W, grid: &TimeGrid, values: &[f64]) -> Result<()> {
    Error::check_len(grid.steps(), values.len())?;
    let mut writer = csv::Writer::from_writer(out);
    let werr = |e: csv::Error| Error::Validation(format!("CSV write failed: {e}"));
    for (i, &kwh) in values.iter().enumerate() {
        writer
            .serialize(Row {
                timestamp: format_timestamp(grid.step_start(i)),
                kwh,
            })
            .map_err(werr)?;
    }
    writer
        .flush()
        .map_err(|e| Error::Validation(format!("CSV write failed: {e}")))
}

pub fn write_series_file(path: &Path, grid: &TimeGrid, values: &[f64]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_series(file, grid, values)
}

/// One observation in a long-format (`series,timestamp,value`) plot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRecord {
    pub series: String,
    pub timestamp: String,
    pub value: f64,
}

pub fn write_long_format<W: Write>(
    out: W,
    grid: &TimeGrid,
    series: &[(&str, &[f64])],
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for (name, values) in series {
        Error::check_len(grid.steps(), values.len())?;
        for (i, &value) in values.iter().enumerate() {
            writer
                .serialize(LongRecord {
                    series: name.to_string(),
                    timestamp: format_timestamp(grid.step_start(i)),
                    value,
                })
                .map_err(|e| Error::Validation(format!("CSV write failed: {e}")))?;
        }
    }
    writer
        .flush()
        .map_err(|e| Error::Validation(format!("CSV write failed: {e}")))
}

pub fn read_long_format(path: &Path) -> Result<Vec<LongRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|r| {
            r.map_err(|e| Error::Csv {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
        })
        .collect()
}
