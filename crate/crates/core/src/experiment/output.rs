use std::collections::VecDeque;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::{RunSink, TurnRecord};
use super::summary::{distributions, summarize, Summary};
use super::world::{DayLog, DayRecord, DayResult, PLATFORMS};
use crate::error::{Error, Result};

pub const DAYS_FILE: &str = "days.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const DISTRIBUTIONS_FILE: &str = "distributions.csv";
pub const FARES_FILE: &str = "fares.csv";

fn headed<S: AsRef<str>>(path: &Path, header: &[S]) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header.iter().map(|h| h.as_ref()))?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(w)
}

/// Writes rows with a header, even when there are none.
pub fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = headed(path, header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub const DAY_COLUMNS: &[&str] = &[
    "day",
    "platform",
    "fare_eur_per_km",
    "participating_travelers",
    "served_rides",
    "unserved_travelers",
    "candidate_drivers",
    "locked_out_drivers",
    "active_drivers",
    "subsidized_drivers",
    "mean_wait_s",
    "mean_hourly_income_eur",
    "fares_total_eur",
    "driver_gross_eur",
    "revenue_eur",
    "subsidy_eur",
    "fixed_cost_eur",
    "profit_eur",
    "capital_eur",
];

pub const TURN_COLUMNS: &[&str] = &[
    "turn",
    "day",
    "mover",
    "from_fare_eur_per_km",
    "to_fare_eur_per_km",
    "move",
    "days",
    "utility_down_eur",
    "utility_stay_eur",
    "utility_up_eur",
    "predicted_eur",
    "realized_eur",
    "equilibrium",
];

pub const DISTRIBUTION_COLUMNS: &[&str] = &["kind", "day", "platform", "agent", "value"];

pub fn write_days(path: &Path, rows: &[DayRecord]) -> Result<()> {
    write_rows(path, DAY_COLUMNS, rows)
}

pub fn read_days(path: &Path) -> Result<Vec<DayRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

fn summary_header() -> Vec<String> {
    let mut header = vec!["metric".to_string()];
    header.extend((1..=PLATFORMS).map(|k| format!("platform_{k}")));
    header.push("market".into());
    header
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let mut w = headed(path, &summary_header())?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in &summary.rows {
        let mut rec = vec![row.metric.to_string()];
        rec.extend(row.platforms.iter().map(|v| cell(*v)));
        rec.push(cell(row.market));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Streams a run to an output directory: days and turns are flushed as
/// they complete, summary and distributions are written by [`finish`].
///
/// [`finish`]: CsvSink::finish
pub struct CsvSink {
    dir: PathBuf,
    days: csv::Writer<File>,
    fares: csv::Writer<File>,
    records: Vec<DayRecord>,
    recent: VecDeque<DayLog>,
    window: usize,
}

impl CsvSink {
    pub fn create(dir: impl Into<PathBuf>, window: usize) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(CsvSink {
            days: headed(&dir.join(DAYS_FILE), DAY_COLUMNS)?,
            fares: headed(&dir.join(FARES_FILE), TURN_COLUMNS)?,
            dir,
            records: Vec::new(),
            recent: VecDeque::with_capacity(window + 1),
            window,
        })
    }

    pub fn records(&self) -> &[DayRecord] {
        &self.records
    }

    /// Writes the summary and distributions over the final window, shrunk
    /// to the simulated days if the run was shorter. Returns the summary,
    /// or `None` when no day was simulated.
    pub fn finish(mut self, shift_hours: f64) -> Result<Option<Summary>> {
        self.fares.flush().map_err(|e| Error::io(self.dir.join(FARES_FILE), e))?;
        let window = self.window.min(self.recent.len());
        let summary_path = self.dir.join(SUMMARY_FILE);
        let dist_path = self.dir.join(DISTRIBUTIONS_FILE);
        if window == 0 {
            headed(&summary_path, &summary_header())?;
            write_rows::<()>(&dist_path, DISTRIBUTION_COLUMNS, &[])?;
            return Ok(None);
        }
        let summary = summarize(&self.records, window)?;
        write_summary(&summary_path, &summary)?;
        let logs: Vec<DayLog> = self.recent.drain(..).collect();
        write_rows(&dist_path, DISTRIBUTION_COLUMNS, &distributions(&logs, window, shift_hours)?)?;
        Ok(Some(summary))
    }
}

impl RunSink for CsvSink {
    fn day(&mut self, result: DayResult) -> Result<()> {
        for r in &result.records {
            self.days.serialize(r)?;
        }
        self.days.flush().map_err(|e| Error::io(self.dir.join(DAYS_FILE), e))?;
        self.records.extend(result.records);
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(result.log);
        Ok(())
    }

    fn turn(&mut self, turn: TurnRecord) -> Result<()> {
        self.fares.serialize(&turn)?;
        self.fares.flush().map_err(|e| Error::io(self.dir.join(FARES_FILE), e))
    }
}
