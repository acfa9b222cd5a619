//! Per-step training logs as comma-separated values.
//!
//! Columns: `step, loss, mean_reward, mean_advantage, kl, beta`, then
//! `raw_<property>` and `score_<property>` for every property, then
//! `wall_time` last. Reals are written in scientific notation with nine
//! significant digits.

use std::fs::File;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogRecord {
    pub step: usize,
    pub loss: f64,
    pub mean_reward: f64,
    pub mean_advantage: f64,
    pub kl: f64,
    pub beta: f64,
    /// Mean raw property value over valid samples, per property.
    pub raw: Vec<f64>,
    /// Mean sigmoid-aligned score over all samples, per property.
    pub score: Vec<f64>,
    /// Seconds since the run started.
    pub wall_time: f64,
}

pub const FIXED_COLUMNS: [&str; 6] = ["step", "loss", "mean_reward", "mean_advantage", "kl", "beta"];

pub fn header(properties: &[String]) -> Vec<String> {
    let mut h: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    h.extend(properties.iter().map(|p| format!("raw_{p}")));
    h.extend(properties.iter().map(|p| format!("score_{p}")));
    h.push("wall_time".into());
    h
}

pub fn format_real(x: f64) -> String {
    format!("{x:.8e}")
}

/// Rounds through the log format, i.e. what a parse-back will return.
pub fn round_real(x: f64) -> f64 {
    format_real(x).parse().expect("formatted float parses")
}

impl TrainLogRecord {
    fn fields(&self) -> Vec<String> {
        let mut f = vec![self.step.to_string()];
        f.extend([self.loss, self.mean_reward, self.mean_advantage, self.kl, self.beta].map(format_real));
        f.extend(self.raw.iter().chain(&self.score).map(|&x| format_real(x)));
        f.push(format_real(self.wall_time));
        f
    }
}

/// Streams records to disk, flushing after each one so an interrupted run
/// leaves a readable prefix.
pub struct LogWriter {
    path: PathBuf,
    properties: usize,
    inner: csv::Writer<File>,
}

impl LogWriter {
    pub fn create(path: &Path, properties: &[String]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut inner = csv::Writer::from_writer(file);
        inner.write_record(header(properties))?;
        inner.flush().map_err(|e| Error::io(path, e))?;
        Ok(LogWriter { path: path.to_path_buf(), properties: properties.len(), inner })
    }

    pub fn append(&mut self, rec: &TrainLogRecord) -> Result<()> {
        if rec.raw.len() != self.properties || rec.score.len() != self.properties {
            return Err(Error::LengthMismatch { expected: self.properties, actual: rec.raw.len() });
        }
        self.inner.write_record(rec.fields())?;
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn emit_logs(records: &[TrainLogRecord], properties: &[String], path: &Path) -> Result<()> {
    let mut w = LogWriter::create(path, properties)?;
    for r in records {
        w.append(r)?;
    }
    Ok(())
}

/// Reads a log back. Returns the property names and the records.
pub fn parse_log(path: &Path) -> Result<(Vec<String>, Vec<TrainLogRecord>)> {
    let perr = |m: String| Error::Parse { path: path.to_path_buf(), message: m };
    let mut rdr = csv::Reader::from_path(path)?;
    let head: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let n = head.len();
    if n < FIXED_COLUMNS.len() + 1 || (n - FIXED_COLUMNS.len() - 1) % 2 != 0 || head[..6] != FIXED_COLUMNS {
        return Err(perr(format!("unexpected header {head:?}")));
    }
    let m = (n - 7) / 2;
    let props: Vec<String> = head[6..6 + m]
        .iter()
        .map(|h| h.strip_prefix("raw_").map(str::to_string).ok_or_else(|| perr(format!("bad column `{h}`"))))
        .collect::<Result<_>>()?;
    if header(&props) != head {
        return Err(perr(format!("unexpected header {head:?}")));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let real = |i: usize| -> Result<f64> {
            row[i].parse().map_err(|_| perr(format!("bad number `{}` in column {}", &row[i], head[i])))
        };
        out.push(TrainLogRecord {
            step: row[0].parse().map_err(|_| perr(format!("bad step `{}`", &row[0])))?,
            loss: real(1)?,
            mean_reward: real(2)?,
            mean_advantage: real(3)?,
            kl: real(4)?,
            beta: real(5)?,
            raw: (6..6 + m).map(real).collect::<Result<_>>()?,
            score: (6 + m..6 + 2 * m).map(real).collect::<Result<_>>()?,
            wall_time: real(n - 1)?,
        });
    }
    Ok((props, out))
}
