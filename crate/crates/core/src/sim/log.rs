//! Column-oriented trajectory log and its CSV form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channel groups to record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Prescribed seat acceleration, velocity and displacement.
    pub seat: bool,
    /// Segments whose COM kinematics, angular velocity and attitude are logged.
    /// Empty selects the model's reporting bodies, `["*"]` selects all.
    #[serde(default)]
    pub segments: Vec<String>,
    pub joints: bool,
    pub contacts: bool,
    pub controls: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { seat: true, segments: Vec::new(), joints: true, contacts: true, controls: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    pub sample_rate: f64,
    pub names: Vec<String>,
    pub time: Vec<f64>,
    /// One vector per channel, aligned with `time`.
    pub data: Vec<Vec<f64>>,
}

impl TrajectoryLog {
    pub fn new(names: Vec<String>, sample_rate: f64) -> Self {
        let data = vec![Vec::new(); names.len()];
        Self { sample_rate, names, time: Vec::new(), data }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn push(&mut self, t: f64, row: &[f64]) {
        debug_assert_eq!(row.len(), self.names.len());
        self.time.push(t);
        for (col, v) in self.data.iter_mut().zip(row) {
            col.push(*v);
        }
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn channel(&self, name: &str) -> Result<&[f64]> {
        self.index(name).map(|i| self.data[i].as_slice()).ok_or_else(|| Error::MissingChannel(name.into()))
    }

    /// Rows with `t ≥ start` (tolerating rounding of the time grid).
    pub fn from_time(&self, start: f64) -> Self {
        let tol = 0.25 / self.sample_rate.max(1.0);
        let first = self.time.iter().position(|&t| t >= start - tol).unwrap_or(self.time.len());
        Self {
            sample_rate: self.sample_rate,
            names: self.names.clone(),
            time: self.time[first..].to_vec(),
            data: self.data.iter().map(|c| c[first..].to_vec()).collect(),
        }
    }

    /// Header `t,<channel>...`; values use the shortest exact decimal form.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        let mut header = vec!["t".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).map_err(|e| csv_err(path, e))?;
        let mut rec = Vec::with_capacity(self.names.len() + 1);
        for i in 0..self.len() {
            rec.clear();
            rec.push(self.time[i].to_string());
            rec.extend(self.data.iter().map(|c| c[i].to_string()));
            w.write_record(&rec).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
        let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
        if header.get(0) != Some("t") {
            return Err(Error::Format { path: path.into(), reason: "first column must be `t`".into() });
        }
        let names: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let mut log = Self::new(names, 0.0);
        let mut row = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            row.clear();
            for field in rec.iter() {
                row.push(field.parse::<f64>().map_err(|e| Error::Format {
                    path: path.into(),
                    reason: format!("row {}: {e}", line + 2),
                })?);
            }
            log.push(row[0], &row[1..]);
        }
        if log.len() >= 2 {
            log.sample_rate = 1.0 / (log.time[1] - log.time[0]);
        }
        Ok(log)
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Format { path: path.into(), reason: e.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let mut log = TrajectoryLog::new(vec!["a".into(), "b.c".into()], 200.0);
        log.push(0.0, &[0.1, -1.0 / 3.0]);
        log.push(0.005, &[std::f64::consts::PI, 1e-300]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log.csv");
        log.write_csv(&p).unwrap();
        let back = TrajectoryLog::read_csv(&p).unwrap();
        assert_eq!(back.names, log.names);
        assert_eq!(back.data, log.data);
        assert_eq!(back.time, log.time);
        assert!((back.sample_rate - 200.0).abs() < 1e-9);
    }

    #[test]
    fn missing_channel_is_named() {
        let log = TrajectoryLog::new(vec!["x".into()], 1.0);
        match log.channel("head.acc_z") {
            Err(Error::MissingChannel(c)) => assert_eq!(c, "head.acc_z"),
            other => panic!("{other:?}"),
        }
    }
}
