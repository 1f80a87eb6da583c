//! Posture drift summary for the controller comparison.

use serde::{Deserialize, Serialize};

use super::log::TrajectoryLog;
use crate::error::{Error, Result};

/// Change of head and trunk pitch between the end of settling and the last
/// second of the run, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub head_pitch_drift: f64,
    pub trunk_pitch_drift: f64,
    /// Forward (positive x) displacement of the trunk COM, m.
    pub trunk_forward: f64,
    /// Largest |pitch| excursion from the settled value over the run.
    pub head_pitch_peak: f64,
    pub trunk_pitch_peak: f64,
}

fn window_drift(log: &TrajectoryLog, name: &str, settle_time: f64) -> Result<(f64, f64)> {
    let x = log.channel(name)?;
    let tol = 0.25 / log.sample_rate.max(1.0);
    let i0 = log.time.iter().position(|&t| t >= settle_time - tol).ok_or(Error::SeriesTooShort { len: log.len(), window: 1 })?;
    let t_end = *log.time.last().unwrap_or(&0.0);
    let tail: Vec<f64> =
        log.time.iter().zip(x).filter(|(t, _)| **t >= t_end - 1.0 + tol).map(|(_, v)| *v).collect();
    if tail.is_empty() || i0 >= x.len() {
        return Err(Error::SeriesTooShort { len: log.len(), window: 1 });
    }
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let peak = x[i0..].iter().fold(0.0f64, |m, v| m.max((v - x[i0]).abs()));
    Ok((mean - x[i0], peak))
}

/// `head` and `trunk` are the segment names carrying the pitch channels.
pub fn drift_report(log: &TrajectoryLog, head: &str, trunk: &str, settle_time: f64) -> Result<DriftReport> {
    let (hd, hp) = window_drift(log, &format!("{head}.pitch"), settle_time)?;
    let (td, tp) = window_drift(log, &format!("{trunk}.pitch"), settle_time)?;
    let (tf, _) = window_drift(log, &format!("{trunk}.pos_x"), settle_time)?;
    Ok(DriftReport {
        head_pitch_drift: hd.to_degrees(),
        trunk_pitch_drift: td.to_degrees(),
        trunk_forward: tf,
        head_pitch_peak: hp.to_degrees(),
        trunk_pitch_peak: tp.to_degrees(),
    })
}
