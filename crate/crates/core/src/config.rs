//! Single JSON run configuration shared by every command.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::AnalysisConfig;
use crate::body::SeatConfig;
use crate::calibration::CalibrationConfig;
use crate::error::{Error, Result};
use crate::model::{Model, ModelSpec};
use crate::sim::{generate_excitation, ExcitationConfig, ExcitationSignal, SimConfig};

/// Every section is optional and falls back to its defaults; unknown keys are
/// rejected at every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub seat: SeatConfig,
    pub excitation: ExcitationConfig,
    pub simulation: SimConfig,
    pub analysis: AnalysisConfig,
    pub calibration: CalibrationConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    /// Checks that need no simulation; model construction does the rest.
    pub fn validate(&self) -> Result<()> {
        self.simulation.decimation()?;
        let w = self.analysis.estimator.overlap;
        if !(0.0..1.0).contains(&w) {
            return Err(Error::Config(format!("analysis.estimator.overlap {w} must be in [0, 1)")));
        }
        if !(self.analysis.estimator.window_seconds > 0.0) {
            return Err(Error::Config("analysis.estimator.window_seconds must be positive".into()));
        }
        self.calibration.validate()
    }

    /// sha256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn build_model(&self) -> Result<Model> {
        Model::build(&self.model, &self.seat)
    }

    pub fn excitation_signal(&self) -> Result<ExcitationSignal> {
        generate_excitation(&self.excitation, 1.0 / self.simulation.step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let back = RunConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, back);
        assert_eq!(c.hash(), back.hash());
    }

    #[test]
    fn partial_sections_fill_defaults() {
        let c = RunConfig::from_json(r#"{"excitation": {"seed": 7}, "model": {"kind": "lumped3"}}"#).unwrap();
        assert_eq!(c.excitation.seed, 7);
        assert_eq!(c.excitation.rms, 0.1941);
        assert!(matches!(c.model, ModelSpec::Lumped3(_)));
    }

    #[test]
    fn unknown_keys_name_the_field() {
        let e = RunConfig::from_json(r#"{"simulation": {"stepsize": 0.001}}"#).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("stepsize") && msg.contains("line"), "{msg}");
        assert!(RunConfig::from_json(r#"{"model": {"kind": "ehm", "gravty": [0, 0, -9.81]}}"#).is_err());
    }

    #[test]
    fn inconsistent_output_rate_rejected() {
        assert!(RunConfig::from_json(r#"{"simulation": {"output_rate": 300}}"#).is_err());
    }
}
