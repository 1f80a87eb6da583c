//! Settled-state snapshots.
//!
//! Stored as JSON; every float is written in shortest round-trip form so a
//! reloaded snapshot continues bit-identically.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::PidState;
use crate::error::{Error, Result};
use crate::forces::ContactMemory;
use crate::model::Model;
use crate::rigidbody::SystemState;

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSnapshot {
    pub version: u32,
    pub model_hash: String,
    /// How the state was settled (`pid` or `passive`); must match the mode
    /// that resumes from it.
    pub settle_variant: String,
    pub step_size: f64,
    pub state: SystemState,
    pub controllers: Vec<PidState>,
    pub contact_memory: ContactMemory,
}

impl RestartSnapshot {
    pub fn check_model(&self, model: &Model) -> Result<()> {
        if self.model_hash != model.hash() {
            return Err(Error::HashMismatch { expected: model.hash().into(), found: self.model_hash.clone() });
        }
        model.tree.check_len(self.state.q.len())?;
        Ok(())
    }
}

pub fn save_restart(path: &Path, snapshot: &RestartSnapshot) -> Result<()> {
    let text = serde_json::to_string_pretty(snapshot)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_restart(path: &Path) -> Result<RestartSnapshot> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != SNAPSHOT_VERSION {
        return Err(Error::VersionMismatch { expected: SNAPSHOT_VERSION, found: version });
    }
    Ok(serde_json::from_value(value)?)
}
