//! Versioned JSON checkpoints.
//!
//! Floats are written with round-trip precision, so a save/load cycle restores
//! parameters and optimizer moments bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::optim::{Optimizer, ParamBlock};

pub const CHECKPOINT_FORMAT: &str = "adamo-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    /// Completed epochs.
    pub epoch: usize,
    pub config: ExperimentConfig,
    pub blocks: Vec<ParamBlock>,
    pub optimizer: Optimizer,
}

impl Checkpoint {
    pub fn new(
        epoch: usize,
        config: ExperimentConfig,
        blocks: Vec<ParamBlock>,
        optimizer: Optimizer,
    ) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            epoch,
            config,
            blocks,
            optimizer,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Self = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        ck.check()?;
        Ok(ck)
    }

    fn check(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "unknown format `{}`",
                self.format
            )));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        if self.optimizer.states.len() != self.blocks.len() {
            return Err(Error::Checkpoint(format!(
                "{} optimizer states for {} blocks",
                self.optimizer.states.len(),
                self.blocks.len()
            )));
        }
        for (b, s) in self.blocks.iter().zip(&self.optimizer.states) {
            if s.numel() != b.numel() {
                return Err(Error::Checkpoint(format!(
                    "state size mismatch for block `{}`",
                    b.name
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        serde_json::to_writer(&mut out, self)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let ck: Self = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        ck.check()?;
        Ok(ck)
    }
}
