//! Versioned JSON container for parameter sets.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::tensor::ParamSet;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Parameters plus the configuration `C` needed to rebuild their layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<C> {
    pub format_version: u32,
    pub seed: u64,
    pub config: C,
    pub params: ParamSet,
}

impl<C: Serialize + DeserializeOwned> Checkpoint<C> {
    pub fn new(seed: u64, config: C, params: ParamSet) -> Self {
        Checkpoint {
            format_version: CHECKPOINT_VERSION,
            seed,
            config,
            params,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Self = serde_json::from_str(&text)?;
        if ckpt.format_version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {} (expected {CHECKPOINT_VERSION})",
                ckpt.format_version
            )));
        }
        Ok(ckpt)
    }

    /// Checks that the stored tensors have exactly the names and shapes of `layout`.
    pub fn validate_against(&self, layout: &ParamSet) -> Result<()> {
        if self.params.len() != layout.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {} tensors, layout expects {}",
                self.params.len(),
                layout.len()
            )));
        }
        for id in layout.ids() {
            let (got, want) = (self.params.get(id), layout.get(id));
            if self.params.name(id) != layout.name(id) || got.shape() != want.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor {}: checkpoint has `{}` {:?}, layout expects `{}` {:?}",
                    id.0,
                    self.params.name(id),
                    got.shape(),
                    layout.name(id),
                    want.shape()
                )));
            }
        }
        Ok(())
    }
}
