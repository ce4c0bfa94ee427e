//! Checkpoint container.
//!
//! A checkpoint is a single JSON object:
//!
//! ```text
//! {
//!   "format":    "gssf-checkpoint",
//!   "version":   1,
//!   "config":    { "variant", "hidden", "embed", "semantic", "visual", "factor", "vocab" },
//!   "smoothing": { "sigma", "radius" },
//!   "vocab_hash": "<sha256 hex of the newline-joined token list>",
//!   "vocab":     { "tokens": [...], "freqs": [...] },
//!   "tensors":   { "<canonical name>": { "shape": [...], "data": [...] }, ... }
//! }
//! ```
//!
//! Tensor names follow `CellParams::named_tensors`. Floats are written in
//! shortest round-trip form, so save → load is bit-exact.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cell::{CellConfig, CellParams, Model};
use crate::data::Vocabulary;
use crate::error::{Error, Result};
use crate::smoothing::Smoothing;
use crate::tensor::Tensor;

pub const CHECKPOINT_FORMAT: &str = "gssf-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub vocab: Vocabulary,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Stored {
    format: String,
    version: u32,
    config: CellConfig,
    smoothing: Smoothing,
    vocab_hash: String,
    vocab: Vocabulary,
    tensors: BTreeMap<String, Tensor>,
}

impl Checkpoint {
    pub fn new(model: Model, vocab: Vocabulary) -> Result<Self> {
        if vocab.len() != model.params.config().vocab {
            return Err(Error::Contract(format!(
                "vocabulary has {} tokens but the cell was built for {}",
                vocab.len(),
                model.params.config().vocab
            )));
        }
        Ok(Checkpoint { model, vocab })
    }

    pub fn to_json(&self) -> Result<String> {
        let stored = Stored {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            config: *self.model.params.config(),
            smoothing: self.model.smoothing,
            vocab_hash: self.vocab.hash(),
            vocab: self.vocab.clone(),
            tensors: self
                .model
                .params
                .named_tensors()
                .into_iter()
                .map(|(n, t)| (n, t.clone()))
                .collect(),
        };
        Ok(serde_json::to_string(&stored)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let stored: Stored = serde_json::from_str(text)?;
        if stored.format != CHECKPOINT_FORMAT {
            return Err(Error::Contract(format!(
                "not a checkpoint (format {:?})",
                stored.format
            )));
        }
        if stored.version != CHECKPOINT_VERSION {
            return Err(Error::Contract(format!(
                "unsupported checkpoint version {}",
                stored.version
            )));
        }
        if stored.vocab.hash() != stored.vocab_hash {
            return Err(Error::Contract("vocabulary hash mismatch".into()));
        }
        let smoothing = Smoothing::with_radius(stored.smoothing.sigma, stored.smoothing.radius)?;
        let params = CellParams::from_named(&stored.config, stored.tensors)?;
        Checkpoint::new(Model::new(params, smoothing), stored.vocab)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_json(&text)
    }
}
