//! The three recurrent caption cells and their parameters.

mod checkpoint;
mod config;
mod params;
mod step;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{default_factor, param_count, CellConfig, Variant};
pub use params::{CellParams, Gate, GateFactors, GateWeights, InitMlp, TagFusion};
pub use step::{
    embed, gsscn_step, gst_step, init_state, lstm_step, project_logits, CellState,
};

pub(crate) use step::{step_traced, StepTrace};

use crate::error::Result;
use crate::smoothing::Smoothing;

/// Trained cell plus the smoothing it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: CellParams,
    pub smoothing: Smoothing,
}

impl Model {
    pub fn new(params: CellParams, smoothing: Smoothing) -> Self {
        Model { params, smoothing }
    }

    pub fn variant(&self) -> Variant {
        self.params.variant()
    }

    /// Smoothed features for variants that consume them, `None` for LSTM.
    pub fn semantic_input(&self, raw: &[f64]) -> Result<Option<Vec<f64>>> {
        if self.variant().uses_semantics() {
            self.smoothing.apply(raw).map(Some)
        } else {
            Ok(None)
        }
    }
}
