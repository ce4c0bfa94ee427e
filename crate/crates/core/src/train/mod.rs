//! Losses, backpropagation through time, gradient checking and SGD.

mod backward;
mod dropout;
mod gradcheck;
mod loss;
mod sgd;

pub use backward::{backward, batch_loss, sequence_loss, BatchGradient, Sample};
pub use dropout::DropoutMasks;
pub use gradcheck::{
    grad_check, relative_error, GradCheckReport, GradEntry, TinyProblem, DEFAULT_EPSILON,
};
pub use loss::{loss, LossKind};
pub use sgd::{clip_grad_norm, sgd_update};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cell::{CellConfig, CellParams, Checkpoint, Model};
use crate::data::{Dataset, Vocabulary};
use crate::error::{Error, Result};
use crate::smoothing::Smoothing;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub loss: LossKind,
    pub seed: u64,
    pub grad_clip: Option<f64>,
    /// Update the word embedding table as well.
    pub finetune_embedding: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 50,
            batch_size: 32,
            dropout: 0.5,
            loss: LossKind::CrossEntropy,
            seed: 0,
            grad_clip: None,
            finetune_embedding: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("grad clip must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

/// Everything besides the dataset that a training run needs.
#[derive(Debug, Clone)]
pub struct TrainSetup {
    pub vocab: Vocabulary,
    pub smoothing: Smoothing,
    /// Pretrained `[V × m]` table; random when absent.
    pub embeddings: Option<Tensor>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    /// Mean training loss per epoch.
    pub loss_trace: Vec<f64>,
}

struct Prepared {
    visual: Vec<f64>,
    semantic: Option<Vec<f64>>,
    tokens: Vec<usize>,
}

fn mix(seed: u64, epoch: usize, index: usize) -> u64 {
    let mut x = seed
        ^ (epoch as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (index as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^ (x >> 33)
}

/// Minibatch SGD with teacher forcing. Every caption of every item is one
/// training sequence; sequences are reshuffled each epoch.
pub fn train(
    dataset: &Dataset,
    cell_config: &CellConfig,
    config: &TrainConfig,
    setup: &TrainSetup,
) -> Result<TrainOutcome> {
    config.validate()?;
    cell_config.validate()?;
    if dataset.items.is_empty() {
        return Err(Error::Config("cannot train on an empty dataset".into()));
    }
    if setup.vocab.len() != cell_config.vocab {
        return Err(Error::Config(format!(
            "vocabulary has {} tokens but the cell expects {}",
            setup.vocab.len(),
            cell_config.vocab
        )));
    }
    let mut params = CellParams::init(cell_config, config.seed)?;
    if let Some(e) = &setup.embeddings {
        if e.shape() != params.embedding.shape() {
            return Err(Error::shape(e.shape(), params.embedding.shape(), "pretrained embeddings"));
        }
        params.embedding = e.clone();
    }

    let uses_semantics = cell_config.variant.uses_semantics();
    let mut sequences = Vec::new();
    for item in &dataset.items {
        let semantic = if uses_semantics {
            Some(setup.smoothing.apply(&item.semantic)?)
        } else {
            None
        };
        for caption in &item.captions {
            sequences.push(Prepared {
                visual: item.visual.clone(),
                semantic: semantic.clone(),
                tokens: setup.vocab.encode(caption),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<Sample<'_>> = chunk
                .iter()
                .map(|&j| Sample {
                    visual: &sequences[j].visual,
                    semantic: sequences[j].semantic.as_deref(),
                    tokens: &sequences[j].tokens,
                })
                .collect();
            let masks = chunk
                .iter()
                .zip(&batch)
                .map(|(&j, s)| {
                    DropoutMasks::sample(cell_config, s.steps(), config.dropout, mix(config.seed, epoch, j))
                })
                .collect::<Result<Vec<_>>>()?;
            let BatchGradient { loss, mut grads } = backward(&params, &batch, config.loss, Some(&masks))
                .map_err(|e| match e {
                    Error::Numeric { what, .. } => Error::numeric(format!("{what} (epoch {epoch})"), b),
                    other => other,
                })?;
            if !loss.is_finite() {
                return Err(Error::numeric(format!("training loss (epoch {epoch})"), b));
            }
            if !config.finetune_embedding {
                grads.embedding.fill(0.0);
            }
            if let Some(max) = config.grad_clip {
                clip_grad_norm(&mut grads, max);
            }
            sgd_update(&mut params, &grads, config.learning_rate)?;
            total += loss * chunk.len() as f64;
        }
        loss_trace.push(total / sequences.len() as f64);
    }

    let model = Model::new(params, setup.smoothing);
    Ok(TrainOutcome {
        checkpoint: Checkpoint::new(model, setup.vocab.clone())?,
        loss_trace,
    })
}

pub fn loss_trace_csv(trace: &[f64]) -> String {
    let mut out = String::from("epoch,mean_loss\n");
    for (e, l) in trace.iter().enumerate() {
        let _ = writeln!(out, "{},{l}", e + 1);
    }
    out
}

pub fn write_loss_trace(path: impl AsRef<Path>, trace: &[f64]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, loss_trace_csv(trace)).map_err(|e| Error::io(path, e))
}
