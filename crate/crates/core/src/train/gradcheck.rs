//! Central finite-difference verification of the analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cell::{CellConfig, CellParams, Variant};
use crate::error::Result;
use crate::smoothing::Smoothing;
use crate::train::backward::{backward, batch_loss, Sample};
use crate::train::loss::LossKind;

pub const DEFAULT_EPSILON: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradEntry {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub entries: Vec<GradEntry>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.entries.iter().map(|e| e.rel_error).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&GradEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }

    pub fn fraction_within(&self, tol: f64) -> f64 {
        if self.entries.is_empty() {
            return 1.0;
        }
        let ok = self.entries.iter().filter(|e| e.rel_error <= tol).count();
        ok as f64 / self.entries.len() as f64
    }
}

/// `|a − n| / max(|a|, |n|)`, zero when both vanish.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale == 0.0 {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Compares every parameter entry's analytic gradient against
/// `(L(w + ε) − L(w − ε)) / 2ε`, without dropout.
pub fn grad_check(
    params: &CellParams,
    batch: &[Sample<'_>],
    kind: LossKind,
    epsilon: f64,
) -> Result<GradCheckReport> {
    let analytic = backward(params, batch, kind, None)?.grads;
    let mut probe = params.clone();
    let mut entries = Vec::new();
    let names: Vec<(String, usize)> = params
        .named_tensors()
        .into_iter()
        .map(|(n, t)| (n, t.len()))
        .collect();
    let grads = analytic.named_tensors();
    for (k, (name, len)) in names.iter().enumerate() {
        for i in 0..*len {
            let original = tensor_at(&mut probe, k)[i];
            tensor_at(&mut probe, k)[i] = original + epsilon;
            let plus = batch_loss(&probe, batch, kind)?;
            tensor_at(&mut probe, k)[i] = original - epsilon;
            let minus = batch_loss(&probe, batch, kind)?;
            tensor_at(&mut probe, k)[i] = original;
            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = grads[k].1.data()[i];
            entries.push(GradEntry {
                tensor: name.clone(),
                index: i,
                analytic: a,
                numeric,
                rel_error: relative_error(a, numeric),
            });
        }
    }
    Ok(GradCheckReport { entries })
}

fn tensor_at(params: &mut CellParams, k: usize) -> &mut [f64] {
    params
        .named_tensors_mut()
        .into_iter()
        .nth(k)
        .map(|(_, t)| t.data_mut())
        .expect("tensor index from the same parameter set")
}

/// A small, fully random problem for gradient checking.
#[derive(Debug, Clone)]
pub struct TinyProblem {
    pub params: CellParams,
    pub visual: Vec<Vec<f64>>,
    pub semantic: Vec<Option<Vec<f64>>>,
    pub tokens: Vec<Vec<usize>>,
}

impl TinyProblem {
    /// `d=4, m=3, s=5, f=2, V=6, v=3`, two sequences of three predictions.
    /// Biases are randomized too, so no gradient is trivially zero.
    pub fn new(variant: Variant, seed: u64) -> Result<Self> {
        let config = CellConfig::for_variant(variant, 4, 3, 5, Some(2), 3, 6);
        Self::with_config(&config, 3, 2, seed)
    }

    pub fn with_config(config: &CellConfig, steps: usize, samples: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut params = CellParams::init(config, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
        for (name, t) in params.named_tensors_mut() {
            if name.ends_with(".b") {
                t.data_mut().iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
            }
        }
        let smoothing = Smoothing::default();
        let mut visual = Vec::new();
        let mut semantic = Vec::new();
        let mut tokens = Vec::new();
        for _ in 0..samples {
            visual.push((0..config.visual).map(|_| rng.gen_range(-1.0..1.0)).collect());
            semantic.push(match config.semantic {
                Some(s) if config.variant.uses_semantics() => {
                    let raw: Vec<f64> = (0..s).map(|_| rng.gen::<f64>()).collect();
                    Some(smoothing.apply(&raw)?)
                }
                _ => None,
            });
            let mut seq = vec![crate::data::BOS];
            seq.extend((0..steps.saturating_sub(1)).map(|_| rng.gen_range(0..config.vocab)));
            seq.push(crate::data::EOS);
            tokens.push(seq);
        }
        Ok(TinyProblem {
            params,
            visual,
            semantic,
            tokens,
        })
    }

    pub fn samples(&self) -> Vec<Sample<'_>> {
        (0..self.tokens.len())
            .map(|j| Sample {
                visual: &self.visual[j],
                semantic: self.semantic[j].as_deref(),
                tokens: &self.tokens[j],
            })
            .collect()
    }

    pub fn check(&self, kind: LossKind) -> Result<GradCheckReport> {
        grad_check(&self.params, &self.samples(), kind, DEFAULT_EPSILON)
    }
}
