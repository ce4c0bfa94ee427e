//! Run configuration: defaults, then a key=value file, then flags.
//!
//! File format:
//!
//! ```text
//! # comment
//! seed = 7
//!
//! [model]
//! variant = gst
//! hidden = 64
//!
//! [train]
//! lr = 0.1
//! ```
//!
//! Keys before the first section header belong to the top level. Every key
//! must be known for its section; anything else is rejected.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gssf_core::cell::{CellConfig, Variant};
use gssf_core::decode::BeamOptions;
use gssf_core::smoothing::{default_radius, Smoothing};
use gssf_core::train::{LossKind, TrainConfig};
use gssf_core::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,

    pub variant: Variant,
    pub hidden: usize,
    pub embed: usize,
    /// Falls back to `hidden / 4`.
    pub factor: Option<usize>,
    pub sigma: f64,
    /// Falls back to `ceil(3σ)`.
    pub radius: Option<usize>,
    /// Only used by `paramcount`; training reads these from the dataset.
    pub semantic: usize,
    pub visual: usize,
    pub vocab: usize,

    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub dropout: f64,
    pub loss: LossKind,
    pub grad_clip: Option<f64>,
    pub finetune_embedding: bool,
    pub vocab_max: usize,
    pub vocab_min_doc_frac: f64,

    pub beam: usize,
    pub max_len: usize,
    /// 0 disables the repetition filter.
    pub no_repeat_ngram: usize,
    pub length_normalize: bool,

    pub items: usize,
    pub synth_visual: usize,
    pub synth_semantic: usize,
    pub vocab_words: usize,
    pub top_k: usize,
    pub noise: f64,

    pub threshold: f64,
    pub epsilon: f64,

    pub dataset: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub captions: Option<PathBuf>,
    pub references_english: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let beam = BeamOptions::default();
        RunConfig {
            seed: 0,
            variant: Variant::Gst,
            hidden: 64,
            embed: 32,
            factor: None,
            sigma: 1.0,
            radius: None,
            semantic: 999,
            visual: 2048,
            vocab: 20_000,
            lr: train.learning_rate,
            epochs: train.epochs,
            batch: train.batch_size,
            dropout: train.dropout,
            loss: train.loss,
            grad_clip: train.grad_clip,
            finetune_embedding: train.finetune_embedding,
            vocab_max: 20_000,
            vocab_min_doc_frac: 0.0,
            beam: beam.beam_size,
            max_len: beam.max_len,
            no_repeat_ngram: beam.no_repeat_ngram.unwrap_or(0),
            length_normalize: beam.length_normalize,
            items: 50,
            synth_visual: 16,
            synth_semantic: 32,
            vocab_words: 40,
            top_k: 5,
            noise: 0.05,
            threshold: 1e-4,
            epsilon: gssf_core::train::DEFAULT_EPSILON,
            dataset: None,
            embeddings: None,
            checkpoint: None,
            captions: None,
            references_english: None,
            dictionary: None,
            out: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

fn parse_optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value.eq_ignore_ascii_case("none") || value.is_empty() {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

impl RunConfig {
    /// Sets one `section.key`. The top-level section is `""`.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        let k = full.as_str();
        match (section, key) {
            ("", "seed") => self.seed = parse(k, value)?,

            ("model", "variant") => self.variant = value.parse()?,
            ("model", "hidden") => self.hidden = parse(k, value)?,
            ("model", "embed") => self.embed = parse(k, value)?,
            ("model", "factor") => self.factor = parse_optional(k, value)?,
            ("model", "sigma") => self.sigma = parse(k, value)?,
            ("model", "radius") => self.radius = parse_optional(k, value)?,
            ("model", "semantic") => self.semantic = parse(k, value)?,
            ("model", "visual") => self.visual = parse(k, value)?,
            ("model", "vocab") => self.vocab = parse(k, value)?,

            ("train", "lr") => self.lr = parse(k, value)?,
            ("train", "epochs") => self.epochs = parse(k, value)?,
            ("train", "batch") => self.batch = parse(k, value)?,
            ("train", "dropout") => self.dropout = parse(k, value)?,
            ("train", "loss") => self.loss = value.parse()?,
            ("train", "grad_clip") => self.grad_clip = parse_optional(k, value)?,
            ("train", "finetune_embedding") => self.finetune_embedding = parse_bool(k, value)?,
            ("train", "vocab_max") => self.vocab_max = parse(k, value)?,
            ("train", "vocab_min_doc_frac") => self.vocab_min_doc_frac = parse(k, value)?,

            ("decode", "beam") => self.beam = parse(k, value)?,
            ("decode", "max_len") => self.max_len = parse(k, value)?,
            ("decode", "no_repeat_ngram") => self.no_repeat_ngram = parse(k, value)?,
            ("decode", "length_normalize") => self.length_normalize = parse_bool(k, value)?,

            ("synth", "items") => self.items = parse(k, value)?,
            ("synth", "visual") => self.synth_visual = parse(k, value)?,
            ("synth", "semantic") => self.synth_semantic = parse(k, value)?,
            ("synth", "vocab_words") => self.vocab_words = parse(k, value)?,
            ("synth", "top_k") => self.top_k = parse(k, value)?,
            ("synth", "noise") => self.noise = parse(k, value)?,

            ("gradcheck", "threshold") => self.threshold = parse(k, value)?,
            ("gradcheck", "epsilon") => self.epsilon = parse(k, value)?,

            ("paths", "dataset") => self.dataset = Some(value.into()),
            ("paths", "embeddings") => self.embeddings = Some(value.into()),
            ("paths", "checkpoint") => self.checkpoint = Some(value.into()),
            ("paths", "captions") => self.captions = Some(value.into()),
            ("paths", "references_english") => self.references_english = Some(value.into()),
            ("paths", "dictionary") => self.dictionary = Some(value.into()),
            ("paths", "out") => self.out = Some(value.into()),

            _ => return Err(Error::Config(format!("unknown config key {full:?}"))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {}: unterminated section header", n + 1)))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(&section, key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip_prefix(e))))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn smoothing(&self) -> Result<Smoothing> {
        Smoothing::with_radius(self.sigma, self.radius.unwrap_or_else(|| default_radius(self.sigma)))
    }

    pub fn cell_config(&self, semantic: usize, visual: usize, vocab: usize) -> CellConfig {
        CellConfig::for_variant(self.variant, self.hidden, self.embed, semantic, self.factor, visual, vocab)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            epochs: self.epochs,
            batch_size: self.batch,
            dropout: self.dropout,
            loss: self.loss,
            seed: self.seed,
            grad_clip: self.grad_clip,
            finetune_embedding: self.finetune_embedding,
        }
    }

    pub fn beam_options(&self) -> BeamOptions {
        BeamOptions {
            beam_size: self.beam,
            max_len: self.max_len,
            no_repeat_ngram: (self.no_repeat_ngram > 0).then_some(self.no_repeat_ngram),
            length_normalize: self.length_normalize,
        }
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_top_level() {
        let mut c = RunConfig::default();
        c.apply_text("seed = 9\n# note\n[model]\nvariant = gsscn\nfactor = 3\n\n[train]\nlr=0.5\nloss = se\n")
            .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.variant, Variant::Gsscn);
        assert_eq!(c.factor, Some(3));
        assert_eq!(c.lr, 0.5);
        assert_eq!(c.loss, LossKind::SquaredError);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut c = RunConfig::default();
        let err = c.apply_text("[model]\nhiden = 3\n").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("model.hiden"), "{err}");
        assert!(RunConfig::default().apply_text("lr = 0.1\n").is_err());
        assert!(RunConfig::default().apply_text("[nowhere]\nseed = 1\n").is_err());
    }

    #[test]
    fn malformed_lines_rejected() {
        assert!(RunConfig::default().apply_text("[model\n").is_err());
        assert!(RunConfig::default().apply_text("just words\n").is_err());
        assert!(RunConfig::default().apply_text("[train]\nepochs = many\n").is_err());
    }

    #[test]
    fn optional_values() {
        let mut c = RunConfig::default();
        c.apply_text("[train]\ngrad_clip = 5\n[decode]\nno_repeat_ngram = 0\n").unwrap();
        assert_eq!(c.grad_clip, Some(5.0));
        assert_eq!(c.beam_options().no_repeat_ngram, None);
        c.apply_text("[train]\ngrad_clip = none\n").unwrap();
        assert_eq!(c.grad_clip, None);
    }

    #[test]
    fn defaults_match_library_defaults() {
        let c = RunConfig::default();
        assert_eq!(c.train_config(), TrainConfig::default());
        assert_eq!(c.beam_options(), BeamOptions::default());
    }
}
