//! `gssf`: synthesize data, train, generate, evaluate and inspect caption
//! generators from one binary.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use gssf_core::cell::Variant;
use gssf_core::train::LossKind;
use gssf_core::Error;

#[derive(Parser, Debug)]
#[command(name = "gssf", version, about = "Caption generators with Gaussian-smoothed semantic tags")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset with a planted tag-to-caption rule.
    Synth(SynthCmd),
    /// Train a caption generator; writes a checkpoint and a loss CSV.
    Train(TrainCmd),
    /// Caption every item of a dataset with a trained checkpoint.
    Generate(GenerateCmd),
    /// Score generated captions; writes a JSON report and a table.
    Evaluate(EvaluateCmd),
    /// Compare analytic and finite-difference gradients on a tiny problem.
    Gradcheck(GradcheckCmd),
    /// Print parameter counts for every variant at the given dims.
    Paramcount(ParamcountCmd),
}

#[derive(Args, Debug)]
struct Common {
    /// key=value config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed for everything random in the command
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SynthCmd {
    #[command(flatten)]
    common: Common,
    /// Number of items
    #[arg(long)]
    items: Option<usize>,
    /// Visual feature dimension
    #[arg(long)]
    visual: Option<usize>,
    /// Number of semantic tags
    #[arg(long)]
    semantic: Option<usize>,
    /// Distinct caption words
    #[arg(long)]
    vocab_words: Option<usize>,
    /// Caption length (strongest tags named)
    #[arg(long)]
    top_k: Option<usize>,
    /// Uniform noise amplitude on visual features
    #[arg(long)]
    noise: Option<f64>,
    /// Output dataset path (JSON lines)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Cell variant
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// Hidden size d
    #[arg(long)]
    hidden: Option<usize>,
    /// Word embedding size m
    #[arg(long)]
    embed: Option<usize>,
    /// GSSCN factor size f (default d/4)
    #[arg(long)]
    factor: Option<usize>,
    /// Gaussian smoothing width over tag indices
    #[arg(long)]
    sigma: Option<f64>,
    /// Kernel truncation radius (default ceil(3·sigma))
    #[arg(long)]
    radius: Option<usize>,
}

#[derive(Args, Debug)]
struct OptimArgs {
    /// Loss function
    #[arg(long, value_parser = parse_loss)]
    loss: Option<LossKind>,
    /// Dropout rate in [0, 1)
    #[arg(long)]
    dropout: Option<f64>,
    /// Passes over the training data
    #[arg(long)]
    epochs: Option<usize>,
    /// Learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Minibatch size
    #[arg(long)]
    batch: Option<usize>,
    /// Clip the global gradient norm to this value
    #[arg(long)]
    grad_clip: Option<f64>,
    /// Also update the word embedding table
    #[arg(long)]
    finetune_embedding: Option<bool>,
    /// Maximum vocabulary size, reserved tokens included
    #[arg(long)]
    vocab_max: Option<usize>,
    /// Minimum fraction of captions a word must appear in
    #[arg(long)]
    vocab_min_doc_frac: Option<f64>,
}

#[derive(Args, Debug)]
struct TrainCmd {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    optim: OptimArgs,
    /// Training dataset (JSON lines)
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Pretrained word vectors ("word v1 v2 ..." per line)
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Checkpoint path, used when --out is absent
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Checkpoint output path; the loss trace goes next to it as .loss.csv
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    /// Beam width (1 without a repetition filter is greedy)
    #[arg(long)]
    beam: Option<usize>,
    /// Maximum generated tokens, end token included
    #[arg(long)]
    max_len: Option<usize>,
    /// Block repeated n-grams of this size; 0 disables
    #[arg(long)]
    no_repeat_ngram: Option<usize>,
    /// Rank finished hypotheses by mean log-probability
    #[arg(long)]
    length_normalize: Option<bool>,
}

#[derive(Args, Debug)]
struct GenerateCmd {
    #[command(flatten)]
    common: Common,
    /// Trained checkpoint
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Items to caption (JSON lines)
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[command(flatten)]
    decode: DecodeArgs,
    /// Output captions path (JSON lines)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateCmd {
    #[command(flatten)]
    common: Common,
    /// Dataset holding the reference captions
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Generated captions (JSON lines from `generate`)
    #[arg(long)]
    captions: Option<PathBuf>,
    /// English references, one {"image_id", "captions"} object per line;
    /// enables the translated evaluation
    #[arg(long)]
    references_english: Option<PathBuf>,
    /// Word-for-word dictionary ("source target" per line); identity if absent
    #[arg(long)]
    dictionary: Option<PathBuf>,
    /// Report path (JSON); the table goes next to it as .table.txt
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GradcheckCmd {
    #[command(flatten)]
    common: Common,
    /// Check only this variant (default: all three)
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// Loss function
    #[arg(long, value_parser = parse_loss)]
    loss: Option<LossKind>,
    /// Fail when the largest relative error exceeds this
    #[arg(long)]
    threshold: Option<f64>,
    /// Central-difference step
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args, Debug)]
struct ParamcountCmd {
    #[command(flatten)]
    common: Common,
    /// Hidden size d
    #[arg(long)]
    hidden: Option<usize>,
    /// Word embedding size m
    #[arg(long)]
    embed: Option<usize>,
    /// Number of semantic tags s
    #[arg(long)]
    semantic: Option<usize>,
    /// Visual feature dimension v
    #[arg(long)]
    visual: Option<usize>,
    /// GSSCN factor size f (default d/4)
    #[arg(long)]
    factor: Option<usize>,
    /// Vocabulary size V
    #[arg(long)]
    vocab: Option<usize>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_loss(s: &str) -> Result<LossKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

macro_rules! apply {
    ($cfg:expr, $($field:ident <- $value:expr),* $(,)?) => {
        $( if let Some(v) = $value { $cfg.$field = v.into(); } )*
    };
}

fn load_config(common: &Common) -> gssf_core::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    apply!(cfg, seed <- common.seed);
    Ok(cfg)
}

fn apply_model(cfg: &mut RunConfig, m: ModelArgs) {
    apply!(cfg, variant <- m.variant, hidden <- m.hidden, embed <- m.embed, factor <- m.factor,
        sigma <- m.sigma, radius <- m.radius);
}

fn run(command: Command) -> gssf_core::Result<bool> {
    match command {
        Command::Synth(c) => {
            let mut cfg = load_config(&c.common)?;
            apply!(cfg, items <- c.items, synth_visual <- c.visual, synth_semantic <- c.semantic,
                vocab_words <- c.vocab_words, top_k <- c.top_k, noise <- c.noise, out <- c.out);
            commands::synth(&cfg).map(|_| true)
        }
        Command::Train(c) => {
            let mut cfg = load_config(&c.common)?;
            apply_model(&mut cfg, c.model);
            let o = c.optim;
            apply!(cfg, loss <- o.loss, dropout <- o.dropout, epochs <- o.epochs, lr <- o.lr, batch <- o.batch,
                finetune_embedding <- o.finetune_embedding, vocab_max <- o.vocab_max,
                vocab_min_doc_frac <- o.vocab_min_doc_frac, grad_clip <- o.grad_clip);
            apply!(cfg, dataset <- c.dataset, embeddings <- c.embeddings,
                checkpoint <- c.checkpoint, out <- c.out);
            commands::train(&cfg).map(|_| true)
        }
        Command::Generate(c) => {
            let mut cfg = load_config(&c.common)?;
            let d = c.decode;
            apply!(cfg, beam <- d.beam, max_len <- d.max_len, no_repeat_ngram <- d.no_repeat_ngram,
                length_normalize <- d.length_normalize);
            apply!(cfg, checkpoint <- c.checkpoint, dataset <- c.dataset, out <- c.out);
            commands::generate(&cfg).map(|_| true)
        }
        Command::Evaluate(c) => {
            let mut cfg = load_config(&c.common)?;
            apply!(cfg, dataset <- c.dataset, captions <- c.captions,
                references_english <- c.references_english, dictionary <- c.dictionary,
                out <- c.out);
            commands::evaluate(&cfg).map(|_| true)
        }
        Command::Gradcheck(c) => {
            let mut cfg = load_config(&c.common)?;
            apply!(cfg, loss <- c.loss, threshold <- c.threshold, epsilon <- c.epsilon);
            commands::gradcheck(&cfg, c.variant)
        }
        Command::Paramcount(c) => {
            let mut cfg = load_config(&c.common)?;
            apply!(cfg, hidden <- c.hidden, embed <- c.embed, semantic <- c.semantic, visual <- c.visual,
                factor <- c.factor, vocab <- c.vocab);
            commands::paramcount(&cfg).map(|_| true)
        }
    }
}

/// 1 usage or config, 2 validation, 3 numeric.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Io { .. } => 1,
        Error::Numeric { .. } => 3,
        Error::Validation { .. } | Error::Json(_) | Error::Shape { .. } | Error::Contract(_) | Error::Index { .. } => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
