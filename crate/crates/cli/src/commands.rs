use std::fs;
use std::path::{Path, PathBuf};

use gssf_core::cell::{param_count, Checkpoint, Variant};
use gssf_core::data::{
    build_vocab, load_dataset, load_embeddings, synth_dataset_with, DictionaryTranslator, IdentityTranslator,
    SynthOptions, Translator,
};
use gssf_core::decode::{generate_captions, read_records, write_records};
use gssf_core::metrics::{evaluate as score, evaluate_e1_e2, format_table, EvalCorpus, EvalItem, References};
use gssf_core::text::tokenize;
use gssf_core::train::{grad_check, train as fit, write_loss_trace, TinyProblem, TrainSetup};
use gssf_core::{Error, Result};

use crate::config::RunConfig;

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Config(format!("--{flag} is required")))
}

fn out_path(cfg: &RunConfig, fallback: &str) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(fallback))
}

/// `model.json` → `model.<suffix>`
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

pub fn synth(cfg: &RunConfig) -> Result<()> {
    let opts = SynthOptions { top_k: cfg.top_k, captions_per_item: 1, visual_noise: cfg.noise };
    let data = synth_dataset_with(cfg.items, cfg.synth_visual, cfg.synth_semantic, cfg.vocab_words, cfg.seed, opts)?;
    let out = out_path(cfg, "synth.jsonl");
    data.write(&out)?;
    println!("wrote {} items to {}", data.len(), out.display());
    Ok(())
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let (data, summary) = load_dataset(required(&cfg.dataset, "dataset")?, None, None)?;
    let dims = data.dims().ok_or_else(|| Error::Config("dataset is empty".into()))?;
    let vocab = build_vocab(&data.all_captions(), cfg.vocab_max, cfg.vocab_min_doc_frac)?;
    let cell = cfg.cell_config(dims.semantic, dims.visual, vocab.len());
    let embeddings = match &cfg.embeddings {
        Some(path) => {
            let (table, stats) = load_embeddings(path, &vocab, cfg.embed, cfg.seed)?;
            eprintln!("embeddings: {} of {} words found", stats.found, vocab.len());
            Some(table)
        }
        None => None,
    };
    let setup = TrainSetup { vocab, smoothing: cfg.smoothing()?, embeddings };
    eprintln!(
        "training {} on {} items ({} captions), vocabulary {}, {} parameters",
        cfg.variant.display_name(),
        summary.items,
        summary.captions,
        setup.vocab.len(),
        param_count(&cell)
    );
    let outcome = fit(&data, &cell, &cfg.train_config(), &setup)?;

    let out = cfg
        .out
        .clone()
        .or_else(|| cfg.checkpoint.clone())
        .unwrap_or_else(|| PathBuf::from("checkpoint.json"));
    outcome.checkpoint.save(&out)?;
    let trace = sibling(&out, "loss.csv");
    write_loss_trace(&trace, &outcome.loss_trace)?;
    println!(
        "final loss {:.6}; checkpoint {}; loss trace {}",
        outcome.loss_trace.last().copied().unwrap_or(f64::NAN),
        out.display(),
        trace.display()
    );
    Ok(())
}

pub fn generate(cfg: &RunConfig) -> Result<()> {
    let ckpt = Checkpoint::load(required(&cfg.checkpoint, "checkpoint")?)?;
    let config = ckpt.model.params.config();
    let (visual, semantic) = (config.visual, config.semantic);
    let (data, _) = load_dataset(required(&cfg.dataset, "dataset")?, None, None)?;
    for item in &data.items {
        if item.visual.len() != visual || semantic.is_some_and(|s| item.semantic.len() != s) {
            return Err(Error::Validation {
                item: item.image_id.clone(),
                reason: format!(
                    "feature dims ({}, {}) do not match the checkpoint ({visual}, {semantic:?})",
                    item.visual.len(),
                    item.semantic.len(),
                ),
            });
        }
    }
    let records = generate_captions(&ckpt.model, &ckpt.vocab, &data, &cfg.beam_options())?;
    let out = out_path(cfg, "captions.jsonl");
    write_records(&out, &records)?;
    println!("wrote {} captions to {}", records.len(), out.display());
    Ok(())
}

/// Reads `{"image_id": ..., "captions": [...]}` lines.
fn read_references(path: &Path) -> Result<References> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    let mut refs = References::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |reason: &str| Error::Validation {
            item: format!("{} line {}", path.display(), n + 1),
            reason: reason.into(),
        };
        let value: serde_json::Value = serde_json::from_str(line)?;
        let id = value["image_id"].as_str().ok_or_else(|| bad("missing image_id"))?;
        let captions = value["captions"].as_array().ok_or_else(|| bad("missing captions array"))?;
        let tokens = captions
            .iter()
            .map(|c| c.as_str().map(tokenize).ok_or_else(|| bad("captions must be strings")))
            .collect::<Result<Vec<_>>>()?;
        if refs.insert(id.to_string(), tokens).is_some() {
            return Err(bad("duplicate image_id"));
        }
    }
    Ok(refs)
}

pub fn evaluate(cfg: &RunConfig) -> Result<()> {
    let (data, _) = load_dataset(required(&cfg.dataset, "dataset")?, None, None)?;
    let records = read_records(required(&cfg.captions, "captions")?)?;
    let refs: References = data
        .items
        .iter()
        .map(|it| (it.image_id.clone(), it.captions.iter().map(|c| tokenize(c)).collect()))
        .collect();
    let generated: Vec<(String, Vec<String>)> =
        records.iter().map(|r| (r.image_id.clone(), tokenize(&r.text))).collect();

    let out = out_path(cfg, "report.json");
    let (json, table) = match &cfg.references_english {
        Some(path) => {
            let refs_e = read_references(path)?;
            let translator: Box<dyn Translator> = match &cfg.dictionary {
                Some(d) => Box::new(DictionaryTranslator::load(d)?),
                None => Box::new(IdentityTranslator),
            };
            let dual = evaluate_e1_e2(&generated, &refs, &refs_e, translator.as_ref())?;
            for w in dual.e1.warnings.iter().chain(&dual.e2.warnings) {
                eprintln!("warning: {w}");
            }
            if !dual.e2.skipped.is_empty() {
                eprintln!("warning: {} items skipped in translation", dual.e2.skipped.len());
            }
            (serde_json::to_string_pretty(&dual)?, dual.table())
        }
        None => {
            let items = generated
                .into_iter()
                .map(|(id, cand)| {
                    let r = refs
                        .get(&id)
                        .ok_or_else(|| Error::Validation { item: id.clone(), reason: "no references in the dataset".into() })?;
                    Ok(EvalItem::new(id, cand, r.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            let report = score(&EvalCorpus::new(items)?)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            (report.to_json()?, format_table(&[("E1", &report)]))
        }
    };
    write_text(&out, &json)?;
    write_text(&sibling(&out, "table.txt"), &table)?;
    print!("{table}");
    Ok(())
}

/// Returns `false` when some variant exceeds the threshold.
pub fn gradcheck(cfg: &RunConfig, only: Option<Variant>) -> Result<bool> {
    let variants = only.map_or(Variant::ALL.to_vec(), |v| vec![v]);
    let mut ok = true;
    for variant in variants {
        let problem = TinyProblem::new(variant, cfg.seed)?;
        let report = grad_check(&problem.params, &problem.samples(), cfg.loss, cfg.epsilon)?;
        let max = report.max_rel_error();
        let pass = max <= cfg.threshold;
        ok &= pass;
        println!(
            "{:<11} {} entries, max relative error {:.3e}, {:.2}% within {:e}: {}",
            variant.display_name(),
            report.entries.len(),
            max,
            100.0 * report.fraction_within(cfg.threshold),
            cfg.threshold,
            if pass { "ok" } else { "FAIL" }
        );
        if !pass {
            if let Some(w) = report.worst() {
                println!("  worst: {}[{}] analytic {:e} numeric {:e}", w.tensor, w.index, w.analytic, w.numeric);
            }
        }
    }
    if !ok {
        eprintln!("error: gradient check exceeded threshold {:e}", cfg.threshold);
    }
    Ok(ok)
}

pub fn paramcount(cfg: &RunConfig) -> Result<()> {
    let mut counts = Vec::new();
    for variant in Variant::ALL {
        let mut c = cfg.clone();
        c.variant = variant;
        let cell = c.cell_config(cfg.semantic, cfg.visual, cfg.vocab);
        cell.validate()?;
        counts.push(param_count(&cell));
        println!("{:<11} {:>14}", variant.display_name(), param_count(&cell));
    }
    let factor = cfg.factor.unwrap_or_else(|| gssf_core::cell::default_factor(cfg.hidden));
    println!(
        "GST/GSSCN ratio {:.4} (d={} m={} s={} v={} V={} f={})",
        counts[1] as f64 / counts[2] as f64,
        cfg.hidden,
        cfg.embed,
        cfg.semantic,
        cfg.visual,
        cfg.vocab,
        factor
    );
    Ok(())
}
