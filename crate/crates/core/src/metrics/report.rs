use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Direction, Translator};
use crate::error::{Error, Result};
use crate::metrics::bleu::{bleu_from_stats, bleu_stats, BleuStats, BLEU_MAX_N};
use crate::metrics::cider::{cider_d_items, CIDER_MAX_N, CIDER_SIGMA};
use crate::metrics::corpus::{EvalCorpus, EvalItem, References};
use crate::metrics::rouge::rouge_l_item;

/// Column order of the plain-text table.
pub const TABLE_COLUMNS: [&str; 6] = ["CIDEr-D", "Bleu_4", "Bleu_3", "Bleu_2", "Bleu_1", "ROUGE_L"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDiagnostics {
    pub image_id: String,
    pub candidate_len: usize,
    pub reference_len: usize,
    /// Clipped n-gram precision per order.
    pub precisions: Vec<f64>,
    /// LCS length against each reference.
    pub lcs: Vec<usize>,
    pub rouge_l: f64,
    /// Penalized cosine per order, averaged over references.
    pub cider_terms: Vec<f64>,
    pub cider_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EvalReport {
    /// Keys: `Bleu_1`..`Bleu_4`, `ROUGE_L`, `CIDEr-D`.
    pub scores: BTreeMap<String, f64>,
    pub items: Vec<ItemDiagnostics>,
    pub warnings: Vec<String>,
    /// Image ids left out because a translation failed.
    pub skipped: Vec<String>,
    /// Tokens a translator could not map.
    pub untranslated_tokens: usize,
}

impl EvalReport {
    pub fn score(&self, name: &str) -> Option<f64> {
        self.scores.get(name).copied()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Scores a corpus with every metric.
pub fn evaluate(corpus: &EvalCorpus) -> Result<EvalReport> {
    corpus.validate()?;
    let per_item: Vec<(BleuStats, f64, Vec<usize>)> = corpus
        .items
        .par_iter()
        .map(|item| {
            let (r, lcs) = rouge_l_item(item);
            (bleu_stats(item, BLEU_MAX_N), r, lcs)
        })
        .collect();
    let (cider_items, cider) = cider_d_items(corpus, CIDER_MAX_N, CIDER_SIGMA)?;
    let stats: Vec<BleuStats> = per_item.iter().map(|p| p.0.clone()).collect();
    let bleu = bleu_from_stats(&stats, BLEU_MAX_N);

    let mut scores = BTreeMap::new();
    for (k, b) in bleu.iter().enumerate() {
        scores.insert(format!("Bleu_{}", k + 1), *b);
    }
    let rouge = per_item.iter().map(|p| p.1).sum::<f64>() / per_item.len() as f64;
    scores.insert("ROUGE_L".to_string(), rouge);
    scores.insert("CIDEr-D".to_string(), cider);

    let items = corpus
        .items
        .iter()
        .zip(per_item)
        .zip(cider_items)
        .map(|((item, (stats, rouge_l, lcs)), c)| ItemDiagnostics {
            image_id: item.image_id.clone(),
            candidate_len: stats.candidate_len,
            reference_len: stats.reference_len,
            precisions: stats.precisions(),
            lcs,
            rouge_l,
            cider_terms: c.terms,
            cider_d: c.score,
        })
        .collect();

    let mut warnings = Vec::new();
    if corpus.items.len() == 1 {
        warnings.push("single-item corpus: every IDF weight is 0, so CIDEr-D is 0".to_string());
    }
    Ok(EvalReport {
        scores,
        items,
        warnings,
        skipped: Vec::new(),
        untranslated_tokens: 0,
    })
}

/// Aligned plain-text table, one row per labelled report.
pub fn format_table(rows: &[(&str, &EvalReport)]) -> String {
    let label_w = rows.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<label_w$}", "");
    for c in TABLE_COLUMNS {
        let _ = write!(out, "  {c:>8}");
    }
    out.push('\n');
    for (label, report) in rows {
        let _ = write!(out, "{label:<label_w$}");
        for c in TABLE_COLUMNS {
            match report.score(c) {
                Some(v) => {
                    let _ = write!(out, "  {v:>8.4}");
                }
                None => {
                    let _ = write!(out, "  {:>8}", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Reports for both evaluation spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualReport {
    /// Generated captions against references in the caption language.
    pub e1: EvalReport,
    /// Generated captions translated to English against English references.
    pub e2: EvalReport,
}

impl DualReport {
    pub fn table(&self) -> String {
        format_table(&[("E1", &self.e1), ("E2", &self.e2)])
    }
}

fn lookup<'a>(refs: &'a References, id: &str, which: &str) -> Result<&'a Vec<Vec<String>>> {
    refs.get(id)
        .ok_or_else(|| Error::validation(id, format!("no {which} references")))
}

/// `generated` pairs image ids with tokenized captions in language `L`.
pub fn evaluate_e1_e2(
    generated: &[(String, Vec<String>)],
    refs_l: &References,
    refs_e: &References,
    translator: &dyn Translator,
) -> Result<DualReport> {
    let mut e1_items = Vec::with_capacity(generated.len());
    for (id, tokens) in generated {
        e1_items.push(EvalItem::new(id.clone(), tokens.clone(), lookup(refs_l, id, "caption-language")?.clone()));
    }
    let e1 = evaluate(&EvalCorpus::new(e1_items)?)?;

    let translated: Vec<_> = generated
        .par_iter()
        .map(|(_, tokens)| translator.translate(tokens, Direction::ToEnglish))
        .collect();
    let mut e2_items = Vec::new();
    let mut skipped = Vec::new();
    let mut misses = 0;
    for ((id, _), t) in generated.iter().zip(translated) {
        match t {
            Ok(t) => {
                misses += t.misses;
                e2_items.push(EvalItem::new(id.clone(), t.tokens, lookup(refs_e, id, "English")?.clone()));
            }
            Err(_) => skipped.push(id.clone()),
        }
    }
    let mut e2 = if e2_items.is_empty() {
        EvalReport {
            warnings: vec!["every translation failed; nothing to score".to_string()],
            ..Default::default()
        }
    } else {
        evaluate(&EvalCorpus::new(e2_items)?)?
    };
    if !skipped.is_empty() {
        e2.warnings.push(format!("{} item(s) skipped after translation failures", skipped.len()));
    }
    e2.skipped = skipped;
    e2.untranslated_tokens = misses;
    Ok(DualReport { e1, e2 })
}
