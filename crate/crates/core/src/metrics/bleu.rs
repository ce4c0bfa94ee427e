use rayon::prelude::*;

use crate::error::Result;
use crate::metrics::corpus::{ngrams, EvalCorpus, EvalItem};

pub const BLEU_MAX_N: usize = 4;

/// Clipped n-gram counts of one item.
#[derive(Debug, Clone, PartialEq)]
pub struct BleuStats {
    /// Clipped matches per order `1..=n_max`.
    pub matches: Vec<usize>,
    /// Candidate n-gram totals per order.
    pub totals: Vec<usize>,
    pub candidate_len: usize,
    /// Length of the reference closest to the candidate (shorter wins ties).
    pub reference_len: usize,
}

impl BleuStats {
    /// Per-order precision; zero when the candidate has no n-grams.
    pub fn precisions(&self) -> Vec<f64> {
        self.matches
            .iter()
            .zip(&self.totals)
            .map(|(&m, &t)| if t == 0 { 0.0 } else { m as f64 / t as f64 })
            .collect()
    }
}

pub fn bleu_stats(item: &EvalItem, n_max: usize) -> BleuStats {
    let c = &item.candidate;
    let mut matches = Vec::with_capacity(n_max);
    let mut totals = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let cand = ngrams(c, n);
        let refs: Vec<_> = item.references.iter().map(|r| ngrams(r, n)).collect();
        let clipped: usize = cand
            .iter()
            .map(|(g, &k)| {
                let max_ref = refs.iter().map(|r| r.get(g).copied().unwrap_or(0)).max().unwrap_or(0);
                k.min(max_ref)
            })
            .sum();
        matches.push(clipped);
        totals.push(c.len().saturating_sub(n - 1));
    }
    let reference_len = item
        .references
        .iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(c.len()), r))
        .unwrap_or(0);
    BleuStats {
        matches,
        totals,
        candidate_len: c.len(),
        reference_len,
    }
}

/// Corpus BLEU from aggregated counts. Entry `k` is BLEU_{k+1}; any order with
/// zero matches makes that score and all higher ones 0.
pub fn bleu_from_stats(stats: &[BleuStats], n_max: usize) -> Vec<f64> {
    let c: usize = stats.iter().map(|s| s.candidate_len).sum();
    let r: usize = stats.iter().map(|s| s.reference_len).sum();
    let bp = if c == 0 {
        0.0
    } else if c < r {
        (1.0 - r as f64 / c as f64).exp()
    } else {
        1.0
    };
    let mut log_sum = 0.0;
    let mut out = Vec::with_capacity(n_max);
    let mut zero = false;
    for k in 0..n_max {
        let m: usize = stats.iter().map(|s| s.matches[k]).sum();
        let t: usize = stats.iter().map(|s| s.totals[k]).sum();
        if m == 0 || t == 0 {
            zero = true;
        } else {
            log_sum += (m as f64 / t as f64).ln();
        }
        out.push(if zero {
            0.0
        } else {
            bp * (log_sum / (k + 1) as f64).exp()
        });
    }
    out
}

/// BLEU_1..BLEU_{n_max} over the corpus.
pub fn bleu(corpus: &EvalCorpus, n_max: usize) -> Result<Vec<f64>> {
    corpus.validate()?;
    let stats: Vec<BleuStats> = corpus.items.par_iter().map(|i| bleu_stats(i, n_max)).collect();
    Ok(bleu_from_stats(&stats, n_max))
}
