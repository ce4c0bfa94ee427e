use rayon::prelude::*;

use crate::error::Result;
use crate::metrics::corpus::{EvalCorpus, EvalItem};

pub const ROUGE_BETA: f64 = 1.2;

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `(1 + β²)·P·R / (R + β²·P)`, zero when either side is zero.
pub fn f_measure(precision: f64, recall: f64, beta: f64) -> f64 {
    if precision == 0.0 || recall == 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    (1.0 + b2) * precision * recall / (recall + b2 * precision)
}

/// Best LCS F-measure over the references, with the LCS length of each
/// reference.
pub fn rouge_l_item(item: &EvalItem) -> (f64, Vec<usize>) {
    let c = &item.candidate;
    let lcs: Vec<usize> = item.references.iter().map(|r| lcs_len(c, r)).collect();
    let best = item
        .references
        .iter()
        .zip(&lcs)
        .map(|(r, &l)| {
            if c.is_empty() {
                return 0.0;
            }
            f_measure(l as f64 / c.len() as f64, l as f64 / r.len() as f64, ROUGE_BETA)
        })
        .fold(0.0, f64::max);
    (best, lcs)
}

/// Mean per-item ROUGE-L.
pub fn rouge_l(corpus: &EvalCorpus) -> Result<f64> {
    corpus.validate()?;
    let scores: Vec<f64> = corpus.items.par_iter().map(|i| rouge_l_item(i).0).collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}
