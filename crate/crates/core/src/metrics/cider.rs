use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;

use crate::error::Result;
use crate::metrics::corpus::{ngrams, EvalCorpus, NgramCounts};

pub const CIDER_MAX_N: usize = 4;
pub const CIDER_SIGMA: f64 = 6.0;

/// Document frequencies: each item's reference set counts once per n-gram.
struct DocFreq<'a> {
    df: Vec<HashMap<&'a [String], usize>>,
    log_n: f64,
}

impl<'a> DocFreq<'a> {
    fn new(corpus: &'a EvalCorpus, n_max: usize) -> Self {
        let mut df = vec![HashMap::new(); n_max];
        for item in &corpus.items {
            for (n, table) in df.iter_mut().enumerate() {
                let mut seen = HashSet::new();
                for r in &item.references {
                    seen.extend(r.windows(n + 1));
                }
                for g in seen {
                    *table.entry(g).or_insert(0) += 1;
                }
            }
        }
        DocFreq {
            df,
            log_n: (corpus.items.len() as f64).ln(),
        }
    }

    fn idf(&self, n: usize, g: &[String]) -> f64 {
        let df = self.df[n].get(g).copied().unwrap_or(0).max(1);
        self.log_n - (df as f64).ln()
    }
}

struct Weighted<'a> {
    vecs: Vec<BTreeMap<&'a [String], f64>>,
    /// Squared L2 norm per order.
    sq_norms: Vec<f64>,
    len: usize,
}

fn weigh<'a>(tokens: &'a [String], df: &DocFreq<'_>, n_max: usize) -> Weighted<'a> {
    let mut vecs = Vec::with_capacity(n_max);
    let mut sq_norms = Vec::with_capacity(n_max);
    for n in 0..n_max {
        let counts: NgramCounts<'a> = ngrams(tokens, n + 1);
        let v: BTreeMap<&'a [String], f64> = counts
            .into_iter()
            .map(|(g, k)| (g, k as f64 * df.idf(n, g)))
            .collect();
        sq_norms.push(v.values().map(|x| x * x).sum::<f64>());
        vecs.push(v);
    }
    Weighted {
        vecs,
        sq_norms,
        len: tokens.len(),
    }
}

fn similarity(c: &Weighted<'_>, r: &Weighted<'_>, n: usize, sigma: f64) -> f64 {
    let mut val = 0.0;
    for (g, &vc) in &c.vecs[n] {
        if let Some(&vr) = r.vecs[n].get(g) {
            val += vc.min(vr) * vr;
        }
    }
    if c.sq_norms[n] != 0.0 && r.sq_norms[n] != 0.0 {
        val /= (c.sq_norms[n] * r.sq_norms[n]).sqrt();
    }
    let delta = c.len as f64 - r.len as f64;
    val * (-(delta * delta) / (2.0 * sigma * sigma)).exp()
}

/// Per-item CIDEr-D details.
#[derive(Debug, Clone, PartialEq)]
pub struct CiderItem {
    /// Mean over references of the penalized cosine, per order.
    pub terms: Vec<f64>,
    /// `10 · mean(terms)`.
    pub score: f64,
}

/// Per-item CIDEr-D and the corpus mean. References define the document set.
pub fn cider_d_items(corpus: &EvalCorpus, n_max: usize, sigma: f64) -> Result<(Vec<CiderItem>, f64)> {
    corpus.validate()?;
    let df = DocFreq::new(corpus, n_max);
    let items: Vec<CiderItem> = corpus
        .items
        .par_iter()
        .map(|item| {
            let c = weigh(&item.candidate, &df, n_max);
            let refs: Vec<_> = item.references.iter().map(|r| weigh(r, &df, n_max)).collect();
            let terms: Vec<f64> = (0..n_max)
                .map(|n| refs.iter().map(|r| similarity(&c, r, n, sigma)).sum::<f64>() / refs.len() as f64)
                .collect();
            let score = 10.0 * terms.iter().sum::<f64>() / n_max as f64;
            CiderItem { terms, score }
        })
        .collect();
    let mean = items.iter().map(|i| i.score).sum::<f64>() / items.len() as f64;
    Ok((items, mean))
}

pub fn cider_d(corpus: &EvalCorpus, n_max: usize, sigma: f64) -> Result<f64> {
    cider_d_items(corpus, n_max, sigma).map(|(_, m)| m)
}
