//! Deterministic desk-scale datasets with a planted caption rule.
//!
//! Each item activates `top_k` semantic tags with clearly separated
//! likelihoods; its caption lists the words of those tags in descending
//! likelihood order. Tag `j` is spelled `word{j mod vocab_size}`. Visual
//! features are a fixed random projection of the tag vector plus small
//! noise, so the caption is recoverable from either feature space.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, DatasetItem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub top_k: usize,
    /// Extra captions (beyond the first) repeat the words in reverse order.
    pub captions_per_item: usize,
    pub visual_noise: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            top_k: 5,
            captions_per_item: 1,
            visual_noise: 0.05,
        }
    }
}

pub fn synth_word(tag: usize, vocab_size: usize) -> String {
    format!("word{}", tag % vocab_size)
}

pub fn synth_dataset(
    n_items: usize,
    v_dim: usize,
    s_dim: usize,
    vocab_size: usize,
    seed: u64,
) -> Result<Dataset> {
    synth_dataset_with(n_items, v_dim, s_dim, vocab_size, seed, SynthOptions::default())
}

pub fn synth_dataset_with(
    n_items: usize,
    v_dim: usize,
    s_dim: usize,
    vocab_size: usize,
    seed: u64,
    opts: SynthOptions,
) -> Result<Dataset> {
    for (name, v) in [
        ("n_items", n_items),
        ("v_dim", v_dim),
        ("s_dim", s_dim),
        ("vocab_size", vocab_size),
        ("top_k", opts.top_k),
        ("captions_per_item", opts.captions_per_item),
    ] {
        if v == 0 {
            return Err(Error::Config(format!("{name} must be positive")));
        }
    }
    let k = opts.top_k.min(s_dim);
    let gap = (0.7 / k as f64).min(0.12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let scale = (3.0 / s_dim as f64).sqrt();
    let projection: Vec<f64> = (0..v_dim * s_dim)
        .map(|_| rng.gen_range(-scale..scale))
        .collect();

    let mut tags: Vec<usize> = (0..s_dim).collect();
    let items = (0..n_items)
        .map(|n| {
            tags.shuffle(&mut rng);
            let active = &tags[..k];
            let mut semantic: Vec<f64> = (0..s_dim).map(|_| rng.gen_range(0.0..0.15)).collect();
            // rank r sits at 0.9 - gap·r (never below 0.2, above the 0.15
            // background) plus jitter smaller than the gap
            for (r, &j) in active.iter().enumerate() {
                semantic[j] = 0.9 - gap * r as f64 + rng.gen_range(0.0..gap / 3.0);
            }
            let visual: Vec<f64> = projection
                .chunks_exact(s_dim)
                .map(|row| {
                    let dot: f64 = row.iter().zip(&semantic).map(|(a, b)| a * b).sum();
                    dot + rng.gen_range(-opts.visual_noise..=opts.visual_noise)
                })
                .collect();
            let words: Vec<String> = active.iter().map(|&j| synth_word(j, vocab_size)).collect();
            let mut captions = vec![words.join(" ")];
            for _ in 1..opts.captions_per_item {
                let rev: Vec<&str> = words.iter().rev().map(String::as_str).collect();
                captions.push(rev.join(" "));
            }
            DatasetItem {
                image_id: format!("synth-{n:05}"),
                visual,
                semantic,
                captions,
            }
        })
        .collect();
    Ok(Dataset::new(items))
}
