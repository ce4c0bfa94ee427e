//! Greedy and beam-search caption generation.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cell::{init_state, CellParams, CellState, Model};
use crate::data::{Dataset, Vocabulary, BOS, EOS};
use crate::error::{Error, Result};
use crate::tensor::log_softmax;

/// Anything that yields next-token log probabilities from a running state.
pub trait StepModel {
    type State: Clone;

    fn initial(&self) -> Result<Self::State>;

    /// Feeds `token` and returns the new state with the log-distribution over
    /// the following token.
    fn advance(&self, state: &Self::State, token: usize) -> Result<(Self::State, Vec<f64>)>;
}

/// A cell conditioned on one image.
#[derive(Debug, Clone)]
pub struct CellDecoder<'a> {
    params: &'a CellParams,
    visual: &'a [f64],
    semantic: Option<Vec<f64>>,
}

impl<'a> CellDecoder<'a> {
    /// Smooths `raw_semantic` with the model's kernel when the variant
    /// consumes it.
    pub fn new(model: &'a Model, visual: &'a [f64], raw_semantic: &[f64]) -> Result<Self> {
        Ok(CellDecoder {
            params: &model.params,
            visual,
            semantic: model.semantic_input(raw_semantic)?,
        })
    }

    /// Uses already-smoothed features as given.
    pub fn from_parts(params: &'a CellParams, visual: &'a [f64], semantic: Option<Vec<f64>>) -> Self {
        CellDecoder {
            params,
            visual,
            semantic,
        }
    }
}

impl StepModel for CellDecoder<'_> {
    type State = CellState;

    fn initial(&self) -> Result<CellState> {
        init_state(self.params, self.visual)
    }

    fn advance(&self, state: &CellState, token: usize) -> Result<(CellState, Vec<f64>)> {
        let x = self.params.embedding.row(token)?;
        let next = self.params.step(x, state, self.semantic.as_deref())?;
        let logits = self.params.w_out.matvec(&next.h)?;
        let lp = log_softmax(&logits)?;
        Ok((next, lp))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis<S = CellState> {
    /// Starts with BOS; ends with EOS when the hypothesis stopped on it.
    pub tokens: Vec<usize>,
    pub log_prob: f64,
    pub state: S,
    pub finished: bool,
}

impl<S> Hypothesis<S> {
    /// Tokens produced after BOS, EOS included.
    pub fn generated(&self) -> &[usize] {
        &self.tokens[1..]
    }

    /// Caption tokens without BOS and EOS.
    pub fn caption(&self) -> &[usize] {
        let g = self.generated();
        match g.last() {
            Some(&EOS) => &g[..g.len() - 1],
            _ => g,
        }
    }

    /// Log probability per generated token.
    pub fn normalized_score(&self) -> f64 {
        self.log_prob / self.generated().len().max(1) as f64
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Emits the most likely token each step (ties to the lowest index) until
/// EOS or `max_len` generated tokens.
pub fn greedy_decode<M: StepModel>(model: &M, max_len: usize) -> Result<Hypothesis<M::State>> {
    if max_len == 0 {
        return Err(Error::Config("max_len must be at least 1".into()));
    }
    let mut hyp = Hypothesis {
        tokens: vec![BOS],
        log_prob: 0.0,
        state: model.initial()?,
        finished: false,
    };
    while !hyp.finished {
        let last = *hyp.tokens.last().expect("starts with BOS");
        let (state, lp) = model.advance(&hyp.state, last)?;
        let tok = argmax(&lp);
        hyp.tokens.push(tok);
        hyp.log_prob += lp[tok];
        hyp.state = state;
        hyp.finished = tok == EOS || hyp.generated().len() >= max_len;
    }
    Ok(hyp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamOptions {
    pub beam_size: usize,
    pub max_len: usize,
    /// Forbid repeating any n-gram of this size; `None` disables the filter.
    pub no_repeat_ngram: Option<usize>,
    /// Rank finished hypotheses by log probability per token.
    pub length_normalize: bool,
}

impl Default for BeamOptions {
    fn default() -> Self {
        BeamOptions {
            beam_size: 5,
            max_len: 20,
            no_repeat_ngram: Some(2),
            length_normalize: true,
        }
    }
}

impl BeamOptions {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size < 1 {
            return Err(Error::Config("beam size must be at least 1".into()));
        }
        if self.max_len < 1 {
            return Err(Error::Config("max_len must be at least 1".into()));
        }
        if self.no_repeat_ngram == Some(0) {
            return Err(Error::Config("no-repeat n-gram size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BeamOutput<S = CellState> {
    pub best: Hypothesis<S>,
    /// Finished hypotheses in final ranking order, at most `beam_size`.
    pub beam: Vec<Hypothesis<S>>,
}

/// True when appending `next` to `generated` would repeat an n-gram already
/// present in `generated`.
pub fn repeats_ngram(generated: &[usize], next: usize, n: usize) -> bool {
    if n == 0 || generated.len() + 1 < n {
        return false;
    }
    let prefix = &generated[generated.len() + 1 - n..];
    generated.windows(n).any(|w| w[..n - 1] == *prefix && w[n - 1] == next)
}

fn rank<S>(a: &Hypothesis<S>, b: &Hypothesis<S>, normalize: bool) -> Ordering {
    let (sa, sb) = if normalize {
        (a.normalized_score(), b.normalized_score())
    } else {
        (a.log_prob, b.log_prob)
    };
    sb.total_cmp(&sa).then_with(|| a.tokens.cmp(&b.tokens))
}

/// Length-bounded beam search over cumulative log probability.
///
/// Each round expands every live hypothesis by every allowed token and keeps
/// the `beam_size` best candidates (ties to the lexicographically smaller
/// sequence). Candidates ending in EOS or reaching `max_len` move to the
/// finished pool; a hypothesis whose every extension is blocked by the
/// repetition filter is finished as is. The winner is the best finished
/// hypothesis under the final ranking.
pub fn beam_decode<M: StepModel>(model: &M, opts: &BeamOptions) -> Result<BeamOutput<M::State>> {
    opts.validate()?;
    let mut live = vec![Hypothesis {
        tokens: vec![BOS],
        log_prob: 0.0,
        state: model.initial()?,
        finished: false,
    }];
    let mut finished: Vec<Hypothesis<M::State>> = Vec::new();

    while !live.is_empty() {
        let mut expanded = Vec::with_capacity(live.len());
        let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
        for (h, hyp) in live.iter().enumerate() {
            let last = *hyp.tokens.last().expect("starts with BOS");
            let (state, lp) = model.advance(&hyp.state, last)?;
            let before = candidates.len();
            for (tok, &l) in lp.iter().enumerate() {
                if let Some(n) = opts.no_repeat_ngram {
                    if repeats_ngram(hyp.generated(), tok, n) {
                        continue;
                    }
                }
                candidates.push((h, tok, hyp.log_prob + l));
            }
            if candidates.len() == before {
                finished.push(Hypothesis {
                    finished: true,
                    ..hyp.clone()
                });
            }
            expanded.push(state);
        }
        candidates.sort_by(|a, b| {
            b.2.total_cmp(&a.2).then_with(|| {
                let ta = &live[a.0].tokens;
                let tb = &live[b.0].tokens;
                ta.iter()
                    .chain(std::iter::once(&a.1))
                    .cmp(tb.iter().chain(std::iter::once(&b.1)))
            })
        });
        candidates.truncate(opts.beam_size);

        let mut next = Vec::with_capacity(candidates.len());
        for (h, tok, log_prob) in candidates {
            let mut tokens = live[h].tokens.clone();
            tokens.push(tok);
            let done = tok == EOS || tokens.len() > opts.max_len;
            let hyp = Hypothesis {
                tokens,
                log_prob,
                state: expanded[h].clone(),
                finished: done,
            };
            if done {
                finished.push(hyp);
            } else {
                next.push(hyp);
            }
        }
        live = next;
    }

    finished.sort_by(|a, b| rank(a, b, opts.length_normalize));
    finished.truncate(opts.beam_size);
    let best = finished
        .first()
        .cloned()
        .ok_or_else(|| Error::Contract("beam search produced no hypothesis".into()))?;
    Ok(BeamOutput {
        best,
        beam: finished,
    })
}

/// Replays `generated` (tokens after BOS) and returns its total log
/// probability.
pub fn sequence_log_prob<M: StepModel>(model: &M, generated: &[usize]) -> Result<f64> {
    let mut state = model.initial()?;
    let mut prev = BOS;
    let mut total = 0.0;
    for &tok in generated {
        let (next, lp) = model.advance(&state, prev)?;
        let l = *lp.get(tok).ok_or(Error::Index {
            index: tok,
            len: lp.len(),
        })?;
        total += l;
        state = next;
        prev = tok;
    }
    Ok(total)
}

/// One generated caption, as written to the JSON-lines output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationRecord {
    pub image_id: String,
    pub tokens: Vec<usize>,
    pub text: String,
    pub log_prob: f64,
}

/// Captions every item of `dataset`, in dataset order.
pub fn generate_captions(
    model: &Model,
    vocab: &Vocabulary,
    dataset: &Dataset,
    opts: &BeamOptions,
) -> Result<Vec<GenerationRecord>> {
    opts.validate()?;
    dataset
        .items
        .par_iter()
        .map(|item| {
            let decoder = CellDecoder::new(model, &item.visual, &item.semantic)?;
            let hyp = if opts.beam_size == 1 && opts.no_repeat_ngram.is_none() {
                greedy_decode(&decoder, opts.max_len)?
            } else {
                beam_decode(&decoder, opts)?.best
            };
            Ok(GenerationRecord {
                image_id: item.image_id.clone(),
                tokens: hyp.caption().to_vec(),
                text: vocab.decode(hyp.caption()),
                log_prob: hyp.log_prob,
            })
        })
        .collect()
}

pub fn records_to_jsonl(records: &[GenerationRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_records(text: &str) -> Result<Vec<GenerationRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::validation(format!("line {}", n + 1), e.to_string()))
        })
        .collect()
}

pub fn write_records(path: impl AsRef<Path>, records: &[GenerationRecord]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, records_to_jsonl(records)?).map_err(|e| Error::io(path, e))
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<GenerationRecord>> {
    let path = path.as_ref();
    parse_records(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}
