//! Pretrained word vectors in the plain GloVe text layout: one token per
//! line followed by `dim` whitespace-separated numbers.

use std::fs;
use std::path::Path;

use crate::data::Vocabulary;
use crate::error::{Error, Result};
use crate::tensor::{init_weights, InitScheme, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingStats {
    pub found: usize,
    pub missing: usize,
}

/// Builds a `[vocab × dim]` table. Rows for tokens absent from the file
/// (including the specials) keep seeded uniform values.
pub fn parse_embeddings(
    text: &str,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<(Tensor, EmbeddingStats)> {
    let mut table = init_weights(vocab.len(), dim, InitScheme::Uniform, seed)?;
    let mut filled = vec![false; vocab.len()];
    for (n, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else { continue };
        let Some(row) = vocab.index_of(token) else { continue };
        let values = parts
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::validation(format!("embeddings line {}", n + 1), e.to_string()))?;
        if values.len() != dim {
            return Err(Error::validation(
                format!("embeddings line {}", n + 1),
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(
                format!("embeddings line {}", n + 1),
                "non-finite value",
            ));
        }
        table.row_mut(row)?.copy_from_slice(&values);
        filled[row] = true;
    }
    let found = filled.iter().filter(|&&f| f).count();
    Ok((
        table,
        EmbeddingStats {
            found,
            missing: vocab.len() - found,
        },
    ))
}

pub fn load_embeddings(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<(Tensor, EmbeddingStats)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&text, vocab, dim, seed)
}
