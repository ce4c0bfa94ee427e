use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::text::tokenize;

/// One candidate caption and its references, already tokenized.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalItem {
    pub image_id: String,
    pub candidate: Vec<String>,
    pub references: Vec<Vec<String>>,
}

impl EvalItem {
    pub fn new(image_id: impl Into<String>, candidate: Vec<String>, references: Vec<Vec<String>>) -> Self {
        EvalItem {
            image_id: image_id.into(),
            candidate,
            references,
        }
    }

    /// Tokenizes raw caption strings with the shared caption tokenizer.
    pub fn from_text<S: AsRef<str>>(image_id: impl Into<String>, candidate: &str, references: &[S]) -> Self {
        EvalItem::new(
            image_id,
            tokenize(candidate),
            references.iter().map(|r| tokenize(r.as_ref())).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalCorpus {
    pub items: Vec<EvalItem>,
}

impl EvalCorpus {
    pub fn new(items: Vec<EvalItem>) -> Result<Self> {
        let corpus = EvalCorpus { items };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<()> {
        if self.items.is_empty() {
            return Err(Error::Domain("evaluation corpus has no candidates".into()));
        }
        let mut seen = HashSet::new();
        for item in &self.items {
            if !seen.insert(item.image_id.as_str()) {
                return Err(Error::validation(&item.image_id, "duplicate image id"));
            }
            if item.references.is_empty() {
                return Err(Error::validation(&item.image_id, "no references"));
            }
            if item.references.iter().any(Vec::is_empty) {
                return Err(Error::validation(&item.image_id, "empty reference"));
            }
        }
        Ok(())
    }
}

pub(crate) type NgramCounts<'a> = HashMap<&'a [String], usize>;

pub(crate) fn ngrams(tokens: &[String], n: usize) -> NgramCounts<'_> {
    let mut out = HashMap::new();
    if n > 0 {
        for w in tokens.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

/// Candidate and reference lists keyed by image id.
pub type References = BTreeMap<String, Vec<Vec<String>>>;
