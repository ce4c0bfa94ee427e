//! JSON-lines caption datasets.
//!
//! One item per line:
//!
//! ```text
//! {"image_id": "img-0001", "visual": [..v_dim floats..], "semantic": [..s floats in [0,1]..], "captions": ["a dog runs", ...]}
//! ```
//!
//! Blank lines are ignored. Unknown fields are rejected.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Vocabulary;
use crate::error::{Error, Result};
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetItem {
    pub image_id: String,
    pub visual: Vec<f64>,
    pub semantic: Vec<f64>,
    pub captions: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureDims {
    pub visual: usize,
    pub semantic: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub items: Vec<DatasetItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub items: usize,
    pub captions: usize,
    pub tokens: usize,
    /// Fraction of caption tokens the vocabulary knows, when one is given.
    pub coverage: Option<f64>,
}

impl DatasetItem {
    pub fn validate(&self, dims: Option<FeatureDims>) -> Result<()> {
        let fail = |reason: String| Err(Error::validation(self.image_id.clone(), reason));
        if self.image_id.trim().is_empty() {
            return Err(Error::validation("<unnamed>", "empty image_id"));
        }
        if self.visual.is_empty() {
            return fail("visual features are empty".into());
        }
        if self.semantic.is_empty() {
            return fail("semantic features are empty".into());
        }
        if let Some(dims) = dims {
            if self.visual.len() != dims.visual {
                return fail(format!(
                    "visual dimension {} != expected {}",
                    self.visual.len(),
                    dims.visual
                ));
            }
            if self.semantic.len() != dims.semantic {
                return fail(format!(
                    "semantic dimension {} != expected {}",
                    self.semantic.len(),
                    dims.semantic
                ));
            }
        }
        if let Some(i) = self.visual.iter().position(|v| !v.is_finite()) {
            return fail(format!("visual feature {i} is not finite"));
        }
        if let Some((i, v)) = self
            .semantic
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return fail(format!("semantic likelihood {v} at index {i} is outside [0, 1]"));
        }
        if self.captions.is_empty() {
            return fail("no captions".into());
        }
        if let Some(i) = self.captions.iter().position(|c| tokenize(c).is_empty()) {
            return fail(format!("caption {i} has no tokens"));
        }
        Ok(())
    }

    pub fn dims(&self) -> FeatureDims {
        FeatureDims {
            visual: self.visual.len(),
            semantic: self.semantic.len(),
        }
    }
}

impl Dataset {
    pub fn new(items: Vec<DatasetItem>) -> Self {
        Dataset { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dims(&self) -> Option<FeatureDims> {
        self.items.first().map(DatasetItem::dims)
    }

    /// Validates every item, the shared feature dims and id uniqueness.
    pub fn validate(&self, dims: Option<FeatureDims>) -> Result<()> {
        let Some(dims) = dims.or_else(|| self.dims()) else {
            return Err(Error::validation("<dataset>", "no items"));
        };
        let mut seen = HashSet::new();
        for item in &self.items {
            item.validate(Some(dims))?;
            if !seen.insert(item.image_id.as_str()) {
                return Err(Error::validation(item.image_id.clone(), "duplicate image_id"));
            }
        }
        Ok(())
    }

    pub fn all_captions(&self) -> Vec<&str> {
        self.items
            .iter()
            .flat_map(|i| i.captions.iter().map(String::as_str))
            .collect()
    }

    pub fn summary(&self, vocab: Option<&Vocabulary>) -> DatasetSummary {
        let mut tokens = 0;
        let mut known = 0;
        let mut captions = 0;
        for item in &self.items {
            for c in &item.captions {
                captions += 1;
                for w in tokenize(c) {
                    tokens += 1;
                    if vocab.is_some_and(|v| v.index_of(&w).is_some()) {
                        known += 1;
                    }
                }
            }
        }
        DatasetSummary {
            items: self.items.len(),
            captions,
            tokens,
            coverage: vocab.map(|_| {
                if tokens == 0 {
                    0.0
                } else {
                    known as f64 / tokens as f64
                }
            }),
        }
    }

    /// Deterministic split: the first `ceil(len · train_frac)` items train.
    pub fn split(&self, train_frac: f64) -> (Dataset, Dataset) {
        let cut = ((self.items.len() as f64) * train_frac.clamp(0.0, 1.0)).ceil() as usize;
        let cut = cut.min(self.items.len());
        (
            Dataset::new(self.items[..cut].to_vec()),
            Dataset::new(self.items[cut..].to_vec()),
        )
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for item in &self.items {
            out.push_str(&serde_json::to_string(item)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses and validates a JSON-lines document. Lines are parsed in
    /// parallel; the reported error is the one on the earliest line.
    pub fn from_jsonl(text: &str, dims: Option<FeatureDims>) -> Result<Self> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .collect();
        if lines.is_empty() {
            return Err(Error::validation("<dataset>", "no items"));
        }
        let parsed: Vec<Result<DatasetItem>> = lines
            .par_iter()
            .map(|(n, line)| {
                let item: DatasetItem = serde_json::from_str(line).map_err(|e| {
                    Error::validation(format!("line {}", n + 1), e.to_string())
                })?;
                item.validate(dims)?;
                Ok(item)
            })
            .collect();
        let items = parsed.into_iter().collect::<Result<Vec<_>>>()?;
        let dataset = Dataset::new(items);
        dataset.validate(dims)?;
        Ok(dataset)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_jsonl()?.as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Reads, parses and validates a dataset file, returning it with summary
/// statistics.
pub fn load_dataset(
    path: impl AsRef<Path>,
    dims: Option<FeatureDims>,
    vocab: Option<&Vocabulary>,
) -> Result<(Dataset, DatasetSummary)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let dataset = Dataset::from_jsonl(&text, dims)?;
    let summary = dataset.summary(vocab);
    Ok((dataset, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: &str) -> DatasetItem {
        DatasetItem {
            image_id: id.into(),
            visual: vec![0.5, -1.0],
            semantic: vec![0.1, 0.9, 0.0],
            captions: vec!["a red ball".into()],
        }
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(
            Dataset::from_jsonl("", None),
            Err(Error::Validation { .. })
        ));
        assert!(Dataset::from_jsonl("\n  \n", None).is_err());
    }

    #[test]
    fn out_of_range_likelihood_names_item() {
        let mut bad = item("img-7");
        bad.semantic[1] = 1.5;
        let text = Dataset::new(vec![item("img-1"), bad]).to_jsonl().unwrap();
        match Dataset::from_jsonl(&text, None) {
            Err(Error::Validation { item, .. }) => assert_eq!(item, "img-7"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_and_duplicate_checks() {
        let mut short = item("b");
        short.visual.pop();
        let text = Dataset::new(vec![item("a"), short]).to_jsonl().unwrap();
        assert!(Dataset::from_jsonl(&text, None).is_err());

        let text = Dataset::new(vec![item("a"), item("a")]).to_jsonl().unwrap();
        assert!(Dataset::from_jsonl(&text, None).is_err());

        let dims = FeatureDims {
            visual: 3,
            semantic: 3,
        };
        let text = Dataset::new(vec![item("a")]).to_jsonl().unwrap();
        assert!(Dataset::from_jsonl(&text, Some(dims)).is_err());
    }

    #[test]
    fn captions_required() {
        let mut none = item("x");
        none.captions.clear();
        assert!(none.validate(None).is_err());
        let mut blank = item("y");
        blank.captions = vec!["...".into()];
        assert!(blank.validate(None).is_err());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{}\n{{\"image_id\": 3}}\n", serde_json::to_string(&item("a")).unwrap());
        match Dataset::from_jsonl(&text, None) {
            Err(Error::Validation { item, .. }) => assert_eq!(item, "line 2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn summary_counts() {
        let mut a = item("a");
        a.captions.push("blue cube".into());
        let ds = Dataset::new(vec![a, item("b")]);
        let vocab = crate::data::build_vocab(&["a red ball"], 100, 0.0).unwrap();
        let s = ds.summary(Some(&vocab));
        assert_eq!((s.items, s.captions, s.tokens), (2, 3, 8));
        assert!((s.coverage.unwrap() - 6.0 / 8.0).abs() < 1e-12);
    }
}
