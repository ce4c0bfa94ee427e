//! Pluggable caption translation between a target language `L` and English.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::data::SPECIAL_TOKENS;
use crate::data::UNK;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// L → E
    ToEnglish,
    /// E → L
    FromEnglish,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    pub tokens: Vec<String>,
    /// Tokens the translator could not map (emitted as `<unk>`).
    pub misses: usize,
}

/// Token-sequence translator. Real machine-translation backends implement
/// this same trait.
pub trait Translator: Send + Sync {
    fn translate(&self, tokens: &[String], direction: Direction) -> Result<Translation>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTranslator;

impl Translator for IdentityTranslator {
    fn translate(&self, tokens: &[String], _direction: Direction) -> Result<Translation> {
        Ok(Translation {
            tokens: tokens.to_vec(),
            misses: 0,
        })
    }
}

/// Word-for-word bijective dictionary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DictionaryTranslator {
    to_english: HashMap<String, String>,
    from_english: HashMap<String, String>,
}

impl DictionaryTranslator {
    pub fn from_pairs<I, A, B>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let mut dict = DictionaryTranslator::default();
        for (l, e) in pairs {
            let (l, e) = (l.into(), e.into());
            if dict.to_english.contains_key(&l) {
                return Err(Error::validation(l, "word listed twice on the L side"));
            }
            if dict.from_english.contains_key(&e) {
                return Err(Error::validation(e, "word listed twice on the English side"));
            }
            dict.to_english.insert(l.clone(), e.clone());
            dict.from_english.insert(e, l);
        }
        Ok(dict)
    }

    /// Parses a UTF-8 file with one `<L word><whitespace><English word>` pair
    /// per line. Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            match cols.as_slice() {
                [l, e] => pairs.push((l.to_string(), e.to_string())),
                _ => {
                    return Err(Error::validation(
                        format!("dictionary line {}", n + 1),
                        format!("expected two columns, found {}", cols.len()),
                    ))
                }
            }
        }
        DictionaryTranslator::from_pairs(pairs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DictionaryTranslator::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.to_english.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_english.is_empty()
    }
}

impl Translator for DictionaryTranslator {
    fn translate(&self, tokens: &[String], direction: Direction) -> Result<Translation> {
        let table = match direction {
            Direction::ToEnglish => &self.to_english,
            Direction::FromEnglish => &self.from_english,
        };
        let mut misses = 0;
        let tokens = tokens
            .iter()
            .map(|t| match table.get(t) {
                Some(w) => w.clone(),
                None => {
                    misses += 1;
                    SPECIAL_TOKENS[UNK].to_string()
                }
            })
            .collect();
        Ok(Translation { tokens, misses })
    }
}
