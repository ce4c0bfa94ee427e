use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::text::tokenize;

pub const BOS: usize = 0;
pub const EOS: usize = 1;
pub const UNK: usize = 2;
pub const PAD: usize = 3;
pub const SPECIAL_TOKENS: [&str; 4] = ["<bos>", "<eos>", "<unk>", "<pad>"];

/// Size cap used for translated (Bengali) caption corpora.
pub const BENGALI_MAX_VOCAB: usize = 20_000;
/// Size cap matching the English reference vocabulary.
pub const ENGLISH_MAX_VOCAB: usize = 8_791;

/// Token ↔ index bijection. Indices 0..4 are the reserved specials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVocabulary", into = "RawVocabulary")]
pub struct Vocabulary {
    tokens: Vec<String>,
    freqs: Vec<u64>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct RawVocabulary {
    tokens: Vec<String>,
    freqs: Vec<u64>,
}

impl TryFrom<RawVocabulary> for Vocabulary {
    type Error = Error;

    fn try_from(raw: RawVocabulary) -> Result<Self> {
        Vocabulary::from_parts(raw.tokens, raw.freqs)
    }
}

impl From<Vocabulary> for RawVocabulary {
    fn from(v: Vocabulary) -> Self {
        RawVocabulary {
            tokens: v.tokens,
            freqs: v.freqs,
        }
    }
}

impl Vocabulary {
    /// Rebuilds a vocabulary from its token list (specials first) and
    /// frequencies.
    pub fn from_parts(tokens: Vec<String>, freqs: Vec<u64>) -> Result<Self> {
        if tokens.len() != freqs.len() {
            return Err(Error::Contract("token and frequency lists differ in length".into()));
        }
        if tokens.len() < SPECIAL_TOKENS.len()
            || tokens.iter().zip(SPECIAL_TOKENS).any(|(t, s)| t != s)
        {
            return Err(Error::Contract("vocabulary must start with the reserved tokens".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Contract(format!("duplicate token {t:?}")));
            }
        }
        Ok(Vocabulary {
            tokens,
            freqs,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    /// Corpus frequency of a token; 0 for the specials.
    pub fn freq(&self, token: &str) -> Option<u64> {
        self.index_of(token).map(|i| self.freqs[i])
    }

    pub fn is_special(index: usize) -> bool {
        index < SPECIAL_TOKENS.len()
    }

    /// Maps already-tokenized words to indices, OOV → UNK, without BOS/EOS.
    pub fn lookup<S: AsRef<str>>(&self, words: &[S]) -> Vec<usize> {
        words
            .iter()
            .map(|w| self.index_of(w.as_ref()).unwrap_or(UNK))
            .collect()
    }

    /// `BOS w₁ … wₙ EOS`.
    pub fn encode(&self, text: &str) -> Vec<usize> {
        let words = tokenize(text);
        let mut out = Vec::with_capacity(words.len() + 2);
        out.push(BOS);
        out.extend(self.lookup(&words));
        out.push(EOS);
        out
    }

    /// Tokens as strings, dropping BOS, EOS and PAD. UNK renders as `<unk>`.
    pub fn decode_tokens(&self, indices: &[usize]) -> Vec<String> {
        indices
            .iter()
            .filter(|&&i| i != BOS && i != EOS && i != PAD)
            .map(|&i| self.token(i).unwrap_or(SPECIAL_TOKENS[UNK]).to_string())
            .collect()
    }

    pub fn decode(&self, indices: &[usize]) -> String {
        self.decode_tokens(indices).join(" ")
    }

    /// SHA-256 over the newline-joined token list, hex encoded.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                hasher.update(b"\n");
            }
            hasher.update(t.as_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

/// Builds a frequency-ranked vocabulary.
///
/// Tokens are ranked by corpus frequency (ties broken lexicographically). A
/// token is kept when its rank fits within `max_size` minus the four
/// reserved slots and it appears in at least `min_doc_frac` of the
/// sentences.
pub fn build_vocab<S: AsRef<str>>(
    sentences: &[S],
    max_size: usize,
    min_doc_frac: f64,
) -> Result<Vocabulary> {
    if max_size < SPECIAL_TOKENS.len() + 1 {
        return Err(Error::Config(format!(
            "max vocabulary size {max_size} leaves no room beyond the reserved tokens"
        )));
    }
    if !(0.0..=1.0).contains(&min_doc_frac) {
        return Err(Error::Config(format!(
            "min_doc_frac must lie in [0, 1], got {min_doc_frac}"
        )));
    }
    if sentences.is_empty() {
        return Err(Error::Domain("cannot build a vocabulary from an empty corpus".into()));
    }

    let mut freq: HashMap<String, u64> = HashMap::new();
    let mut docs: HashMap<String, u64> = HashMap::new();
    for sentence in sentences {
        let words = tokenize(sentence.as_ref());
        let mut seen = HashSet::new();
        for w in words {
            if SPECIAL_TOKENS.contains(&w.as_str()) {
                continue;
            }
            *freq.entry(w.clone()).or_default() += 1;
            if seen.insert(w.clone()) {
                *docs.entry(w).or_default() += 1;
            }
        }
    }

    let mut ranked: Vec<(String, u64)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let budget = max_size - SPECIAL_TOKENS.len();
    let n_docs = sentences.len() as f64;
    let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
    let mut freqs = vec![0; SPECIAL_TOKENS.len()];
    for (word, count) in ranked.into_iter().take(budget) {
        let frac = docs[&word] as f64 / n_docs;
        if frac >= min_doc_frac {
            tokens.push(word);
            freqs.push(count);
        }
    }
    Vocabulary::from_parts(tokens, freqs)
}
