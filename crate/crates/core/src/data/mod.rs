//! Vocabulary, datasets, synthetic data, translation and embeddings.

mod dataset;
mod embeddings;
mod synth;
mod translate;
mod vocab;

pub use dataset::{load_dataset, Dataset, DatasetItem, DatasetSummary, FeatureDims};
pub use embeddings::{load_embeddings, parse_embeddings, EmbeddingStats};
pub use synth::{synth_dataset, synth_dataset_with, synth_word, SynthOptions};
pub use translate::{Direction, DictionaryTranslator, IdentityTranslator, Translation, Translator};
pub use vocab::{
    build_vocab, Vocabulary, BENGALI_MAX_VOCAB, BOS, ENGLISH_MAX_VOCAB, EOS, PAD, SPECIAL_TOKENS,
    UNK,
};
