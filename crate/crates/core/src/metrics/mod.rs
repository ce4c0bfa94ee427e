//! Caption metrics: corpus BLEU, ROUGE-L, CIDEr-D, and the two-space
//! evaluation harness.

mod bleu;
mod cider;
mod corpus;
mod report;
mod rouge;

pub use bleu::{bleu, bleu_from_stats, bleu_stats, BleuStats, BLEU_MAX_N};
pub use cider::{cider_d, cider_d_items, CiderItem, CIDER_MAX_N, CIDER_SIGMA};
pub use corpus::{EvalCorpus, EvalItem, References};
pub use report::{
    evaluate, evaluate_e1_e2, format_table, DualReport, EvalReport, ItemDiagnostics, TABLE_COLUMNS,
};
pub use rouge::{f_measure, lcs_len, rouge_l, rouge_l_item, ROUGE_BETA};
