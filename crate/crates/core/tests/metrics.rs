use std::collections::BTreeMap;

use gssf_core::data::{DictionaryTranslator, IdentityTranslator};
use gssf_core::metrics::*;
use gssf_core::text::tokenize;
use proptest::prelude::*;

fn item(id: &str, cand: &str, refs: &[&str]) -> EvalItem {
    EvalItem::from_text(id, cand, refs)
}

fn corpus(items: Vec<EvalItem>) -> EvalCorpus {
    EvalCorpus::new(items).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

#[test]
fn bleu_identity_is_one() {
    let c = corpus(vec![item("1", "a man rides a horse", &["a man rides a horse"])]);
    let b = bleu(&c, 4).unwrap();
    assert_eq!(b, vec![1.0; 4]);
}

#[test]
fn bleu_disjoint_is_zero() {
    let c = corpus(vec![item("1", "x y z", &["a b c"])]);
    assert_eq!(bleu(&c, 4).unwrap()[0], 0.0);
}

#[test]
fn bleu_clipping_hand_count() {
    // "the" occurs three times but at most once in the reference: 1/3.
    // Candidate (3) is longer than the reference (2), so no brevity penalty.
    let c = corpus(vec![item("1", "the the the", &["the cat"])]);
    assert!(close(bleu(&c, 1).unwrap()[0], 1.0 / 3.0));
}

#[test]
fn bleu_orders_hand_count() {
    // unigrams 5/6 (the ×2 clipped by the first reference), bigrams 3/5
    // (the cat, on the, the mat), trigrams 1/4 (on the mat), 4-grams 0/3.
    let c = corpus(vec![item(
        "1",
        "the cat sat on the mat",
        &["the cat is on the mat", "there is a cat on the mat"],
    )]);
    let b = bleu(&c, 4).unwrap();
    assert!(close(b[0], 5.0 / 6.0));
    assert!(close(b[1], 0.5f64.sqrt()));
    assert!(close(b[2], 0.5));
    assert_eq!(b[3], 0.0);
}

#[test]
fn bleu_brevity_penalty() {
    let c = corpus(vec![item("1", "the cat", &["the cat sat"])]);
    let b = bleu(&c, 2).unwrap();
    let bp = (1.0f64 - 3.0 / 2.0).exp();
    assert!(close(b[0], bp));
    assert!(close(b[1], bp));
}

#[test]
fn bleu_closest_reference_length() {
    // lengths 2 and 5 around a 4-token candidate: 5 is closer
    let stats = bleu_stats(&item("1", "a b c d", &["a b", "a b c d e"]), 4);
    assert_eq!(stats.reference_len, 5);
    // equidistant: shorter wins
    let stats = bleu_stats(&item("1", "a b c", &["a b", "a b c d"]), 4);
    assert_eq!(stats.reference_len, 2);
}

#[test]
fn rouge_hand_computation() {
    let c = corpus(vec![item("1", "a b c d", &["a c d"])]);
    let (p, r, b2) = (0.75, 1.0, 1.44);
    let expected = (1.0 + b2) * p * r / (r + b2 * p);
    assert!(close(rouge_l(&c).unwrap(), expected));
    assert_eq!(lcs_len(&tokenize("a b c d"), &tokenize("a c d")), 3);
}

#[test]
fn rouge_identity_and_disjoint() {
    let same = corpus(vec![item("1", "a b c", &["a b c"])]);
    assert_eq!(rouge_l(&same).unwrap(), 1.0);
    let disjoint = corpus(vec![item("1", "x y", &["a b c"])]);
    assert_eq!(rouge_l(&disjoint).unwrap(), 0.0);
}

#[test]
fn rouge_takes_best_reference() {
    let c = corpus(vec![item("1", "a b c", &["x y z", "a b c"])]);
    assert_eq!(rouge_l(&c).unwrap(), 1.0);
}

#[test]
fn cider_two_item_hand_oracle() {
    // N = 2, idf = ln 2 − ln df. Unigram df: a=1 b=1 c=2 d=1; every bigram 1.
    // Item A, candidate "a b":
    //   1-grams: vs "a b" cos 1; vs "a c" (c weighs 0) cos 1/√2
    //   2-grams: vs "a b" 1; vs "a c" 0
    // Item B, candidate "c d" vs "c d": 1 for both orders.
    // Orders 3 and 4 have no n-grams and contribute 0.
    let c = corpus(vec![
        item("A", "a b", &["a b", "a c"]),
        item("B", "c d", &["c d"]),
    ]);
    let a = 10.0 * ((1.0 + 0.5f64.sqrt()) / 2.0 + 0.5) / 4.0;
    let b = 10.0 * 2.0 / 4.0;
    let (items, mean) = cider_d_items(&c, 4, 6.0).unwrap();
    assert!(close(items[0].score, a), "{}", items[0].score);
    assert!(close(items[1].score, b));
    assert!(close(mean, (a + b) / 2.0));
}

#[test]
fn cider_length_penalty() {
    // Candidate "a b" vs reference "a b e": unigram cosine 2/√6, bigram 1/√2,
    // and the length gap of 1 multiplies each by exp(−1/72).
    let c = corpus(vec![
        item("A", "a b", &["a b e"]),
        item("B", "x y", &["x y z"]),
    ]);
    let (items, _) = cider_d_items(&c, 4, 6.0).unwrap();
    let pen = (-1.0f64 / 72.0).exp();
    // every n-gram has df 1, so all weights equal ln 2
    let uni = 2.0 / (2.0f64.sqrt() * 3.0f64.sqrt());
    let bi = 1.0 / 2.0f64.sqrt();
    assert!(close(items[0].score, 10.0 * pen * (uni + bi) / 4.0));
}

#[test]
fn cider_identity_is_ten() {
    let c = corpus(vec![
        item("1", "a man riding a horse", &["a man riding a horse"]),
        item("2", "two dogs play in the snow", &["two dogs play in the snow"]),
        item("3", "a plate of food on a table", &["a plate of food on a table"]),
    ]);
    let (items, mean) = cider_d_items(&c, 4, 6.0).unwrap();
    for i in &items {
        assert_eq!(i.terms, vec![1.0; 4]);
    }
    assert_eq!(mean, 10.0);
}

#[test]
fn cider_disjoint_is_zero() {
    let c = corpus(vec![item("1", "x y", &["a b"]), item("2", "c d", &["c d"])]);
    assert_eq!(cider_d_items(&c, 4, 6.0).unwrap().0[0].score, 0.0);
}

#[test]
fn single_item_corpus_warns() {
    let c = corpus(vec![item("1", "a b", &["a b"])]);
    let r = evaluate(&c).unwrap();
    assert_eq!(r.score("CIDEr-D"), Some(0.0));
    assert_eq!(r.warnings.len(), 1);
}

#[test]
fn corpus_validation() {
    assert!(EvalCorpus::new(vec![]).is_err());
    assert!(EvalCorpus::new(vec![item("1", "a", &[])]).is_err());
    assert!(EvalCorpus::new(vec![item("1", "a", &[""])]).is_err());
    assert!(EvalCorpus::new(vec![item("1", "a", &["a"]), item("1", "b", &["b"])]).is_err());
}

#[test]
fn report_has_all_columns() {
    let c = corpus(vec![
        item("1", "a b c d", &["a b c d"]),
        item("2", "e f g h", &["e f g x"]),
    ]);
    let r = evaluate(&c).unwrap();
    for col in TABLE_COLUMNS {
        assert!(r.score(col).is_some(), "{col}");
    }
    assert_eq!(r.items.len(), 2);
    assert_eq!(r.items[1].lcs, vec![3]);
    let table = format_table(&[("run", &r)]);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("CIDEr-D") && lines[0].find("Bleu_4") < lines[0].find("Bleu_1"));
    assert_eq!(lines[0].len(), lines[1].len());

    let back: EvalReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert_eq!(back, r);
}

fn refs(pairs: &[(&str, &[&str])]) -> References {
    pairs
        .iter()
        .map(|(id, rs)| (id.to_string(), rs.iter().map(|r| tokenize(r)).collect()))
        .collect()
}

#[test]
fn e1_equals_e2_under_identity() {
    let gen = vec![
        ("1".to_string(), tokenize("a dog runs on grass")),
        ("2".to_string(), tokenize("a cat sleeps")),
    ];
    let r = refs(&[("1", &["a dog runs on the grass"]), ("2", &["the cat is sleeping"])]);
    let dual = evaluate_e1_e2(&gen, &r, &r, &IdentityTranslator).unwrap();
    assert_eq!(dual.e1, dual.e2);
}

#[test]
fn perfect_generation_scores_one() {
    let gen = vec![("1".to_string(), tokenize("a b c"))];
    let r = refs(&[("1", &["a b c"])]);
    let dual = evaluate_e1_e2(&gen, &r, &r, &IdentityTranslator).unwrap();
    assert_eq!(dual.e1.score("Bleu_1"), Some(1.0));
}

#[test]
fn e2_through_dictionary_hand_count() {
    let dict = DictionaryTranslator::from_pairs([
        ("ka", "a"),
        ("kha", "cat"),
        ("ga", "dog"),
        ("gha", "sits"),
        ("na", "runs"),
    ])
    .unwrap();
    let gen = vec![
        ("1".to_string(), tokenize("ka kha gha")),
        ("2".to_string(), tokenize("ka ga zz")),
        ("3".to_string(), tokenize("ga na")),
    ];
    let refs_l = refs(&[("1", &["ka kha gha"]), ("2", &["ga na"]), ("3", &["ka ga na"])]);
    let refs_e = refs(&[("1", &["a cat sits"]), ("2", &["the dog runs"]), ("3", &["a dog runs"])]);
    let dual = evaluate_e1_e2(&gen, &refs_l, &refs_e, &dict).unwrap();
    // translations: [a cat sits] 3/3, [a dog <unk>] 1/3, [dog runs] 2/2
    // c = 8, r = 9 → BP = exp(1 − 9/8)
    let expected = 0.75 * (1.0f64 - 9.0 / 8.0).exp();
    assert!(close(dual.e2.score("Bleu_1").unwrap(), expected));
    assert_eq!(dual.e2.untranslated_tokens, 1);
    assert!(dual.e2.skipped.is_empty());
}

#[test]
fn missing_references_are_an_error() {
    let gen = vec![("9".to_string(), tokenize("a"))];
    let r = refs(&[("1", &["a"])]);
    assert!(evaluate_e1_e2(&gen, &r, &r, &IdentityTranslator).is_err());
}

fn sentence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(0u8..6, 1..8).prop_map(|v| v.iter().map(|t| format!("w{t}")).collect())
}

fn arb_corpus() -> impl Strategy<Value = EvalCorpus> {
    prop::collection::vec((sentence(), prop::collection::vec(sentence(), 1..4)), 1..6).prop_map(|items| {
        EvalCorpus {
            items: items
                .into_iter()
                .enumerate()
                .map(|(i, (c, r))| EvalItem::new(i.to_string(), c, r))
                .collect(),
        }
    })
}

fn all_scores(c: &EvalCorpus) -> BTreeMap<String, f64> {
    evaluate(c).unwrap().scores
}

fn scores_close(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|((ka, va), (kb, vb))| ka == kb && (va - vb).abs() <= 1e-12)
}

proptest! {
    #[test]
    fn scores_in_range(c in arb_corpus()) {
        let r = evaluate(&c).unwrap();
        for (k, v) in &r.scores {
            let hi = if k == "CIDEr-D" { 10.0 } else { 1.0 };
            prop_assert!((0.0..=hi + 1e-12).contains(v), "{k} = {v}");
        }
        for i in &r.items {
            prop_assert!(i.precisions.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn order_invariant(c in arb_corpus(), seed in any::<u64>()) {
        let mut shuffled = c.clone();
        let n = shuffled.items.len();
        shuffled.items.rotate_left((seed as usize) % n);
        shuffled.items.reverse();
        prop_assert!(scores_close(&all_scores(&c), &all_scores(&shuffled)));
    }

    #[test]
    fn renaming_invariant(c in arb_corpus()) {
        let rename = |v: &Vec<String>| v.iter().map(|t| format!("z{}", t.len() * 7 + t.as_bytes()[1] as usize)).collect::<Vec<_>>();
        let renamed = EvalCorpus {
            items: c.items.iter().map(|i| EvalItem::new(
                i.image_id.clone(),
                rename(&i.candidate),
                i.references.iter().map(rename).collect(),
            )).collect(),
        };
        prop_assert!(scores_close(&all_scores(&c), &all_scores(&renamed)));
    }

    #[test]
    fn adding_the_candidate_as_reference_never_hurts(c in arb_corpus(), pick in any::<usize>()) {
        let k = pick % c.items.len();
        let before = evaluate(&c).unwrap();
        let mut more = c.clone();
        let cand = more.items[k].candidate.clone();
        more.items[k].references.push(cand);
        let after = evaluate(&more).unwrap();
        let (b, a) = (&before.items[k], &after.items[k]);
        for (pb, pa) in b.precisions.iter().zip(&a.precisions) {
            prop_assert!(pa >= pb);
        }
        prop_assert!(a.rouge_l >= b.rouge_l);
        prop_assert!(a.cider_d >= b.cider_d - 1e-12, "{} < {}", a.cider_d, b.cider_d);
    }
}

struct Flaky;

impl gssf_core::data::Translator for Flaky {
    fn translate(
        &self,
        tokens: &[String],
        _direction: gssf_core::data::Direction,
    ) -> gssf_core::Result<gssf_core::data::Translation> {
        if tokens.iter().any(|t| t == "fail") {
            return Err(gssf_core::Error::Domain("backend unavailable".into()));
        }
        Ok(gssf_core::data::Translation { tokens: tokens.to_vec(), misses: 0 })
    }
}

#[test]
fn translator_failure_skips_item() {
    let gen = vec![
        ("1".to_string(), tokenize("a b")),
        ("2".to_string(), tokenize("fail here")),
    ];
    let r = refs(&[("1", &["a b"]), ("2", &["c d"])]);
    let dual = evaluate_e1_e2(&gen, &r, &r, &Flaky).unwrap();
    assert_eq!(dual.e1.items.len(), 2);
    assert_eq!(dual.e2.items.len(), 1);
    assert_eq!(dual.e2.skipped, vec!["2".to_string()]);
}
