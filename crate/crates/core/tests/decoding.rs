use gssf_core::cell::{init_state, project_logits, CellConfig, CellParams, CellState, Model, Variant};
use gssf_core::data::{BOS, EOS};
use gssf_core::decode::*;
use gssf_core::smoothing::Smoothing;
use gssf_core::tensor::log_softmax;
use proptest::prelude::*;

fn random_model(variant: Variant, vocab: usize, seed: u64, gain: f64) -> Model {
    let c = CellConfig::for_variant(variant, 5, 4, 6, Some(3), 3, vocab);
    let mut p = CellParams::init(&c, seed).unwrap();
    p.scale(gain);
    Model::new(p, Smoothing::default())
}

const VISUAL: [f64; 3] = [0.3, -0.6, 0.9];
const SEMANTIC: [f64; 6] = [0.1, 0.8, 0.0, 0.0, 0.6, 0.3];

/// Replays a sequence directly through the cell API.
fn replay(model: &Model, seq: &[usize]) -> f64 {
    let s_hat = model.semantic_input(&SEMANTIC).unwrap();
    let p = &model.params;
    let mut state: CellState = init_state(p, &VISUAL).unwrap();
    let mut prev = BOS;
    let mut total = 0.0;
    for &tok in seq {
        let x = p.embedding.row(prev).unwrap();
        state = p.step(x, &state, s_hat.as_deref()).unwrap();
        total += log_softmax(&project_logits(p, &state.h).unwrap()).unwrap()[tok];
        prev = tok;
    }
    total
}

/// Every sequence that stops at EOS or at `max_len` tokens.
fn enumerate(vocab: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut done = Vec::new();
    let mut frontier = vec![vec![]];
    for step in 0..max_len {
        let mut next = Vec::new();
        for prefix in &frontier {
            for t in 0..vocab {
                let mut s: Vec<usize> = prefix.clone();
                s.push(t);
                if t == EOS || step + 1 == max_len {
                    done.push(s);
                } else {
                    next.push(s);
                }
            }
        }
        frontier = next;
    }
    done
}

fn exhaustive_best(model: &Model, vocab: usize, max_len: usize, normalize: bool) -> Vec<usize> {
    let score = |s: &Vec<usize>| {
        let lp = replay(model, s);
        if normalize {
            lp / s.len() as f64
        } else {
            lp
        }
    };
    enumerate(vocab, max_len)
        .into_iter()
        .map(|s| (score(&s), s))
        .max_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.cmp(&a.1)))
        .unwrap()
        .1
}

/// A width-2 beam prunes the greedy prefix at step 2; both survivors then
/// decay below the greedy caption's total.
#[test]
fn narrow_beam_can_score_below_greedy() {
    let model = random_model(Variant::Gsscn, 7, 18948, 3.4795219696720032);
    let dec = CellDecoder::new(&model, &VISUAL, &SEMANTIC).unwrap();
    let greedy = greedy_decode(&dec, 8).unwrap();
    let opts = BeamOptions { beam_size: 2, max_len: 8, no_repeat_ngram: None, length_normalize: false };
    let best = beam_decode(&dec, &opts).unwrap().best;
    assert!(best.log_prob < greedy.log_prob);
    let wide = BeamOptions { beam_size: 7, ..opts };
    assert!(beam_decode(&dec, &wide).unwrap().best.log_prob >= greedy.log_prob);
}

#[test]
fn enumeration_size() {
    // V=5, max_len=3: EOS first (1), EOS second (4), or 4·4·5 of length 3
    assert_eq!(enumerate(5, 3).len(), 1 + 4 + 80);
}

#[test]
fn beam_equals_brute_force_on_random_models() {
    for seed in 0..100u64 {
        let variant = Variant::ALL[(seed % 3) as usize];
        let model = random_model(variant, 5, seed, 3.0);
        let dec = CellDecoder::new(&model, &VISUAL, &SEMANTIC).unwrap();
        for normalize in [true, false] {
            let opts = BeamOptions {
                beam_size: 125,
                max_len: 3,
                no_repeat_ngram: None,
                length_normalize: normalize,
            };
            let got = beam_decode(&dec, &opts).unwrap().best;
            let want = exhaustive_best(&model, 5, 3, normalize);
            assert_eq!(got.generated(), want.as_slice(), "seed {seed} normalize {normalize}");
        }
    }
}

#[test]
fn small_vocab_small_len_brute_force() {
    for (vocab, max_len) in [(3, 2), (4, 3), (5, 2)] {
        for seed in 0..20 {
            let model = random_model(Variant::Gst, vocab, 500 + seed, 2.0);
            let dec = CellDecoder::new(&model, &VISUAL, &SEMANTIC).unwrap();
            let opts = BeamOptions {
                beam_size: vocab.pow(max_len as u32),
                max_len,
                no_repeat_ngram: None,
                length_normalize: true,
            };
            let got = beam_decode(&dec, &opts).unwrap().best;
            assert_eq!(got.generated(), exhaustive_best(&model, vocab, max_len, true).as_slice());
        }
    }
}

#[test]
fn generation_records_round_trip() {
    use gssf_core::data::{build_vocab, synth_dataset};
    let data = synth_dataset(4, 3, 6, 10, 1).unwrap();
    let vocab = build_vocab(&data.all_captions(), 100, 0.0).unwrap();
    let c = CellConfig::gsscn(5, 4, 6, 3, 3, vocab.len());
    let model = Model::new(CellParams::init(&c, 3).unwrap(), Smoothing::default());
    let opts = BeamOptions { max_len: 6, ..Default::default() };
    let recs = generate_captions(&model, &vocab, &data, &opts).unwrap();
    assert_eq!(recs.len(), 4);
    assert_eq!(recs[2].image_id, data.items[2].image_id);
    assert_eq!(parse_records(&records_to_jsonl(&recs).unwrap()).unwrap(), recs);
    let again = generate_captions(&model, &vocab, &data, &opts).unwrap();
    assert_eq!(again, recs);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exhaustive_beam_not_worse_than_greedy(seed in 0u64..100_000, vi in 0usize..3, gain in 0.5f64..4.0) {
        let model = random_model(Variant::ALL[vi], 5, seed, gain);
        let dec = CellDecoder::new(&model, &VISUAL, &SEMANTIC).unwrap();
        let greedy = greedy_decode(&dec, 3).unwrap();
        let opts = BeamOptions { beam_size: 125, max_len: 3, no_repeat_ngram: None, length_normalize: false };
        let best = beam_decode(&dec, &opts).unwrap().best;
        prop_assert!(best.log_prob >= greedy.log_prob);
    }

    #[test]
    fn beam_one_matches_greedy_for_cells(seed in 0u64..100_000, vi in 0usize..3) {
        let model = random_model(Variant::ALL[vi], 9, seed, 2.0);
        let dec = CellDecoder::new(&model, &VISUAL, &SEMANTIC).unwrap();
        let greedy = greedy_decode(&dec, 12).unwrap();
        let opts = BeamOptions { beam_size: 1, max_len: 12, no_repeat_ngram: None, length_normalize: true };
        prop_assert_eq!(beam_decode(&dec, &opts).unwrap().best.tokens, greedy.tokens);
    }

    #[test]
    fn stored_scores_replay(seed in 0u64..100_000, vi in 0usize..3, beam in 1usize..5) {
        let model = random_model(Variant::ALL[vi], 6, seed, 2.0);
        let dec = CellDecoder::new(&model, &VISUAL, &SEMANTIC).unwrap();
        let opts = BeamOptions { beam_size: beam, max_len: 5, ..Default::default() };
        for h in beam_decode(&dec, &opts).unwrap().beam {
            prop_assert!((replay(&model, h.generated()) - h.log_prob).abs() <= 1e-9);
        }
    }
}
