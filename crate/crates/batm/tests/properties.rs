//! Property suites for the library's structural invariants.

use proptest::prelude::*;

use batm::corpus::{build_vocabulary, encode, split, tokenize, RawDocument, Vocabulary, PAD_ID};
use batm::embedding::init_random;
use batm::model::{forward, masked_softmax, ModelParams};
use batm::training::doc_entropy;

fn word() -> impl Strategy<Value = String> {
    // latin-1-ish words with occasional digits and punctuation
    proptest::string::string_regex("[a-zA-Z0-9àéîöü!,.]{1,8}").unwrap()
}

fn text() -> impl Strategy<Value = String> {
    proptest::collection::vec(word(), 0..24).prop_map(|words| words.join(" "))
}

fn documents(min: usize, max: usize) -> impl Strategy<Value = Vec<RawDocument>> {
    proptest::collection::vec((text(), 0..4u8), min..max).prop_map(|items| {
        items
            .into_iter()
            .enumerate()
            .map(|(i, (text, label))| RawDocument {
                id: format!("doc-{i}"),
                text: format!("{text} anchor"), // every document tokenizes non-empty
                label: format!("label-{label}"),
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn tokenize_is_deterministic_and_lowercase_idempotent(text in text()) {
        let first = tokenize(&text);
        let second = tokenize(&text);
        prop_assert_eq!(&first, &second);
        let lowered = tokenize(&text.to_lowercase());
        prop_assert_eq!(&first, &lowered);
    }

    #[test]
    fn token_sequences_have_prefix_masks(docs in documents(1, 8), max_len in 1usize..40) {
        let vocab = build_vocabulary(&docs, 1).unwrap();
        for doc in &docs {
            let seq = encode(doc, &vocab, max_len).unwrap();
            prop_assert_eq!(seq.ids.len(), max_len);
            prop_assert_eq!(seq.mask.len(), max_len);
            let live = seq.mask.iter().take_while(|&&m| m).count();
            prop_assert_eq!(live, seq.effective_len);
            prop_assert!(seq.mask[live..].iter().all(|&m| !m));
            prop_assert_eq!(seq.mask.iter().filter(|&&m| m).count(), seq.effective_len);
            prop_assert!(seq.ids[live..].iter().all(|&id| id == PAD_ID));
        }
    }

    #[test]
    fn vocabulary_round_trips(docs in documents(1, 8)) {
        let vocab = build_vocabulary(&docs, 1).unwrap();
        for id in 0..vocab.len() as u32 {
            if !Vocabulary::is_reserved(id) {
                prop_assert_eq!(vocab.id_of(vocab.token_of(id)), Some(id));
            }
        }
    }

    #[test]
    fn split_partitions_the_corpus(docs in documents(10, 60), seed in 0u64..500) {
        let vocab = build_vocabulary(&docs, 1).unwrap();
        let s = split(&docs, &vocab, 8, (0.8, 0.1, 0.1), seed).unwrap();
        let mut seen: Vec<&str> = s.train.iter()
            .chain(&s.validation)
            .chain(&s.test)
            .map(|d| d.id.as_str())
            .collect();
        seen.sort_unstable();
        let before = seen.len();
        seen.dedup();
        prop_assert_eq!(before, seen.len(), "duplicated document across splits");
        let mut expected: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
        expected.sort_unstable();
        prop_assert_eq!(seen, expected);
    }

    #[test]
    fn masked_softmax_normalizes_and_zeroes(
        scores in proptest::collection::vec(-30.0f32..30.0, 1..12),
        mask_bits in proptest::collection::vec(any::<bool>(), 1..12),
    ) {
        let n = scores.len().min(mask_bits.len());
        let scores = &scores[..n];
        let mut mask = mask_bits[..n].to_vec();
        mask[0] = true; // at least one live position
        let weights = masked_softmax(scores, &mask).unwrap();
        let total: f32 = weights.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-6);
        for (w, &live) in weights.iter().zip(&mask) {
            if live {
                prop_assert!(*w >= 0.0);
            } else {
                prop_assert!(*w == 0.0);
            }
        }
    }

    #[test]
    fn masked_softmax_is_shift_invariant(
        scores in proptest::collection::vec(-10.0f32..10.0, 2..8),
        shift in -5.0f32..5.0,
    ) {
        let mask = vec![true; scores.len()];
        let base = masked_softmax(&scores, &mask).unwrap();
        let shifted_scores: Vec<f32> = scores.iter().map(|s| s + shift).collect();
        let shifted = masked_softmax(&shifted_scores, &mask).unwrap();
        for (a, b) in base.iter().zip(&shifted) {
            // the shifted scores themselves round before the softmax, so the
            // weights can move by ~ulp(score) relative, not ulp(weight)
            prop_assert!(
                (a - b).abs() <= 2e-5 * a.max(*b) + 1e-12,
                "{a} vs {b}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn npmi_and_cv_respect_their_bounds(
        corpus in proptest::collection::vec(
            proptest::collection::vec(0usize..6, 1..8),
            4..12,
        ),
        window in 1usize..6,
    ) {
        use batm::coherence::{build_window_counts, cv_score, npmi};

        let names = ["wa", "wb", "wc", "wd", "we", "wf"];
        let docs: Vec<Vec<String>> = corpus
            .iter()
            .map(|doc| doc.iter().map(|&i| names[i].to_string()).collect())
            .collect();
        let tracked: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let counts = build_window_counts(&docs, &tracked, window).unwrap();

        let usable: Vec<&String> =
            tracked.iter().filter(|w| counts.frequency(w) > 0).collect();
        for a in &usable {
            for b in &usable {
                let value = npmi(&counts, a, b, 1e-12).unwrap();
                prop_assert_eq!(value, npmi(&counts, b, a, 1e-12).unwrap());
                prop_assert!(
                    (-1.0 - 1e-6..=1.0 + 1e-6).contains(&value),
                    "npmi({a}, {b}) = {value} out of bounds"
                );
            }
        }
        if usable.len() >= 2 {
            let words: Vec<String> = usable.iter().map(|s| (*s).clone()).collect();
            let score = cv_score(&words, &counts, 1e-12).unwrap();
            prop_assert!((-1.0..=1.0).contains(&score.value), "C_v {}", score.value);
        }
    }
}

fn tiny_forward_setup(seed: u64, heads: usize) -> (ModelParams<f64>, batm::corpus::TokenSequence) {
    let embedding = init_random::<f64>(9, 3, seed);
    let params = ModelParams::new(embedding, heads, 2, 2, 3, seed + 1).unwrap();
    let seq = batm::corpus::TokenSequence::from_ids(&[2, 4, 7, 3], 6);
    (params, seq)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_weights_normalize(seed in 0u64..1000) {
        let (params, seq) = tiny_forward_setup(seed, 3);
        let record = forward(&seq, &params).unwrap();
        for alpha in &record.token_weights {
            let total: f64 = alpha.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for (pos, w) in alpha.iter().enumerate() {
                if pos >= seq.effective_len {
                    prop_assert!(*w == 0.0);
                }
            }
        }
        let beta_total: f64 = record.head_weights.iter().sum();
        prop_assert!((beta_total - 1.0).abs() < 1e-12);
        let prob_total: f64 = record.class_probs.iter().sum();
        prop_assert!((prob_total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn head_vectors_stay_in_embedding_bounding_box(seed in 0u64..1000) {
        // convex-combination consequence: coordinate-wise bounds
        let (params, seq) = tiny_forward_setup(seed, 2);
        let record = forward(&seq, &params).unwrap();
        for dim in 0..params.embed_dim() {
            let coords: Vec<f64> = seq
                .live_ids()
                .iter()
                .map(|&id| params.embedding.row(id)[dim])
                .collect();
            let lo = coords.iter().cloned().fold(f64::INFINITY, f64::min) - 1e-12;
            let hi = coords.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1e-12;
            for head in 0..params.head_count() {
                let h = record.head_vectors.row(head)[dim];
                prop_assert!(h >= lo && h <= hi, "head coord {h} outside [{lo}, {hi}]");
            }
            let hs: Vec<f64> = (0..params.head_count())
                .map(|k| record.head_vectors.row(k)[dim])
                .collect();
            let h_lo = hs.iter().cloned().fold(f64::INFINITY, f64::min) - 1e-12;
            let h_hi = hs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1e-12;
            let d = record.doc_vector[dim];
            prop_assert!(d >= h_lo && d <= h_hi);
        }
    }

    #[test]
    fn masked_positions_cannot_influence_the_record(seed in 0u64..1000) {
        let (mut params, seq) = tiny_forward_setup(seed, 2);
        let before = forward(&seq, &params).unwrap();
        // corrupt the PAD row, the only row masked positions could read
        for slot in params.embedding.matrix_mut().row_mut(0) {
            *slot = 1e6;
        }
        let after = forward(&seq, &params).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn permuting_heads_permutes_outputs(seed in 0u64..1000) {
        let (params, seq) = tiny_forward_setup(seed, 3);
        let record = forward(&seq, &params).unwrap();

        let mut permuted_params = params.clone();
        permuted_params.heads.rotate_left(1);
        let permuted = forward(&seq, &permuted_params).unwrap();

        for head in 0..3 {
            let source = (head + 1) % 3;
            prop_assert_eq!(&permuted.token_weights[head], &record.token_weights[source]);
            prop_assert_eq!(permuted.head_vectors.row(head), record.head_vectors.row(source));
            prop_assert_eq!(permuted.head_scores[head], record.head_scores[source]);
        }
        // summations change order, so compare within float tolerance
        for (a, b) in permuted.doc_vector.iter().zip(&record.doc_vector) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in permuted.class_probs.iter().zip(&record.class_probs) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn doc_entropy_bounded_by_log_live_count(seed in 0u64..1000) {
        let (params, seq) = tiny_forward_setup(seed, 2);
        let record = forward(&seq, &params).unwrap();
        let bound = (seq.effective_len as f64).ln() + 1e-12;
        for alpha in &record.token_weights {
            let h = doc_entropy(alpha, &record.mask);
            prop_assert!(h >= 0.0 && h <= bound);
        }
    }
}
