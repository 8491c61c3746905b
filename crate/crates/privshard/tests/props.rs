//! Property tests for the text pipeline, detector, and vector math.

use proptest::prelude::*;

use privshard::entity_catalog::{Catalog, EntityKind};
use privshard::text_pipeline::{clean_token, clean_tokens, label_tokens, tokenize, validate_labels};
use privshard::vector_index::{cosine_similarity, TfIdfVector};

fn char_slice(text: &str, start: usize, end: usize) -> String {
    text.chars().skip(start).take(end - start).collect()
}

proptest! {
    /// Token offsets index the source exactly, tokens carry no whitespace,
    /// and cleaned regions map back through the strip counts.
    #[test]
    fn offset_fidelity(text in any::<String>()) {
        let tokens = tokenize(&text);
        for window in tokens.windows(2) {
            prop_assert!(window[0].end <= window[1].start);
        }
        for token in tokens {
            prop_assert!(!token.text.chars().any(char::is_whitespace));
            let region = char_slice(&text, token.start, token.end);
            prop_assert_eq!(region, token.text.clone());

            let ct = clean_token(token);
            if !ct.is_dropped() {
                let clean_region = char_slice(&text, ct.clean_start(), ct.clean_end());
                prop_assert_eq!(clean_region, ct.cleaned);
            }
        }
    }

    /// Cleaning an already-cleaned token changes nothing.
    #[test]
    fn clean_is_idempotent(word in "[^\\s]{1,24}") {
        let first = clean_tokens(&word);
        prop_assert_eq!(first.len(), 1);
        let cleaned = first[0].cleaned.clone();
        if !cleaned.is_empty() {
            let second = clean_tokens(&cleaned);
            prop_assert_eq!(second.len(), 1);
            prop_assert_eq!(second[0].cleaned.as_str(), cleaned.as_str());
            prop_assert_eq!(second[0].leading_stripped, 0);
            prop_assert_eq!(second[0].trailing_stripped, 0);
        }
    }

    /// Every I label follows a B/I of the same kind, for arbitrary token
    /// streams.
    #[test]
    fn labels_are_always_sound(tokens in prop::collection::vec(token_strategy(), 0..24)) {
        let catalog = Catalog::default_catalog();
        let labels = label_tokens(&tokens, &catalog);
        prop_assert!(validate_labels(&labels).is_ok());
    }

    /// The full detector agrees with brute-force per-token first-match
    /// regex application.
    #[test]
    fn detector_matches_bruteforce_oracle(tokens in prop::collection::vec(token_strategy(), 0..24)) {
        let catalog = Catalog::default_catalog();
        let text = tokens.join(" ");
        let spans = catalog.detect(&text);

        let mut expected = Vec::new();
        let mut index = 0usize;
        for token in clean_tokens(&text) {
            if token.is_dropped() {
                continue;
            }
            let hit = catalog
                .patterns()
                .iter()
                .find(|p| p.matches(&token.cleaned))
                .map(|p| p.kind());
            if let Some(kind) = hit {
                expected.push((index, kind, token.cleaned.clone()));
            }
            index += 1;
        }

        let got: Vec<(usize, EntityKind, String)> = spans
            .into_iter()
            .map(|s| (s.token_index, s.kind, s.value))
            .collect();
        prop_assert_eq!(got, expected);
    }

    /// Cosine similarity is symmetric, scale invariant, and stays in [0, 1]
    /// for non-negative weights.
    #[test]
    fn cosine_properties(
        a in sparse_vector_strategy(),
        b in sparse_vector_strategy(),
        scale in 0.001f64..1000.0,
    ) {
        let ab = cosine_similarity(&a, &b);
        let ba = cosine_similarity(&b, &a);
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));

        let scaled = TfIdfVector::from_entries(
            a.entries().iter().map(|&(id, w)| (id, w * scale)).collect(),
        );
        let scaled_sim = cosine_similarity(&scaled, &b);
        prop_assert!((scaled_sim - ab).abs() < 1e-9);
    }
}

/// Mostly prose words, sometimes values shaped like catalog entities, with
/// occasional edge punctuation.
fn token_strategy() -> impl Strategy<Value = String> {
    let core = prop_oneof![
        4 => "[a-z]{1,8}",
        1 => "[a-z]{1,6}[0-9]{0,2}@[a-z]{1,5}\\.(com|org|net)",
        1 => "[0-9]{3}-[0-9]{2}-[0-9]{4}",
        1 => "\\$[0-9]{1,3}(,[0-9]{3}){0,2}(\\.[0-9]{2})?",
        1 => "[0-9]{13,16}",
        1 => "\\+[0-9]{6,15}",
        1 => "https://[a-z]{1,8}\\.com(/[a-z]{0,6})?",
        1 => "[0-9]{1,20}",
    ];
    (core, 0..9u8).prop_map(|(core, dress)| match dress {
        6 => format!("({core})"),
        7 => format!("{core},"),
        8 => format!("{core}."),
        _ => core,
    })
}

fn sparse_vector_strategy() -> impl Strategy<Value = TfIdfVector> {
    prop::collection::btree_map(0u32..40, 0.0001f64..10.0, 0..12)
        .prop_map(|map| TfIdfVector::from_entries(map.into_iter().collect()))
}
