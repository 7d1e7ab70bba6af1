mod common;

use fairforge::eval::wer;
use fairforge::roundtrip::{get_close_matches, similarity_ratio, MergeConfig};
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct RatioCase {
    a: String,
    b: String,
    ratio: f64,
}

#[derive(Deserialize)]
struct CloseCase {
    word: String,
    candidates: Vec<String>,
    cutoff: f64,
    accepted: Vec<String>,
}

#[derive(Deserialize)]
struct Reference {
    ratios: Vec<RatioCase>,
    close_matches: Vec<CloseCase>,
}

fn reference() -> Reference {
    let text = std::fs::read_to_string(common::fixture("similarity_ref.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn ratios_match_difflib() {
    let r = reference();
    assert!(r.ratios.len() > 900);
    for c in &r.ratios {
        let got = similarity_ratio(&c.a, &c.b);
        assert!((got - c.ratio).abs() < 1e-12, "{:?} {:?}: {got} vs {}", c.a, c.b, c.ratio);
    }
}

#[test]
fn close_matches_match_difflib() {
    for c in reference().close_matches {
        let cfg = MergeConfig {
            cutoff: c.cutoff,
            max_candidates: c.candidates.len().max(1),
        };
        let mut got: Vec<String> = get_close_matches(&c.word, &c.candidates, &cfg)
            .into_iter()
            .map(|m| m.word)
            .collect();
        got.sort();
        assert_eq!(got, c.accepted, "{:?} in {:?}", c.word, c.candidates);
    }
}

#[test]
fn wer_matches_brute_force_on_short_pairs() {
    for (hyp, reference) in common::random_pairs(300, 6, 11) {
        let r = wer(&hyp, &reference);
        assert_eq!(r.edits.total(), common::edit_distance_brute(&hyp, &reference), "{hyp:?} {reference:?}");
    }
}

#[test]
fn oracles_agree_with_each_other() {
    for (a, b) in common::random_pairs(300, 6, 12) {
        assert_eq!(common::edit_distance_memo(&a, &b), common::edit_distance_brute(&a, &b));
    }
}

fn tokens() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..14)
        .prop_map(|v| v.into_iter().map(str::to_string).collect())
}

proptest! {
    #[test]
    fn wer_equals_memo_oracle(h in tokens(), r in tokens()) {
        let got = wer(&h, &r);
        let d = common::edit_distance_memo(&h, &r);
        prop_assert_eq!(got.edits.total(), d);
        prop_assert_eq!(got.rate, d as f64 / r.len().max(1) as f64);
        prop_assert_eq!(got.ref_len, r.len());
    }
}
