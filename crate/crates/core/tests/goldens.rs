mod common;

use fairforge::augment::{expand_prompts, LmAugmentConfig};
use fairforge::eval::{mark_best, paired_bootstrap, EvalSet};
use fairforge::genderlex::PatternSet;
use fairforge::mtclient::MockLm;
use fairforge::textcore::TokenizerMode;

/// Compares against a checked-in file; `FAIRFORGE_BLESS=1` rewrites it.
fn check_golden(name: &str, got: &str) {
    let path = common::fixture(name);
    if std::env::var_os("FAIRFORGE_BLESS").is_some() {
        std::fs::write(&path, got).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap();
    assert_eq!(got, want, "{name} drifted; rerun with FAIRFORGE_BLESS=1 if intended");
}

#[test]
fn lm_expansion_for_one_seed() {
    let cfg = LmAugmentConfig::default();
    let raw = MockLm::complete("Ein*e Leiter*in", cfg.max_tokens, cfg.seed);
    let (segs, stats) = expand_prompts(&["Leiter"], &MockLm, &PatternSet::builtin(), &cfg).unwrap();
    let mut text = format!("{raw}\n--\n");
    for s in &segs {
        text.push_str(&s.text);
        text.push('\n');
    }
    check_golden("lm_leiter_seed1.txt", &text);
    assert_eq!(stats.kept, segs.len());
    assert_eq!(stats.sentences, stats.fragments + stats.rejected + stats.duplicates + stats.kept);
}

/// 100 items: A is right where B is wrong on 60 of them, and the reverse
/// on the other 40.
fn split_60_40() -> (EvalSet, EvalSet) {
    let refs: Vec<String> = (0..100).map(|i| format!("satz {i} ist gut")).collect();
    let wrong = |i: usize| format!("satz {i} ist schlecht");
    let a: Vec<String> = (0..100).map(|i| if i < 60 { refs[i].clone() } else { wrong(i) }).collect();
    let b: Vec<String> = (0..100).map(|i| if i < 60 { wrong(i) } else { refs[i].clone() }).collect();
    (
        EvalSet::from_texts(&a, &refs, &[]).unwrap(),
        EvalSet::from_texts(&b, &refs, &[]).unwrap(),
    )
}

#[test]
fn bootstrap_p_value_is_pinned() {
    let (a, b) = split_60_40();
    let ab = paired_bootstrap(&a, &b, 1000, 7, TokenizerMode::MarkerPreserving).unwrap();
    let ba = paired_bootstrap(&b, &a, 1000, 7, TokenizerMode::MarkerPreserving).unwrap();
    assert_eq!(ab.p_value, PINNED_P);
    assert!(ab.a_significantly_better());
    assert!((ab.p_value + ba.p_value - 1.0 - ab.tie_fraction).abs() < 1e-12);
}

const PINNED_P: f64 = 0.03;

#[test]
fn best_systems_follow_significance() {
    let (a, b) = split_60_40();
    let m = mark_best(&[("a".into(), a), ("b".into(), b)], 1000, 7, TokenizerMode::MarkerPreserving).unwrap();
    assert_eq!(m.best, ["a"]);
    assert_eq!(m.wer, [0.1, 0.15]);
}
