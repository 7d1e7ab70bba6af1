//! Round-trip pseudo sources: translate gender-fair German to a pivot and
//! back, then merge the biased back-translation into the original sentence.

mod similarity;

pub use similarity::{get_close_matches, similarity_ratio, CloseMatch, MergeConfig};

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genderlex::{normalize_de, FormKind, Gender, GenderFairMatch, PatternSet};
use crate::mtclient::{translate_all, BatchConfig, MtError, Translator};
use crate::textcore::{tokenize, tokenize_spans, Origin, ParallelRecord, Segment, TokenizerMode};

#[derive(Debug, Error)]
pub enum RoundtripError {
    #[error("segment {0} has no gender-fair form")]
    NotGenderFair(u64),
    #[error(transparent)]
    Mt(#[from] MtError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replacement {
    pub fair: String,
    pub matched: String,
    pub similarity: f64,
    /// Token range of the replaced unit in the target.
    pub tokens: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeResult {
    pub merged: String,
    pub matched_all: bool,
    pub replacements: Vec<Replacement>,
}

/// A gender-fair unit in token space: the tokens a match touches.
#[derive(Debug, Clone)]
struct Unit {
    tokens: Range<usize>,
    bytes: Range<usize>,
    word: String,
}

fn fair_units(target: &str, matches: &[GenderFairMatch]) -> Vec<Unit> {
    let spans = tokenize_spans(target, TokenizerMode::MarkerPreserving);
    let mut units: Vec<Unit> = Vec::new();
    for m in matches {
        let hit: Vec<usize> = spans
            .iter()
            .enumerate()
            .filter(|(_, t)| t.span.start < m.byte_end && m.byte_start < t.span.end)
            .map(|(i, _)| i)
            .collect();
        let (Some(&first), Some(&last)) = (hit.first(), hit.last()) else {
            continue;
        };
        // Two matches inside one compound token form one unit.
        if let Some(prev) = units.last_mut() {
            if first < prev.tokens.end {
                prev.tokens.end = prev.tokens.end.max(last + 1);
                prev.bytes.end = prev.bytes.end.max(spans[last].span.end);
                continue;
            }
        }
        units.push(Unit {
            tokens: first..last + 1,
            bytes: spans[first].span.start..spans[last].span.end,
            word: spans[first].text.to_string(),
        });
    }
    units
}

/// Replaces every gender-fair token of `target` with its closest token in
/// `roundtrip`. If any fair token has no match at or above the cutoff, the
/// round trip is returned unchanged.
///
/// A pair form ("Studentinnen und Studenten") is one unit spanning three
/// tokens, compared through its first conjunct. Text outside replaced units
/// is copied from `target` byte for byte.
///
/// ```
/// use fairforge::genderlex::PatternSet;
/// use fairforge::roundtrip::{merge_roundtrip, MergeConfig};
///
/// let r = merge_roundtrip(
///     "Die Schüler*innen lernen gern.",
///     "Die Schüler lernen sehr gern.",
///     &PatternSet::builtin(),
///     &MergeConfig::default(),
/// );
/// assert!(r.matched_all);
/// assert_eq!(r.merged, "Die Schüler lernen gern.");
/// ```
pub fn merge_roundtrip(target: &str, roundtrip: &str, patterns: &PatternSet, cfg: &MergeConfig) -> MergeResult {
    let units = fair_units(target, &patterns.find_matches(target));
    let rt = tokenize(roundtrip, TokenizerMode::MarkerPreserving);
    let mut replacements = Vec::with_capacity(units.len());
    let mut matched_all = true;
    for u in &units {
        match get_close_matches(&u.word, &rt.0, cfg).into_iter().next() {
            Some(best) => replacements.push(Replacement {
                fair: target[u.bytes.clone()].to_string(),
                matched: best.word,
                similarity: best.similarity,
                tokens: u.tokens.clone(),
            }),
            None => matched_all = false,
        }
    }
    if !matched_all {
        return MergeResult {
            merged: roundtrip.to_string(),
            matched_all,
            replacements,
        };
    }
    let mut merged = String::with_capacity(target.len());
    let mut at = 0;
    for (u, r) in units.iter().zip(&replacements) {
        merged.push_str(&target[at..u.bytes.start]);
        merged.push_str(&r.matched);
        at = u.bytes.end;
    }
    merged.push_str(&target[at..]);
    MergeResult {
        merged,
        matched_all,
        replacements,
    }
}

/// Token-level locality: outside replaced units, `merged` and `target`
/// tokenize identically, and each unit became exactly its replacement.
pub fn check_merge_locality(target: &str, result: &MergeResult) -> bool {
    if !result.matched_all {
        return true;
    }
    let t = tokenize(target, TokenizerMode::MarkerPreserving).0;
    let m = tokenize(&result.merged, TokenizerMode::MarkerPreserving).0;
    let mut expected: Vec<String> = Vec::with_capacity(t.len());
    let mut at = 0;
    for r in &result.replacements {
        if r.tokens.start < at {
            return false;
        }
        expected.extend_from_slice(&t[at..r.tokens.start]);
        expected.extend(tokenize(&r.matched, TokenizerMode::MarkerPreserving).0);
        at = r.tokens.end;
    }
    expected.extend_from_slice(&t[at..]);
    expected == m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundtripMode {
    Plain,
    TagF,
    TagM,
}

impl RoundtripMode {
    pub fn tag(self) -> Option<Gender> {
        match self {
            RoundtripMode::Plain => None,
            RoundtripMode::TagF => Some(Gender::F),
            RoundtripMode::TagM => Some(Gender::M),
        }
    }

    pub fn origin(self) -> Origin {
        match self {
            RoundtripMode::Plain => Origin::RoundtripPlain,
            RoundtripMode::TagF => Origin::RoundtripFemTag,
            RoundtripMode::TagM => Origin::RoundtripMascTag,
        }
    }
}

impl std::str::FromStr for RoundtripMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(RoundtripMode::Plain),
            "tag_f" => Ok(RoundtripMode::TagF),
            "tag_m" => Ok(RoundtripMode::TagM),
            other => Err(format!("unknown round-trip mode {other:?} (plain, tag_f, tag_m)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RoundtripOptions {
    pub mode: RoundtripMode,
    pub pivot: String,
    /// Merge back-translations into targets; otherwise use them verbatim.
    pub merge: bool,
    pub merge_cfg: MergeConfig,
    /// Rewrite record targets to one gender-fair convention.
    pub normalize_target: Option<FormKind>,
    pub batch: BatchConfig,
}

impl Default for RoundtripOptions {
    fn default() -> Self {
        RoundtripOptions {
            mode: RoundtripMode::Plain,
            pivot: "en".to_string(),
            merge: true,
            merge_cfg: MergeConfig::default(),
            normalize_target: None,
            batch: BatchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripTrace {
    pub id: u64,
    pub mode: RoundtripMode,
    pub target: String,
    pub pivot: String,
    pub back_translation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merge: Option<MergeResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripOutcome {
    pub record: ParallelRecord,
    pub trace: RoundTripTrace,
}

/// How often the back-translation used each gender at the fair units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagCompliance {
    pub units: usize,
    pub feminine: usize,
    pub masculine: usize,
    pub other: usize,
}

impl TagCompliance {
    pub fn add(&mut self, target: &str, result: &MergeResult, patterns: &PatternSet) {
        let matches = patterns.find_matches(target);
        for r in &result.replacements {
            self.units += 1;
            let m = matches.iter().find(|m| r.fair.contains(&m.matched) || m.matched.contains(&r.fair));
            match m {
                Some(m) if r.matched == m.feminine => self.feminine += 1,
                Some(m) if r.matched == m.masculine => self.masculine += 1,
                _ => self.other += 1,
            }
        }
    }
}

/// Round-trips every segment: all texts to the pivot first, then all back,
/// then merges. Segments without a gender-fair form are rejected.
pub fn build_pseudo_sources(
    segments: &[Segment],
    mt: &dyn Translator,
    patterns: &PatternSet,
    opts: &RoundtripOptions,
) -> Result<Vec<RoundTripOutcome>, RoundtripError> {
    if let Some(bad) = segments.iter().find(|s| patterns.find_matches(&s.text).is_empty()) {
        return Err(RoundtripError::NotGenderFair(bad.id));
    }
    let texts: Vec<String> = segments.iter().map(|s| s.text.clone()).collect();
    let pivots = translate_all(mt, "de", &opts.pivot, &texts, None, opts.batch)?;
    let backs = translate_all(mt, &opts.pivot, "de", &pivots, opts.mode.tag(), opts.batch)?;
    let outcomes = segments
        .iter()
        .zip(pivots)
        .zip(backs)
        .map(|((seg, pivot), back)| {
            let merge = opts
                .merge
                .then(|| merge_roundtrip(&seg.text, &back, patterns, &opts.merge_cfg));
            let src = merge.as_ref().map_or_else(|| back.clone(), |m| m.merged.clone());
            let trg = match opts.normalize_target {
                Some(kind) => normalize_de(&seg.text, patterns, kind),
                None => seg.text.clone(),
            };
            let mut record = ParallelRecord::new(src, trg, opts.mode.origin());
            record.pivot = Some(pivot.clone());
            if let Some(g) = opts.mode.tag() {
                record = record.with_tag(g.as_str());
            }
            if let Some(m) = &merge {
                record = record.with_tag(if m.matched_all { "merged" } else { "unmerged" });
            }
            RoundTripOutcome {
                record,
                trace: RoundTripTrace {
                    id: seg.id,
                    mode: opts.mode,
                    target: seg.text.clone(),
                    pivot,
                    back_translation: back,
                    merge,
                },
            }
        })
        .collect();
    Ok(outcomes)
}

/// Single-segment convenience over [`build_pseudo_sources`].
pub fn build_pseudo_source(
    seg: &Segment,
    mt: &dyn Translator,
    patterns: &PatternSet,
    opts: &RoundtripOptions,
) -> Result<RoundTripOutcome, RoundtripError> {
    let mut v = build_pseudo_sources(std::slice::from_ref(seg), mt, patterns, opts)?;
    Ok(v.remove(0))
}
