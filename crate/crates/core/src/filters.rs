//! Corpus quality filters and exact deduplication.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textcore::{normalize_key, Segment};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("{origin}:{line}: {msg}")]
    Config {
        origin: String,
        line: usize,
        msg: String,
    },
    #[error("invalid filter config: {0}")]
    Invalid(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("language {0:?} not supported by scorer")]
    Unsupported(String),
    #[error("scorer failed: {0}")]
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_words: usize,
    pub max_words: usize,
    pub max_word_len: usize,
    pub min_alpha_ratio: f64,
    pub lang_id_threshold: f64,
    pub expected_lang: String,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_words: 1,
            max_words: 150,
            max_word_len: 40,
            min_alpha_ratio: 0.5,
            lang_id_threshold: 0.0,
            expected_lang: "de".to_string(),
        }
    }
}

impl FilterConfig {
    pub fn for_lang(lang: &str) -> Self {
        FilterConfig {
            expected_lang: lang.to_string(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        if self.min_words > self.max_words {
            return Err(FilterError::Invalid(format!(
                "min_words {} > max_words {}",
                self.min_words, self.max_words
            )));
        }
        if !(0.0..=1.0).contains(&self.min_alpha_ratio) {
            return Err(FilterError::Invalid(format!(
                "min_alpha_ratio {} outside [0, 1]",
                self.min_alpha_ratio
            )));
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of the defaults. `#` starts a comment.
    pub fn parse(text: &str, origin: &str) -> Result<Self, FilterError> {
        let mut cfg = FilterConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| FilterError::Config {
                origin: origin.to_string(),
                line: i + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("{key}: bad number {v:?}")));
            let int = |v: &str| v.parse::<usize>().map_err(|_| err(format!("{key}: bad integer {v:?}")));
            match key {
                "min_words" => cfg.min_words = int(value)?,
                "max_words" => cfg.max_words = int(value)?,
                "max_word_len" => cfg.max_word_len = int(value)?,
                "min_alpha_ratio" => cfg.min_alpha_ratio = num(value)?,
                "lang_id_threshold" => cfg.lang_id_threshold = num(value)?,
                "expected_lang" => cfg.expected_lang = value.to_string(),
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, FilterError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }
}

pub fn length_filter(seg: &Segment, cfg: &FilterConfig) -> bool {
    let n = seg.text.split_whitespace().count();
    (cfg.min_words..=cfg.max_words).contains(&n)
}

pub fn long_word_filter(seg: &Segment, cfg: &FilterConfig) -> bool {
    seg.text
        .split_whitespace()
        .all(|w| w.chars().count() <= cfg.max_word_len)
}

pub fn alphabet_ratio_filter(seg: &Segment, cfg: &FilterConfig) -> bool {
    let (mut alpha, mut total) = (0usize, 0usize);
    for c in seg.text.chars().filter(|c| !c.is_whitespace()) {
        total += 1;
        if c.is_alphabetic() {
            alpha += 1;
        }
    }
    total > 0 && alpha as f64 / total as f64 >= cfg.min_alpha_ratio
}

/// Per-language confidence for a text.
pub trait LangScorer: Send + Sync {
    fn supports(&self, lang: &str) -> bool;
    /// Labels with confidences, best first.
    fn score(&self, text: &str) -> Result<Vec<(String, f64)>, ScorerError>;
}

pub fn language_id_filter(seg: &Segment, scorer: &dyn LangScorer, cfg: &FilterConfig) -> bool {
    match scorer.score(&seg.text) {
        Ok(scores) => {
            let top = scores.first().map(|(l, _)| l.as_str());
            let conf = scores
                .iter()
                .find(|(l, _)| *l == cfg.expected_lang)
                .map_or(0.0, |&(_, c)| c);
            top == Some(cfg.expected_lang.as_str()) && conf > cfg.lang_id_threshold
        }
        Err(e) => {
            log::warn!("segment {}: language id failed, rejecting: {e}", seg.id);
            false
        }
    }
}

const SEEDS: &[(&str, &str)] = &[
    ("de", include_str!("../data/langid/de.txt")),
    ("en", include_str!("../data/langid/en.txt")),
    ("fr", include_str!("../data/langid/fr.txt")),
];

/// Label returned when no language covers enough of the text.
pub const UNDETERMINED: &str = "und";

/// Character-trigram language model with add-one smoothing.
///
/// Confidence is the posterior (uniform prior) times the fraction of the
/// text's trigrams seen in that language's seed text.
#[derive(Debug, Clone)]
pub struct TrigramScorer {
    models: Vec<(String, HashMap<String, u32>, u32)>,
    vocab: usize,
    min_coverage: f64,
}

impl Default for TrigramScorer {
    fn default() -> Self {
        TrigramScorer::bundled()
    }
}

fn trigrams(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty()) {
        let padded: Vec<char> = format!(" {} ", word.to_lowercase()).chars().collect();
        for w in padded.windows(3) {
            out.push(w.iter().collect());
        }
    }
    out
}

impl TrigramScorer {
    pub fn bundled() -> Self {
        Self::train(SEEDS.iter().map(|&(l, t)| (l, t)))
    }

    pub fn train<'a>(seeds: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut models = Vec::new();
        let mut all = HashSet::new();
        for (lang, text) in seeds {
            let mut counts: HashMap<String, u32> = HashMap::new();
            let mut total = 0;
            for g in trigrams(text) {
                all.insert(g.clone());
                *counts.entry(g).or_default() += 1;
                total += 1;
            }
            models.push((lang.to_string(), counts, total));
        }
        TrigramScorer {
            models,
            vocab: all.len() + 1,
            min_coverage: 0.25,
        }
    }
}

impl LangScorer for TrigramScorer {
    fn supports(&self, lang: &str) -> bool {
        self.models.iter().any(|(l, _, _)| l == lang)
    }

    fn score(&self, text: &str) -> Result<Vec<(String, f64)>, ScorerError> {
        let grams = trigrams(text);
        if grams.is_empty() {
            return Ok(vec![(UNDETERMINED.to_string(), 0.0)]);
        }
        let mut stats: Vec<(String, f64, f64)> = self
            .models
            .iter()
            .map(|(lang, counts, total)| {
                let denom = (*total as f64 + self.vocab as f64).ln();
                let mut loglik = 0.0;
                let mut seen = 0usize;
                for g in &grams {
                    let c = counts.get(g).copied().unwrap_or(0);
                    if c > 0 {
                        seen += 1;
                    }
                    loglik += (c as f64 + 1.0).ln() - denom;
                }
                (lang.clone(), loglik, seen as f64 / grams.len() as f64)
            })
            .collect();
        let max_ll = stats.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = stats.iter().map(|s| (s.1 - max_ll).exp()).sum();
        let max_cov = stats.iter().map(|s| s.2).fold(0.0, f64::max);
        let mut scores: Vec<(String, f64)> = stats
            .drain(..)
            .map(|(l, ll, cov)| (l, (ll - max_ll).exp() / z * cov))
            .collect();
        scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if max_cov < self.min_coverage {
            scores.insert(0, (UNDETERMINED.to_string(), 1.0 - max_cov));
        }
        Ok(scores)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    Length,
    LongWord,
    AlphabetRatio,
    LanguageId,
    Duplicate,
}

/// The first failing filter, or `None` if the segment passes all of them.
pub fn check(seg: &Segment, cfg: &FilterConfig, scorer: &dyn LangScorer) -> Option<Rejection> {
    if !length_filter(seg, cfg) {
        Some(Rejection::Length)
    } else if !long_word_filter(seg, cfg) {
        Some(Rejection::LongWord)
    } else if !alphabet_ratio_filter(seg, cfg) {
        Some(Rejection::AlphabetRatio)
    } else if !language_id_filter(seg, scorer, cfg) {
        Some(Rejection::LanguageId)
    } else {
        None
    }
}

pub fn accept(seg: &Segment, cfg: &FilterConfig, scorer: &dyn LangScorer) -> bool {
    check(seg, cfg, scorer).is_none()
}

/// Keeps the first segment per normalized key, in input order.
pub fn dedup(segments: impl IntoIterator<Item = Segment>) -> impl Iterator<Item = Segment> {
    let mut seen = HashSet::new();
    segments
        .into_iter()
        .filter(move |s| seen.insert(normalize_key(&s.text)))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub input: usize,
    pub kept: usize,
    pub rejected: BTreeMap<Rejection, usize>,
}

/// Runs the filter chain in parallel, then deduplicates in order.
pub fn filter_corpus(
    segments: Vec<Segment>,
    cfg: &FilterConfig,
    scorer: &dyn LangScorer,
) -> (Vec<Segment>, FilterStats) {
    let verdicts: Vec<Option<Rejection>> = segments.par_iter().map(|s| check(s, cfg, scorer)).collect();
    let mut stats = FilterStats {
        input: segments.len(),
        ..Default::default()
    };
    let mut passed = Vec::new();
    for (seg, v) in segments.into_iter().zip(verdicts) {
        match v {
            Some(r) => *stats.rejected.entry(r).or_default() += 1,
            None => passed.push(seg),
        }
    }
    let before = passed.len();
    let kept: Vec<Segment> = dedup(passed).collect();
    if before > kept.len() {
        stats.rejected.insert(Rejection::Duplicate, before - kept.len());
    }
    stats.kept = kept.len();
    (kept, stats)
}
