//! Tokenized WER, per-category breakdown and paired bootstrap significance.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textcore::{tokenize, TokenizerMode};

pub const CATEGORIES: [&str; 6] = ["feminine", "masculine", "plural", "singular", "gendered", "non-gendered"];

/// Significance level for "A is better than B".
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("hypothesis and reference counts differ: {hyp} vs {reference}")]
    Misaligned { hyp: usize, reference: usize },
    #[error("systems are not aligned: {0}")]
    IdMismatch(String),
    #[error("duplicate item id {0}")]
    DuplicateId(String),
    #[error("no systems to compare")]
    NoSystems,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edits {
    pub s: usize,
    pub d: usize,
    pub i: usize,
}

impl Edits {
    pub fn total(self) -> usize {
        self.s + self.d + self.i
    }
}

impl std::ops::AddAssign for Edits {
    fn add_assign(&mut self, o: Edits) {
        self.s += o.s;
        self.d += o.d;
        self.i += o.i;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WerResult {
    pub rate: f64,
    pub edits: Edits,
    pub ref_len: usize,
    /// Empty reference with a non-empty hypothesis: the rate divides by 1.
    pub empty_ref: bool,
}

fn rate(edits: usize, ref_len: usize) -> f64 {
    edits as f64 / ref_len.max(1) as f64
}

/// Minimal unit-cost edit alignment of `hyp` against `reference`.
///
/// Among minimal alignments the backtrace prefers a diagonal step, then a
/// deletion, then an insertion, so the S/D/I split is deterministic.
///
/// ```
/// use fairforge::eval::wer;
///
/// let r = wer(&["der", "Lehrer", "kommt"], &["der*die", "Lehrer*in", "kommt"]);
/// assert!((r.rate - 2.0 / 3.0).abs() < 1e-12);
/// assert_eq!(wer(&["a"], &["a", "b", "c"]).edits.d, 2);
/// ```
pub fn wer<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> WerResult {
    let (n, m) = (reference.len(), hyp.len());
    let w = m + 1;
    let mut dp = vec![0usize; (n + 1) * w];
    for j in 0..=m {
        dp[j] = j;
    }
    for i in 1..=n {
        dp[i * w] = i;
        for j in 1..=m {
            let sub = dp[(i - 1) * w + j - 1] + usize::from(reference[i - 1].as_ref() != hyp[j - 1].as_ref());
            let del = dp[(i - 1) * w + j] + 1;
            let ins = dp[i * w + j - 1] + 1;
            dp[i * w + j] = sub.min(del).min(ins);
        }
    }
    let mut edits = Edits::default();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dp[i * w + j];
        if i > 0 && j > 0 {
            let same = reference[i - 1].as_ref() == hyp[j - 1].as_ref();
            if dp[(i - 1) * w + j - 1] + usize::from(!same) == here {
                edits.s += usize::from(!same);
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dp[(i - 1) * w + j] + 1 == here {
            edits.d += 1;
            i -= 1;
        } else {
            edits.i += 1;
            j -= 1;
        }
    }
    WerResult {
        rate: rate(edits.total(), n),
        edits,
        ref_len: n,
        empty_ref: n == 0 && m > 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalItem {
    pub id: String,
    pub hyp: String,
    #[serde(rename = "ref")]
    pub reference: String,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalSet {
    pub items: Vec<EvalItem>,
}

impl EvalSet {
    /// Items numbered from 1 in line order. `tags` may be empty or must
    /// align with the texts.
    pub fn from_texts<S: AsRef<str>>(hyps: &[S], refs: &[S], tags: &[Vec<String>]) -> Result<Self, EvalError> {
        if hyps.len() != refs.len() || (!tags.is_empty() && tags.len() != refs.len()) {
            return Err(EvalError::Misaligned {
                hyp: hyps.len(),
                reference: refs.len(),
            });
        }
        let items = hyps
            .iter()
            .zip(refs)
            .enumerate()
            .map(|(k, (h, r))| EvalItem {
                id: (k + 1).to_string(),
                hyp: h.as_ref().to_string(),
                reference: r.as_ref().to_string(),
                tags: tags.get(k).cloned().unwrap_or_default(),
            })
            .collect();
        Ok(EvalSet { items })
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let mut seen = HashSet::new();
        for it in &self.items {
            if !seen.insert(it.id.as_str()) {
                return Err(EvalError::DuplicateId(it.id.clone()));
            }
        }
        Ok(())
    }

    /// Per-item edit counts under `mode`, in item order.
    pub fn item_scores(&self, mode: TokenizerMode) -> Vec<WerResult> {
        self.items
            .par_iter()
            .map(|it| wer(&tokenize(&it.hyp, mode).0, &tokenize(&it.reference, mode).0))
            .collect()
    }
}

/// Parses one tag line: comma- or whitespace-separated names.
pub fn parse_tags(line: &str) -> Vec<String> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub wer: f64,
    pub edits: Edits,
    pub n_ref_tokens: usize,
    pub items: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub corpus_wer: f64,
    pub per_category: BTreeMap<String, CategoryScore>,
    pub edits: Edits,
    pub n_ref_tokens: usize,
    pub items: usize,
    pub empty_refs: usize,
    pub tokenizer: String,
}

fn micro(scores: impl Iterator<Item = WerResult>) -> CategoryScore {
    let mut c = CategoryScore::default();
    for s in scores {
        c.edits += s.edits;
        c.n_ref_tokens += s.ref_len;
        c.items += 1;
    }
    c.wer = rate(c.edits.total(), c.n_ref_tokens);
    c
}

/// Micro-averaged WER, overall and per known tag. Unknown tags are ignored
/// with a warning.
///
/// ```
/// use fairforge::eval::{corpus_wer, EvalSet};
/// use fairforge::textcore::TokenizerMode;
///
/// let set = EvalSet::from_texts(&["a x", "a b c d"], &["a b", "a b c e"], &[]).unwrap();
/// let r = corpus_wer(&set, TokenizerMode::default());
/// assert!((r.corpus_wer - 2.0 / 6.0).abs() < 1e-12);
/// ```
pub fn corpus_wer(set: &EvalSet, mode: TokenizerMode) -> EvalReport {
    let scores = set.item_scores(mode);
    let all = micro(scores.iter().copied());
    let mut unknown = BTreeSet::new();
    let mut per_category = BTreeMap::new();
    for it in &set.items {
        for t in &it.tags {
            if !CATEGORIES.contains(&t.as_str()) {
                unknown.insert(t.clone());
            }
        }
    }
    for u in &unknown {
        log::warn!("unknown category tag {u:?} ignored");
    }
    for cat in CATEGORIES {
        let subset: Vec<WerResult> = set
            .items
            .iter()
            .zip(&scores)
            .filter(|(it, _)| it.tags.iter().any(|t| t == cat))
            .map(|(_, s)| *s)
            .collect();
        if !subset.is_empty() {
            per_category.insert(cat.to_string(), micro(subset.into_iter()));
        }
    }
    EvalReport {
        corpus_wer: all.wer,
        per_category,
        edits: all.edits,
        n_ref_tokens: all.n_ref_tokens,
        items: all.items,
        empty_refs: scores.iter().filter(|s| s.empty_ref).count(),
        tokenizer: match mode {
            TokenizerMode::MarkerPreserving => "marker-preserving",
            TokenizerMode::Aggressive => "aggressive",
        }
        .to_string(),
    }
}

fn check_ids(a: &EvalSet, b: &EvalSet) -> Result<(), EvalError> {
    let mismatches: Vec<String> = a
        .items
        .iter()
        .map(|i| i.id.as_str())
        .zip(b.items.iter().map(|i| i.id.as_str()))
        .enumerate()
        .filter(|(_, (x, y))| x != y)
        .take(5)
        .map(|(k, (x, y))| format!("#{k}: {x} vs {y}"))
        .collect();
    if a.items.len() != b.items.len() || !mismatches.is_empty() {
        return Err(EvalError::IdMismatch(format!(
            "{} vs {} items; {}",
            a.items.len(),
            b.items.len(),
            mismatches.join(", ")
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Fraction of resamples where A is not better than B (ties included).
    pub p_value: f64,
    pub tie_fraction: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl BootstrapResult {
    pub fn a_significantly_better(&self) -> bool {
        self.p_value < ALPHA
    }
}

/// Paired bootstrap over per-item edit counts. Resample `r` draws from its
/// own ChaCha stream, so the result does not depend on thread count.
pub fn paired_bootstrap_scores(a: &[WerResult], b: &[WerResult], n: usize, seed: u64) -> BootstrapResult {
    let len = a.len();
    let outcomes: Vec<(bool, bool)> = (0..n)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let (mut ea, mut eb, mut refs) = (0usize, 0usize, 0usize);
            for _ in 0..len {
                let k = rng.random_range(0..len);
                ea += a[k].edits.total();
                eb += b[k].edits.total();
                refs += a[k].ref_len;
            }
            let (wa, wb) = (rate(ea, refs), rate(eb, refs));
            (wa >= wb, wa == wb)
        })
        .collect();
    let denom = n.max(1) as f64;
    BootstrapResult {
        p_value: outcomes.iter().filter(|o| o.0).count() as f64 / denom,
        tie_fraction: outcomes.iter().filter(|o| o.1).count() as f64 / denom,
        n_samples: n,
        seed,
    }
}

pub fn paired_bootstrap(
    a: &EvalSet,
    b: &EvalSet,
    n: usize,
    seed: u64,
    mode: TokenizerMode,
) -> Result<BootstrapResult, EvalError> {
    check_ids(a, b)?;
    Ok(paired_bootstrap_scores(&a.item_scores(mode), &b.item_scores(mode), n, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigMatrix {
    pub systems: Vec<String>,
    pub wer: Vec<f64>,
    /// `p[i][j]`: p-value for "system i better than system j"; None on the
    /// diagonal.
    pub p: Vec<Vec<Option<f64>>>,
    pub n_samples: usize,
    pub seed: u64,
    pub best: Vec<String>,
}

/// Systems that no other system beats significantly.
pub fn mark_best(
    systems: &[(String, EvalSet)],
    n: usize,
    seed: u64,
    mode: TokenizerMode,
) -> Result<SigMatrix, EvalError> {
    let Some((_, first)) = systems.first() else {
        return Err(EvalError::NoSystems);
    };
    for (_, s) in systems {
        check_ids(first, s)?;
    }
    let scores: Vec<Vec<WerResult>> = systems.iter().map(|(_, s)| s.item_scores(mode)).collect();
    let k = systems.len();
    let mut p = vec![vec![None; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                p[i][j] = Some(paired_bootstrap_scores(&scores[i], &scores[j], n, seed).p_value);
            }
        }
    }
    let best = (0..k)
        .filter(|&j| !(0..k).any(|i| p[i][j].is_some_and(|v| v < ALPHA)))
        .map(|j| systems[j].0.clone())
        .collect();
    Ok(SigMatrix {
        systems: systems.iter().map(|(n, _)| n.clone()).collect(),
        wer: scores.iter().map(|s| micro(s.iter().copied()).wer).collect(),
        p,
        n_samples: n,
        seed,
        best,
    })
}
