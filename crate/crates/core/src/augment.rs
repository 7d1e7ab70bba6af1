//! Auxiliary data: gender-tagged splits of pair forms, and LM-prompted
//! singular gender-fair sentences.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genderlex::{Gender, Number, PatternSet};
use crate::mtclient::{tag_token, LanguageModel, LmRequest};
use crate::textcore::{normalize_key, Origin, ParallelRecord, Segment, TextError};

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error("target has no pair form")]
    NoPairForms,
    #[error("pair forms disagree: {0}")]
    Inconsistent(String),
    #[error("empty seed list")]
    NoSeeds,
}

/// A coordinated feminine + masculine noun pair in a German target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairFormHit {
    /// Character offsets.
    pub start: usize,
    pub end: usize,
    pub byte_start: usize,
    pub byte_end: usize,
    pub stem: String,
    pub feminine_surface: String,
    pub masculine_surface: String,
    pub number: Number,
    pub first_gender: Gender,
}

impl PairFormHit {
    pub fn surface(&self, g: Gender) -> &str {
        match g {
            Gender::F => &self.feminine_surface,
            Gender::M => &self.masculine_surface,
        }
    }

    /// Whether a `g`-tagged variant may collapse this pair.
    ///
    /// Plural pairs share inflection across genders, so either surface fits
    /// the surrounding sentence. Singular pairs only fit for the gender that
    /// comes first, which is the one adjacent to the article.
    pub fn allows(&self, g: Gender) -> bool {
        self.number == Number::Pl || self.first_gender == g
    }
}

/// Pair forms in `trg_de`, in text order.
///
/// ```
/// use fairforge::augment::find_pair_forms;
/// use fairforge::genderlex::{Gender, PatternSet};
///
/// let hits = find_pair_forms("Studenten und Studentinnen", &PatternSet::builtin());
/// assert_eq!(hits.len(), 1);
/// assert_eq!(hits[0].first_gender, Gender::M);
/// ```
pub fn find_pair_forms(trg_de: &str, patterns: &PatternSet) -> Vec<PairFormHit> {
    patterns
        .find_matches(trg_de)
        .into_iter()
        .filter_map(|m| {
            Some(PairFormHit {
                first_gender: m.first_gender?,
                start: m.start,
                end: m.end,
                byte_start: m.byte_start,
                byte_end: m.byte_end,
                stem: m.stem,
                feminine_surface: m.feminine,
                masculine_surface: m.masculine,
                number: m.number,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedVariant {
    pub gender: Gender,
    /// Source with the tag token prepended.
    pub src: String,
    pub trg: String,
}

impl TaggedVariant {
    pub fn into_record(self) -> ParallelRecord {
        ParallelRecord::new(self.src, self.trg, Origin::PairTagged).with_tag(self.gender.as_str())
    }
}

/// Splits a pair-form target into gender-tagged variants, feminine first.
///
/// A variant for gender `g` exists only if every hit allows `g`; a target
/// for which no gender works is an error.
pub fn make_tagged_variants(src_en: &str, trg_de: &str, hits: &[PairFormHit]) -> Result<Vec<TaggedVariant>, AugmentError> {
    if hits.is_empty() {
        return Err(AugmentError::NoPairForms);
    }
    let variants: Vec<TaggedVariant> = [Gender::F, Gender::M]
        .into_iter()
        .filter(|&g| hits.iter().all(|h| h.allows(g)))
        .map(|g| {
            let mut trg = String::with_capacity(trg_de.len());
            let mut at = 0;
            for h in hits {
                trg.push_str(&trg_de[at..h.byte_start]);
                trg.push_str(h.surface(g));
                at = h.byte_end;
            }
            trg.push_str(&trg_de[at..]);
            TaggedVariant {
                gender: g,
                src: format!("{} {src_en}", tag_token(g)),
                trg,
            }
        })
        .collect();
    if variants.is_empty() {
        let detail: Vec<String> = hits
            .iter()
            .map(|h| format!("{} ({}, {} first)", h.stem, h.number.as_str(), h.first_gender.as_str()))
            .collect();
        return Err(AugmentError::Inconsistent(detail.join(", ")));
    }
    Ok(variants)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderTagStats {
    pub input: usize,
    pub without_pairs: usize,
    pub inconsistent: usize,
    pub emitted: usize,
}

/// Tagged variants for every record whose target holds pair forms.
/// Records without pair forms pass silently; inconsistent ones are logged.
pub fn gendertag_records(records: &[ParallelRecord], patterns: &PatternSet) -> (Vec<ParallelRecord>, GenderTagStats) {
    let mut stats = GenderTagStats {
        input: records.len(),
        ..Default::default()
    };
    let mut out = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let hits = find_pair_forms(&r.trg, patterns);
        match make_tagged_variants(&r.src, &r.trg, &hits) {
            Ok(vs) => {
                stats.emitted += vs.len();
                out.extend(vs.into_iter().map(TaggedVariant::into_record));
            }
            Err(AugmentError::NoPairForms) => stats.without_pairs += 1,
            Err(e) => {
                log::info!("record {i}: dropped, {e}");
                stats.inconsistent += 1;
            }
        }
    }
    (out, stats)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub noun: String,
    pub prompt: String,
}

/// `Ein*e NOUN*in`.
pub fn build_prompt(noun: &str) -> PromptSpec {
    PromptSpec {
        noun: noun.to_string(),
        prompt: format!("Ein*e {noun}*in"),
    }
}

const ABBREVIATIONS: &[&str] = &[
    "z.B", "z. B", "bzw", "ca", "Dr", "Prof", "Nr", "vgl", "usw", "etc", "Hr", "Fr", "St", "Abs", "ggf", "inkl", "evtl", "d.h",
];

fn ends_with_abbreviation(head: &str) -> bool {
    let head = head.trim_end_matches('.');
    ABBREVIATIONS.iter().any(|a| {
        head.strip_suffix(a)
            .is_some_and(|rest| rest.is_empty() || rest.ends_with(|c: char| !c.is_alphanumeric()))
    })
}

/// Splits after `.`, `!` or `?` when whitespace and an uppercase letter
/// follow, except after a known abbreviation.
///
/// ```
/// use fairforge::augment::split_sentences;
///
/// assert_eq!(
///     split_sentences("Das ist z.B. gut. Neu hier? ja"),
///     ["Das ist z.B. gut.", "Neu hier? ja"]
/// );
/// ```
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in text.char_indices() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let end = i + c.len_utf8();
        let rest = &text[end..];
        let trimmed = rest.trim_start();
        if trimmed.len() == rest.len() || !trimmed.starts_with(char::is_uppercase) {
            continue;
        }
        if c == '.' && ends_with_abbreviation(&text[start..end]) {
            continue;
        }
        let s = text[start..end].trim();
        if !s.is_empty() {
            out.push(s);
        }
        start = end;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct LmAugmentConfig {
    pub max_tokens: usize,
    pub seed: u64,
}

impl Default for LmAugmentConfig {
    fn default() -> Self {
        LmAugmentConfig {
            max_tokens: 80,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LmAugmentStats {
    pub seeds: usize,
    pub failed_seeds: usize,
    pub sentences: usize,
    pub fragments: usize,
    pub rejected: usize,
    pub duplicates: usize,
    pub kept: usize,
}

/// The keep rule for one generated sentence.
pub fn keep_lm_sentence(sentence: &str, prompt: &str, patterns: &PatternSet) -> bool {
    let matches = patterns.find_matches(sentence);
    if !matches.iter().any(|m| m.number == Number::Sg) {
        return false;
    }
    !sentence.starts_with(prompt) || matches.len() > patterns.find_matches(prompt).len()
}

/// Prompts the LM once per seed noun and keeps sentences that carry a
/// singular gender-fair form of their own.
///
/// A trailing piece without final punctuation (cut by `max_tokens`) is not
/// a sentence and is dropped. Repeated sentences are kept once.
pub fn expand_prompts<S: AsRef<str>>(
    seeds: &[S],
    lm: &dyn LanguageModel,
    patterns: &PatternSet,
    cfg: &LmAugmentConfig,
) -> Result<(Vec<Segment>, LmAugmentStats), AugmentError> {
    if seeds.is_empty() {
        return Err(AugmentError::NoSeeds);
    }
    let mut stats = LmAugmentStats {
        seeds: seeds.len(),
        ..Default::default()
    };
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for seed in seeds {
        let spec = build_prompt(seed.as_ref());
        let req = LmRequest {
            prompt: spec.prompt.clone(),
            max_tokens: cfg.max_tokens,
            seed: cfg.seed,
        };
        let text = match lm.generate(&req) {
            Ok(r) => r.text,
            Err(e) => {
                log::warn!("seed {:?}: skipped, {e}", spec.noun);
                stats.failed_seeds += 1;
                continue;
            }
        };
        for s in split_sentences(&text) {
            stats.sentences += 1;
            if !s.ends_with(['.', '!', '?']) {
                stats.fragments += 1;
            } else if !keep_lm_sentence(s, &spec.prompt, patterns) {
                stats.rejected += 1;
            } else if !seen.insert(normalize_key(s)) {
                stats.duplicates += 1;
            } else {
                out.push(Segment::new(out.len() as u64, s, "de").with_label("lm"));
            }
        }
    }
    stats.kept = out.len();
    Ok((out, stats))
}

/// The bundled seed nouns.
pub fn builtin_seeds() -> Vec<String> {
    parse_seeds(include_str!("../data/seeds_de.txt"))
}

pub fn parse_seeds(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub fn load_seeds(path: &Path) -> Result<Vec<String>, TextError> {
    let text = std::fs::read_to_string(path).map_err(|e| TextError::io(path, e))?;
    Ok(parse_seeds(&text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mtclient::{LmResponse, MockLm, MtError};

    #[test]
    fn pair_hits() {
        let set = PatternSet::builtin();
        let hits = find_pair_forms("Schülerinnen und Schüler aus vielen Nationen", &set);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].stem, "Schüler");
        assert_eq!(hits[0].first_gender, Gender::F);
        assert_eq!(hits[0].number, Number::Pl);
        assert_eq!(hits[0].feminine_surface, "Schülerinnen");
        assert!(find_pair_forms("Schüler lernen", &set).is_empty());
        assert!(find_pair_forms("Die Schüler*innen lernen", &set).is_empty());
    }

    #[test]
    fn singular_rule() {
        let set = PatternSet::builtin();
        let trg = "Jede Lehrerin oder Lehrer hilft.";
        let hits = find_pair_forms(trg, &set);
        let vs = make_tagged_variants("A teacher helps.", trg, &hits).unwrap();
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].src, "<f> A teacher helps.");
        assert_eq!(vs[0].trg, "Jede Lehrerin hilft.");

        let trg = "Jeder Lehrer oder Lehrerin hilft.";
        let vs = make_tagged_variants("x", trg, &find_pair_forms(trg, &set)).unwrap();
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].gender, Gender::M);
    }

    #[test]
    fn mixed_and_empty() {
        let set = PatternSet::builtin();
        let trg = "Jede Lehrerin und Lehrer sowie Schülerinnen und Schüler.";
        let vs = make_tagged_variants("x", trg, &find_pair_forms(trg, &set)).unwrap();
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].trg, "Jede Lehrerin sowie Schülerinnen.");

        let trg = "Jede Lehrerin oder Lehrer und jeder Schüler oder Schülerin.";
        assert!(matches!(
            make_tagged_variants("x", trg, &find_pair_forms(trg, &set)),
            Err(AugmentError::Inconsistent(_))
        ));
        assert_eq!(make_tagged_variants("x", "y", &[]), Err(AugmentError::NoPairForms));
    }

    #[test]
    fn prompt_and_filter() {
        let set = PatternSet::builtin();
        let p = build_prompt("Leiter");
        assert_eq!(p.prompt, "Ein*e Leiter*in");
        assert!(!keep_lm_sentence("Ein*e Leiter*in für unser Team.", &p.prompt, &set));
        assert!(keep_lm_sentence("Sie suchen eine*n Köch*in.", &p.prompt, &set));
        assert!(keep_lm_sentence(
            "Ein*e Leiter*in berät jede*n Kund*in persönlich.",
            &p.prompt,
            &set
        ));
        assert!(!keep_lm_sentence("Die Lehrer*innen kommen.", &p.prompt, &set));
    }

    struct Failing;

    impl LanguageModel for Failing {
        fn generate(&self, _: &LmRequest) -> Result<LmResponse, MtError> {
            Err(MtError::Timeout)
        }
    }

    #[test]
    fn expansion_keeps_singular_fair_sentences() {
        let set = PatternSet::builtin();
        let (segs, stats) = expand_prompts(&builtin_seeds(), &MockLm, &set, &LmAugmentConfig::default()).unwrap();
        assert_eq!(stats.seeds, 50);
        assert!(!segs.is_empty());
        for s in &segs {
            assert!(set.find_matches(&s.text).iter().any(|m| m.number == Number::Sg), "{}", s.text);
        }
        let (none, stats) = expand_prompts(&["Leiter"], &Failing, &set, &LmAugmentConfig::default()).unwrap();
        assert!(none.is_empty());
        assert_eq!(stats.failed_seeds, 1);
        assert_eq!(
            expand_prompts::<&str>(&[], &MockLm, &set, &LmAugmentConfig::default()).unwrap_err(),
            AugmentError::NoSeeds
        );
    }
}
