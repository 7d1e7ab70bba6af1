//! Rule-based English rewriting between gendered and gender-fair text.
//!
//! Rewrites are recorded as [`RewriteDecision`]s: byte-span splices over the
//! input. [`apply_decisions`] replays them.

mod verbs;

pub use verbs::VerbTable;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::genderlex::{restore_case, Gender, LexCategory, LexHitKind, Lexicon};
use crate::textcore::{tokenize_spans, Origin, ParallelRecord, TokenizerMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteDecision {
    pub start: usize,
    pub end: usize,
    pub rule_id: String,
    pub before: String,
    pub after: String,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub low_confidence: bool,
}

impl RewriteDecision {
    pub fn span(&self) -> Range<usize> {
        self.start..self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PronounRole {
    Possessive,
    Personal,
}

/// Outcome of looking for the verb that agrees with a subject pronoun.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerbShift {
    Shift { index: usize, after: String },
    /// Found a finite verb that does not mark number.
    Invariant { index: usize },
    NotFound,
}

const VERB_WINDOW: usize = 3;

const ADVERBS: &[&str] = &[
    "always", "never", "often", "sometimes", "usually", "also", "still", "just", "really",
    "already", "even", "only", "rarely", "seldom", "probably", "certainly", "definitely",
    "actually", "simply", "then", "now", "yesterday", "today", "tomorrow", "tonight", "soon",
    "again", "too", "very", "quite", "almost", "hardly", "not", "ever", "finally", "all", "both",
    "once", "here", "there", "later", "recently", "suddenly", "clearly", "mostly", "truly",
    "barely", "nearly", "generally", "occasionally", "frequently", "indeed",
];

const PREPOSITIONS: &[&str] = &[
    "about", "above", "across", "after", "against", "along", "among", "around", "at", "before",
    "behind", "below", "beneath", "beside", "between", "beyond", "by", "despite", "down",
    "during", "except", "for", "from", "in", "inside", "into", "like", "near", "of", "off", "on",
    "onto", "out", "outside", "over", "past", "since", "through", "throughout", "to", "toward",
    "towards", "under", "until", "up", "upon", "with", "within", "without", "as", "than",
];

/// Prepositions that are far more often a verb right after a subject
/// pronoun ("they like", "she likes").
const VERB_HOMOGRAPHS: &[&str] = &["like"];

const CONJUNCTIONS: &[&str] = &[
    "and", "or", "but", "nor", "so", "yet", "because", "if", "when", "while", "although",
    "though", "unless", "whether", "that", "where", "once",
];

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "these", "those", "some", "any", "no", "every", "each", "my",
    "your", "his", "her", "its", "our", "their", "me", "you", "him", "them", "us", "it", "i",
    "he", "she", "they", "we", "who", "whom", "which", "what", "myself", "yourself", "himself",
    "herself", "itself", "themself", "themselves", "one", "another", "such", "much", "many",
];

const COMMON_VERBS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "am", "has", "have", "had", "do", "does",
    "did", "will", "would", "can", "could", "should", "may", "might", "must", "shall", "said",
    "says", "told", "tells", "go", "goes", "went", "know", "knows", "knew", "think", "thinks",
    "see", "sees", "saw", "want", "wants", "get", "gets", "got", "make", "makes", "made",
    "come", "comes", "came", "take", "takes", "took", "give", "gives", "gave", "leave",
    "leaves", "left", "feel", "feels", "felt", "seem", "seems", "seemed", "look", "looks",
];

fn is_word(tok: &str) -> bool {
    tok.chars().any(char::is_alphanumeric)
}

fn in_list(list: &[&str], tok: &str) -> bool {
    list.contains(&tok.to_lowercase().as_str())
}

fn next_content<S: AsRef<str>>(tokens: &[S], i: usize) -> Option<usize> {
    (i + 1..tokens.len()).find(|&j| !in_list(ADVERBS, tokens[j].as_ref()))
}

/// Reads an ambiguous "her"/"his" as possessive when the next non-adverb
/// token looks like a noun.
///
/// ```
/// use fairforge::rewrite_en::{resolve_pronoun_ambiguity, PronounRole};
///
/// let toks = ["I", "saw", "her", "dog", "."];
/// assert_eq!(resolve_pronoun_ambiguity(&toks, 2), PronounRole::Possessive);
/// let toks = ["I", "saw", "her", "yesterday", "."];
/// assert_eq!(resolve_pronoun_ambiguity(&toks, 2), PronounRole::Personal);
/// ```
pub fn resolve_pronoun_ambiguity<S: AsRef<str>>(tokens: &[S], i: usize) -> PronounRole {
    let Some(j) = next_content(tokens, i) else {
        return PronounRole::Personal;
    };
    let t = tokens[j].as_ref();
    let closed = [PREPOSITIONS, CONJUNCTIONS, DETERMINERS, COMMON_VERBS]
        .iter()
        .any(|l| in_list(l, t));
    if !is_word(t) || closed || VerbTable::is_invariant(t) {
        PronounRole::Personal
    } else {
        PronounRole::Possessive
    }
}

/// Finds the first finite verb after the subject at `i`, within a window of
/// three tokens, skipping adverbs.
pub fn find_verb_shift<S: AsRef<str>>(
    tokens: &[S],
    i: usize,
    direction: Direction,
    verbs: &VerbTable,
) -> VerbShift {
    let end = tokens.len().min(i + 1 + VERB_WINDOW);
    for j in i + 1..end {
        let t = tokens[j].as_ref();
        if in_list(ADVERBS, t) {
            continue;
        }
        let shifted = match direction {
            Direction::Forward => verbs.pluralize(t),
            Direction::Backward => verbs.singularize(t),
        };
        // Irregulars are checked first: "was" is past tense but marks number.
        let irregular = shifted.is_some()
            && verbs
                .irregular()
                .any(|(s, p)| t.eq_ignore_ascii_case(s) || t.eq_ignore_ascii_case(p));
        if irregular {
            return VerbShift::Shift {
                index: j,
                after: shifted.expect("checked"),
            };
        }
        if VerbTable::is_invariant(t) {
            return VerbShift::Invariant { index: j };
        }
        let closed = [PREPOSITIONS, CONJUNCTIONS, DETERMINERS]
            .iter()
            .any(|l| in_list(l, t))
            && !in_list(VERB_HOMOGRAPHS, t);
        if !is_word(t) || closed {
            return VerbShift::NotFound;
        }
        return match shifted {
            Some(after) => VerbShift::Shift { index: j, after },
            None => VerbShift::NotFound,
        };
    }
    VerbShift::NotFound
}

/// Token-level verb agreement: returns the adjusted tokens and what happened.
///
/// ```
/// use fairforge::rewrite_en::{adjust_verb_number, Direction, VerbTable};
///
/// let (toks, _) = adjust_verb_number(&["they", "is", "happy"], 0, Direction::Forward, &VerbTable::default());
/// assert_eq!(toks, ["they", "are", "happy"]);
/// ```
pub fn adjust_verb_number<S: AsRef<str>>(
    tokens: &[S],
    pronoun_index: usize,
    direction: Direction,
    verbs: &VerbTable,
) -> (Vec<String>, VerbShift) {
    let mut out: Vec<String> = tokens.iter().map(|t| t.as_ref().to_string()).collect();
    let shift = find_verb_shift(tokens, pronoun_index, direction, verbs);
    if let VerbShift::Shift { index, after } = &shift {
        out[*index] = after.clone();
    }
    (out, shift)
}

/// Splices decisions into `input`, left to right.
pub fn apply_decisions(input: &str, decisions: &[RewriteDecision]) -> String {
    let mut sorted: Vec<&RewriteDecision> = decisions.iter().collect();
    sorted.sort_by_key(|d| d.start);
    let mut out = String::with_capacity(input.len());
    let mut at = 0;
    for d in sorted {
        debug_assert!(d.start >= at, "overlapping decisions");
        out.push_str(&input[at..d.start]);
        out.push_str(&d.after);
        at = d.end;
    }
    out.push_str(&input[at..]);
    out
}

/// Splits "she's"-style tokens into pronoun, apostrophe and clitic.
fn contraction(tok: &str) -> Option<(&str, &str, &str)> {
    let (pos, apo) = tok.char_indices().find(|&(_, c)| c == '\'' || c == '’')?;
    let (head, rest) = tok.split_at(pos);
    let clitic = &rest[apo.len_utf8()..];
    let head_lc = head.to_lowercase();
    let clitic_lc = clitic.to_lowercase();
    let pron = ["she", "he", "they"].contains(&head_lc.as_str());
    let cl = ["s", "ll", "d", "re", "ve"].contains(&clitic_lc.as_str());
    (pron && cl).then(|| (head, &rest[..apo.len_utf8()], clitic))
}

struct Ctx<'a> {
    text: &'a str,
    spans: Vec<Range<usize>>,
    words: Vec<&'a str>,
    covered: Vec<bool>,
}

impl<'a> Ctx<'a> {
    fn new(text: &'a str, lex: &Lexicon) -> (Self, Vec<crate::genderlex::LexHit>) {
        let toks = tokenize_spans(text, TokenizerMode::MarkerPreserving);
        let spans: Vec<Range<usize>> = toks.iter().map(|t| t.span.clone()).collect();
        let words: Vec<&str> = toks.iter().map(|t| t.text).collect();
        let hits = lex.scan(&words);
        let mut covered = vec![false; words.len()];
        for h in &hits {
            covered[h.start..h.end].iter_mut().for_each(|c| *c = true);
        }
        (
            Ctx {
                text,
                spans,
                words,
                covered,
            },
            hits,
        )
    }

    fn span(&self, start: usize, end: usize) -> Range<usize> {
        self.spans[start].start..self.spans[end - 1].end
    }

    fn decision(
        &self,
        range: Range<usize>,
        rule_id: &str,
        after: String,
        direction: Direction,
        gender: Option<Gender>,
    ) -> RewriteDecision {
        RewriteDecision {
            start: range.start,
            end: range.end,
            rule_id: rule_id.to_string(),
            before: self.text[range].to_string(),
            after,
            direction,
            gender,
            low_confidence: false,
        }
    }

    /// Verb agreement after the subject at token `i`. Returns the verb
    /// decision, or `None` with `low` set when no verb was found.
    fn verb(&self, i: usize, direction: Direction, gender: Option<Gender>, verbs: &VerbTable) -> (Option<RewriteDecision>, bool) {
        match find_verb_shift(&self.words, i, direction, verbs) {
            VerbShift::Shift { index, after } if !self.covered[index] => {
                let rule = if verbs.irregular().any(|(s, p)| {
                    self.words[index].eq_ignore_ascii_case(s) || self.words[index].eq_ignore_ascii_case(p)
                }) {
                    "verb.irregular"
                } else {
                    "verb.regular"
                };
                (Some(self.decision(self.span(index, index + 1), rule, after, direction, gender)), false)
            }
            VerbShift::Invariant { .. } => (None, false),
            _ => (None, true),
        }
    }
}

fn category_rule(c: LexCategory) -> &'static str {
    match c {
        LexCategory::Pronoun => "lex.pronoun",
        LexCategory::JobTitle => "lex.job_title",
        LexCategory::GenericMan => "lex.generic_man",
        LexCategory::FeminineForm => "lex.feminine_form",
    }
}

/// Replaces gendered surfaces with their fair forms.
///
/// ```
/// use fairforge::genderlex::Lexicon;
/// use fairforge::rewrite_en::{forward_rewrite, VerbTable};
///
/// let (out, _) = forward_rewrite("she knows", &Lexicon::builtin(), &VerbTable::default());
/// assert_eq!(out, "they know");
/// ```
pub fn forward_rewrite(sentence: &str, lex: &Lexicon, verbs: &VerbTable) -> (String, Vec<RewriteDecision>) {
    let (ctx, hits) = Ctx::new(sentence, lex);
    let mut decisions = Vec::new();
    for hit in &hits {
        let LexHitKind::Gendered(cands) = &hit.kind else {
            continue;
        };
        let range = ctx.span(hit.start, hit.end);
        let before = &sentence[range.clone()];
        let (entry_idx, rule) = if cands.len() > 1 {
            let role = resolve_pronoun_ambiguity(&ctx.words, hit.start);
            let want_their = role == PronounRole::Possessive;
            let pick = cands
                .iter()
                .map(|&(i, _)| i)
                .find(|&i| (lex.entry(i).fair_form == "their") == want_their)
                .unwrap_or(cands[0].0);
            let rule = match role {
                PronounRole::Possessive => "pronoun.possessive",
                PronounRole::Personal => "pronoun.personal",
            };
            (pick, rule)
        } else {
            let i = cands[0].0;
            (i, category_rule(lex.entry(i).category))
        };
        let after = restore_case(before, &lex.entry(entry_idx).fair_form);
        let mut d = ctx.decision(range, rule, after, Direction::Forward, None);
        if ["she", "he"].contains(&before.to_lowercase().as_str()) {
            let (verb, low) = ctx.verb(hit.start, Direction::Forward, None, verbs);
            d.low_confidence = low;
            decisions.push(d);
            decisions.extend(verb);
        } else {
            decisions.push(d);
        }
    }
    for (i, w) in ctx.words.iter().enumerate() {
        if ctx.covered[i] {
            continue;
        }
        if let Some((head, apo, clitic)) = contraction(w) {
            if head.eq_ignore_ascii_case("they") {
                continue;
            }
            let clitic_out = if clitic.eq_ignore_ascii_case("s") {
                restore_case(clitic, "re")
            } else {
                clitic.to_string()
            };
            let after = format!("{}{apo}{clitic_out}", restore_case(head, "they"));
            decisions.push(ctx.decision(ctx.span(i, i + 1), "contraction", after, Direction::Forward, None));
        }
    }
    decisions.sort_by_key(|d| d.start);
    (apply_decisions(sentence, &decisions), decisions)
}

/// Replaces fair forms with the chosen gender's surface where the lexicon
/// has one.
///
/// ```
/// use fairforge::genderlex::{Gender, Lexicon};
/// use fairforge::rewrite_en::{backward_rewrite, VerbTable};
///
/// let (out, _) = backward_rewrite("they know", Gender::F, &Lexicon::builtin(), &VerbTable::default());
/// assert_eq!(out, "she knows");
/// ```
pub fn backward_rewrite(
    sentence: &str,
    gender: Gender,
    lex: &Lexicon,
    verbs: &VerbTable,
) -> (String, Vec<RewriteDecision>) {
    let (ctx, hits) = Ctx::new(sentence, lex);
    let mut decisions = Vec::new();
    let g = Some(gender);
    for hit in &hits {
        let LexHitKind::Fair(entries) = &hit.kind else {
            continue;
        };
        let Some((entry, form)) = entries
            .iter()
            .map(|&i| lex.entry(i))
            .find_map(|e| e.form(gender).map(|f| (e, f)))
        else {
            continue;
        };
        let range = ctx.span(hit.start, hit.end);
        let before = &sentence[range.clone()];
        let after = restore_case(before, &form.surface);
        let mut d = ctx.decision(range, category_rule(entry.category), after, Direction::Backward, g);
        if before.eq_ignore_ascii_case("they") {
            let (verb, low) = ctx.verb(hit.start, Direction::Backward, g, verbs);
            d.low_confidence = low;
            decisions.push(d);
            decisions.extend(verb);
        } else {
            decisions.push(d);
        }
    }
    let pronoun = match gender {
        Gender::F => "she",
        Gender::M => "he",
    };
    for (i, w) in ctx.words.iter().enumerate() {
        if ctx.covered[i] {
            continue;
        }
        if let Some((head, apo, clitic)) = contraction(w) {
            if !head.eq_ignore_ascii_case("they") {
                continue;
            }
            let clitic_out = if clitic.eq_ignore_ascii_case("re") || clitic.eq_ignore_ascii_case("ve") {
                restore_case(clitic, "s")
            } else {
                clitic.to_string()
            };
            let after = format!("{}{apo}{clitic_out}", restore_case(head, pronoun));
            decisions.push(ctx.decision(ctx.span(i, i + 1), "contraction", after, Direction::Backward, g));
        }
    }
    decisions.sort_by_key(|d| d.start);
    (apply_decisions(sentence, &decisions), decisions)
}

/// Training pairs for one gender-fair sentence: a masculine-only and a
/// feminine-only pseudo source (when they differ from the target) plus an
/// identity copy. Pairs with an unresolved verb carry a `low_confidence` tag.
pub fn backward_records(target: &str, lex: &Lexicon, verbs: &VerbTable) -> Vec<ParallelRecord> {
    let mut out = Vec::with_capacity(3);
    for gender in [Gender::M, Gender::F] {
        let (src, decisions) = backward_rewrite(target, gender, lex, verbs);
        if src == target {
            continue;
        }
        let mut rec = ParallelRecord::new(src, target, Origin::BackwardRule).with_tag(gender.as_str());
        if decisions.iter().any(|d| d.low_confidence) {
            rec = rec.with_tag("low_confidence");
        }
        out.push(rec);
    }
    out.push(ParallelRecord::new(target, target, Origin::Copy));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fwd(s: &str) -> String {
        forward_rewrite(s, &Lexicon::builtin(), &VerbTable::default()).0
    }

    fn bwd(s: &str, g: Gender) -> String {
        backward_rewrite(s, g, &Lexicon::builtin(), &VerbTable::default()).0
    }

    #[test]
    fn forward_examples() {
        assert_eq!(fwd("she knows"), "they know");
        assert_eq!(fwd("The chairwoman spoke."), "The chairperson spoke.");
        assert_eq!(fwd("He hurt himself."), "They hurt themself.");
        assert_eq!(fwd("She is happy."), "They are happy.");
        assert_eq!(fwd("She ran home."), "They ran home.");
        assert_eq!(fwd("I saw her yesterday."), "I saw them yesterday.");
        assert_eq!(fwd("I saw her dog."), "I saw their dog.");
        assert_eq!(fwd("I saw her"), "I saw them");
        assert_eq!(fwd("The book is his."), "The book is theirs.");
        assert_eq!(fwd("He always watches TV."), "They always watch TV.");
        assert_eq!(fwd("She's late."), "They're late.");
        assert_eq!(fwd("The best man for the job is here."), "The best person for the job is here.");
    }

    #[test]
    fn backward_examples() {
        assert_eq!(bwd("they know", Gender::F), "she knows");
        assert_eq!(bwd("their book", Gender::M), "his book");
        assert_eq!(bwd("The flight attendants arrived.", Gender::F), "The stewardesses arrived.");
        assert_eq!(bwd("Humankind is old.", Gender::M), "Mankind is old.");
        assert_eq!(bwd("Humankind is old.", Gender::F), "Humankind is old.");
        assert_eq!(bwd("The actor smiled.", Gender::F), "The actress smiled.");
        assert_eq!(bwd("The actor smiled.", Gender::M), "The actor smiled.");
        assert_eq!(bwd("They're late.", Gender::M), "He's late.");
        assert_eq!(bwd("They said they like it.", Gender::M), "He said he likes it.");
        assert_eq!(bwd("I walk like them.", Gender::F), "I walk like her.");
    }

    #[test]
    fn missing_verb_is_flagged() {
        let (_, ds) = forward_rewrite("she, of course, left", &Lexicon::builtin(), &VerbTable::default());
        assert!(ds[0].low_confidence);
        let (_, ds) = forward_rewrite("she can swim", &Lexicon::builtin(), &VerbTable::default());
        assert!(!ds[0].low_confidence);
    }

    #[test]
    fn records_have_three_variants() {
        let recs = backward_records("They thanked their spokesperson.", &Lexicon::builtin(), &VerbTable::default());
        let srcs: Vec<&str> = recs.iter().map(|r| r.src.as_str()).collect();
        assert_eq!(
            srcs,
            [
                "He thanked his spokesman.",
                "She thanked her spokeswoman.",
                "They thanked their spokesperson."
            ]
        );
        assert_eq!(recs[2].origin, Origin::Copy);
    }
}
