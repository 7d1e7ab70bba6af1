//! German gender-fair pattern library.
//!
//! Every pattern is a regex whose named groups say how to read a hit:
//!
//! * `stem` only: a marked noun (`Student*innen`, `StudentIn`). The feminine
//!   surface is `stem + in/innen`, the masculine surface is the bare stem.
//! * `fem`, `masc` and `stem`: a pair form. The two conjuncts are spelled out.
//! * `left` and `right`: a marked function word (`einem*r`, `der*die`),
//!   validated against a closed list that supplies both surfaces.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use fancy_regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    Pair,
    BinnenI,
    Slash,
    Gap,
    Colon,
    Star,
}

impl FormKind {
    pub const ALL: [FormKind; 6] = [
        FormKind::Pair,
        FormKind::BinnenI,
        FormKind::Slash,
        FormKind::Gap,
        FormKind::Colon,
        FormKind::Star,
    ];

    /// The separator character for marker forms.
    pub fn marker(self) -> Option<char> {
        match self {
            FormKind::Slash => Some('/'),
            FormKind::Gap => Some('_'),
            FormKind::Colon => Some(':'),
            FormKind::Star => Some('*'),
            FormKind::Pair | FormKind::BinnenI => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FormKind::Pair => "pair",
            FormKind::BinnenI => "binnen_i",
            FormKind::Slash => "slash",
            FormKind::Gap => "gap",
            FormKind::Colon => "colon",
            FormKind::Star => "star",
        }
    }
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormKind {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FormKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| PatternError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Number {
    Sg,
    Pl,
}

impl Number {
    pub fn as_str(self) -> &'static str {
        match self {
            Number::Sg => "sg",
            Number::Pl => "pl",
        }
    }

    /// Feminine suffix for this number.
    pub fn suffix(self) -> &'static str {
        match self {
            Number::Sg => "in",
            Number::Pl => "innen",
        }
    }
}

impl FromStr for Number {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sg" => Ok(Number::Sg),
            "pl" => Ok(Number::Pl),
            other => Err(PatternError::UnknownNumber(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    F,
    M,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::F => "f",
            Gender::M => "m",
        }
    }

    pub fn other(self) -> Gender {
        match self {
            Gender::F => Gender::M,
            Gender::M => Gender::F,
        }
    }
}

impl FromStr for Gender {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f" => Ok(Gender::F),
            "m" => Ok(Gender::M),
            other => Err(PatternError::UnknownGender(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("unknown form kind {0:?}")]
    UnknownKind(String),
    #[error("unknown number {0:?}")]
    UnknownNumber(String),
    #[error("unknown gender {0:?}")]
    UnknownGender(String),
    #[error("pattern {pattern:?}: {source}")]
    Regex {
        pattern: String,
        #[source]
        source: Box<fancy_regex::Error>,
    },
    #[error("pattern {0:?} needs a `stem`, `fem`/`masc` or `left`/`right` group")]
    MissingGroups(String),
    #[error("{path}:{line}: expected `kind<TAB>number<TAB>regex`")]
    BadLine { path: String, line: usize },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Noun,
    Pair,
    FunctionWord,
}

#[derive(Debug, Clone)]
pub struct Pattern {
    pub kind: FormKind,
    pub number: Number,
    pub regex: Regex,
    shape: Shape,
}

impl Pattern {
    pub fn new(kind: FormKind, number: Number, source: &str) -> Result<Self, PatternError> {
        let regex = Regex::new(source).map_err(|e| PatternError::Regex {
            pattern: source.to_string(),
            source: Box::new(e),
        })?;
        let names: Vec<&str> = regex.capture_names().flatten().collect();
        let has = |n: &str| names.contains(&n);
        let shape = if has("fem") && has("masc") && has("stem") {
            Shape::Pair
        } else if has("left") && has("right") {
            Shape::FunctionWord
        } else if has("stem") {
            Shape::Noun
        } else {
            return Err(PatternError::MissingGroups(source.to_string()));
        };
        Ok(Pattern {
            kind,
            number,
            regex,
            shape,
        })
    }

    pub fn source(&self) -> &str {
        self.regex.as_str()
    }
}

/// A detected gender-fair span. `start`/`end` count characters,
/// `byte_start`/`byte_end` index the UTF-8 string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderFairMatch {
    pub start: usize,
    pub end: usize,
    pub byte_start: usize,
    pub byte_end: usize,
    pub kind: FormKind,
    pub number: Number,
    pub stem: String,
    pub matched: String,
    /// Generic masculine rendering of the span.
    pub masculine: String,
    /// Feminine rendering of the span.
    pub feminine: String,
    /// Order of the conjuncts, for pair forms.
    pub first_gender: Option<Gender>,
    /// Marked article or pronoun rather than a noun.
    pub function_word: bool,
}

impl GenderFairMatch {
    pub fn byte_range(&self) -> std::ops::Range<usize> {
        self.byte_start..self.byte_end
    }

    /// The span rewritten as the given marker kind.
    pub fn render(&self, kind: FormKind) -> String {
        if self.function_word {
            let (left, right) = split_function_word(&self.matched, self.kind);
            return match kind.marker() {
                Some(m) => format!("{left}{m}{right}"),
                None => self.matched.clone(),
            };
        }
        match kind {
            FormKind::Pair => format!("{} und {}", self.feminine, self.masculine),
            FormKind::BinnenI => {
                let suffix = self.number.suffix();
                format!("{}I{}", self.stem, &suffix[1..])
            }
            marker_kind => format!(
                "{}{}{}",
                self.stem,
                marker_kind.marker().unwrap_or('*'),
                self.number.suffix()
            ),
        }
    }
}

fn split_function_word(matched: &str, kind: FormKind) -> (&str, &str) {
    let marker = kind.marker().unwrap_or('*');
    matched.split_once(marker).unwrap_or((matched, ""))
}

/// Marked function words: (written left, written right, masculine, feminine).
/// Lowercase; a capitalized left half is matched and mirrored.
const FUNCTION_WORDS: &[(&str, &str, &str, &str)] = &[
    ("der", "die", "der", "die"),
    ("die", "der", "der", "die"),
    ("den", "die", "den", "die"),
    ("dem", "der", "dem", "der"),
    ("des", "der", "des", "der"),
    ("ein", "e", "ein", "eine"),
    ("eine", "n", "einen", "eine"),
    ("eine", "r", "einer", "eine"),
    ("einem", "r", "einem", "einer"),
    ("eines", "r", "eines", "einer"),
    ("einer", "s", "eines", "einer"),
    ("kein", "e", "kein", "keine"),
    ("keine", "n", "keinen", "keine"),
    ("keine", "r", "keiner", "keine"),
    ("keinem", "r", "keinem", "keiner"),
    ("jede", "r", "jeder", "jede"),
    ("jede", "n", "jeden", "jede"),
    ("jedem", "r", "jedem", "jeder"),
    ("jedes", "r", "jedes", "jeder"),
    ("diese", "r", "dieser", "diese"),
    ("diese", "n", "diesen", "diese"),
    ("welche", "r", "welcher", "welche"),
    ("andere", "r", "anderer", "andere"),
    ("er", "sie", "er", "sie"),
    ("sie", "er", "er", "sie"),
    ("ihm", "ihr", "ihm", "ihr"),
    ("ihn", "sie", "ihn", "sie"),
    ("sein", "ihr", "sein", "ihr"),
    ("seine", "ihre", "seine", "ihre"),
    ("seinem", "ihrem", "seinem", "ihrem"),
    ("seinen", "ihren", "seinen", "ihren"),
    ("seiner", "ihrer", "seiner", "ihrer"),
    ("ihr", "e", "ihr", "ihre"),
    ("ihre", "n", "ihren", "ihre"),
    ("ihre", "r", "ihrer", "ihre"),
    ("mein", "e", "mein", "meine"),
    ("meine", "n", "meinen", "meine"),
    ("dein", "e", "dein", "deine"),
    ("deine", "n", "deinen", "deine"),
    ("unser", "e", "unser", "unsere"),
    ("unsere", "n", "unseren", "unsere"),
    ("derjenige", "diejenige", "derjenige", "diejenige"),
];

fn lookup_function_word(left: &str, right: &str) -> Option<(&'static str, &'static str)> {
    let left_lc = left.to_lowercase();
    FUNCTION_WORDS
        .iter()
        .find(|(l, r, _, _)| *l == left_lc && *r == right)
        .map(|&(_, _, m, f)| (m, f))
}

fn mirror_case(template: &str, word: &str) -> String {
    if template.chars().next().is_some_and(char::is_uppercase) {
        let mut c = word.chars();
        match c.next() {
            Some(first) => first.to_uppercase().chain(c).collect(),
            None => String::new(),
        }
    } else {
        word.to_string()
    }
}

/// An ordered collection of patterns.
#[derive(Debug, Clone)]
pub struct PatternSet {
    pub patterns: Vec<Pattern>,
}

// Stems start at a word boundary; a plural suffix may be followed by a
// lowercase compound continuation, a singular suffix may not.
const LB: &str = r"(?<![\p{L}\p{N}])";

fn builtin_sources() -> Vec<(FormKind, Number, String)> {
    let mut v = vec![
        (
            FormKind::Pair,
            Number::Pl,
            format!(r"{LB}(?P<fem>(?P<stem>\p{{L}}{{2,}})innen) (?:und|oder) -?(?P<masc>\k<stem>(?!innen)(?:en|e|n)?)(?!\p{{L}})"),
        ),
        (
            FormKind::Pair,
            Number::Pl,
            format!(r"{LB}(?P<masc>(?P<stem>\p{{L}}{{2,}})(?:en|e|n)?) (?:und|oder) (?P<fem>\k<stem>innen)(?!\p{{L}})"),
        ),
        (
            FormKind::Pair,
            Number::Sg,
            format!(r"{LB}(?P<fem>(?P<stem>\p{{L}}{{2,}})in) (?:und|oder) -?(?P<masc>\k<stem>(?:en|e|n)?)(?!\p{{L}})"),
        ),
        (
            FormKind::Pair,
            Number::Sg,
            format!(r"{LB}(?P<masc>(?P<stem>\p{{L}}{{2,}})(?:en|e|n)?) (?:und|oder) (?P<fem>\k<stem>in)(?!\p{{L}})"),
        ),
        (
            FormKind::BinnenI,
            Number::Pl,
            format!(r"{LB}(?P<stem>\p{{L}}*\p{{Ll}})Innen(?!\p{{Lu}})"),
        ),
        (
            FormKind::BinnenI,
            Number::Sg,
            format!(r"{LB}(?P<stem>\p{{L}}*\p{{Ll}})In(?!\p{{L}})"),
        ),
        (
            FormKind::Slash,
            Number::Pl,
            format!(r"{LB}(?P<stem>\p{{L}}+) ?/ ?innen(?!\p{{Lu}})"),
        ),
        (
            FormKind::Slash,
            Number::Sg,
            format!(r"{LB}(?P<stem>\p{{L}}+) ?/ ?in(?!\p{{L}})"),
        ),
    ];
    for (kind, marker) in [
        (FormKind::Gap, "_"),
        (FormKind::Colon, ":"),
        (FormKind::Star, r"\*"),
    ] {
        v.push((
            kind,
            Number::Pl,
            format!(r"{LB}(?P<stem>\p{{L}}+){marker}innen(?!\p{{Lu}})"),
        ));
        v.push((
            kind,
            Number::Sg,
            format!(r"{LB}(?P<stem>\p{{L}}+){marker}in(?!nen)(?!\p{{Lu}})"),
        ));
    }
    for (kind, marker) in [
        (FormKind::Star, r"\*"),
        (FormKind::Colon, ":"),
        (FormKind::Gap, "_"),
        (FormKind::Slash, "/"),
    ] {
        v.push((
            kind,
            Number::Sg,
            format!(r"{LB}(?P<left>\p{{L}}+){marker}(?P<right>\p{{Ll}}+)(?!\p{{L}})"),
        ));
    }
    v
}

impl Default for PatternSet {
    fn default() -> Self {
        PatternSet::builtin()
    }
}

impl PatternSet {
    pub fn builtin() -> Self {
        let patterns = builtin_sources()
            .into_iter()
            .map(|(k, n, s)| Pattern::new(k, n, &s).expect("builtin pattern compiles"))
            .collect();
        PatternSet { patterns }
    }

    /// Parses `kind<TAB>number<TAB>regex` lines; `#` starts a comment.
    pub fn parse(text: &str, origin: &str) -> Result<Self, PatternError> {
        let mut patterns = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (Some(kind), Some(number), Some(regex)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(PatternError::BadLine {
                    path: origin.to_string(),
                    line: i + 1,
                });
            };
            patterns.push(Pattern::new(kind.trim().parse()?, number.trim().parse()?, regex)?);
        }
        Ok(PatternSet { patterns })
    }

    pub fn load(path: &Path) -> Result<Self, PatternError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Renders the set back into the pattern-file format.
    pub fn to_file_string(&self) -> String {
        self.patterns
            .iter()
            .map(|p| format!("{}\t{}\t{}\n", p.kind, p.number.as_str(), p.source()))
            .collect()
    }

    fn candidates(&self, text: &str) -> Vec<GenderFairMatch> {
        let mut out = Vec::new();
        for p in &self.patterns {
            for caps in p.regex.captures_iter(text) {
                let Ok(caps) = caps else {
                    log::warn!("pattern {:?} hit its backtrack limit", p.source());
                    break;
                };
                let whole = caps.get(0).expect("group 0");
                let group = |n: &str| caps.name(n).map(|m| m.as_str().to_string());
                let matched = whole.as_str().to_string();
                let hit = match p.shape {
                    Shape::Noun => {
                        let stem = group("stem").unwrap_or_default();
                        GenderFairMatch {
                            start: 0,
                            end: 0,
                            byte_start: whole.start(),
                            byte_end: whole.end(),
                            kind: p.kind,
                            number: p.number,
                            masculine: stem.clone(),
                            feminine: format!("{stem}{}", p.number.suffix()),
                            stem,
                            matched,
                            first_gender: None,
                            function_word: false,
                        }
                    }
                    Shape::Pair => {
                        let fem = caps.name("fem").expect("fem group");
                        let masc = caps.name("masc").expect("masc group");
                        GenderFairMatch {
                            start: 0,
                            end: 0,
                            byte_start: whole.start(),
                            byte_end: whole.end(),
                            kind: p.kind,
                            number: p.number,
                            stem: group("stem").unwrap_or_default(),
                            masculine: masc.as_str().to_string(),
                            feminine: fem.as_str().to_string(),
                            matched,
                            first_gender: Some(if fem.start() < masc.start() { Gender::F } else { Gender::M }),
                            function_word: false,
                        }
                    }
                    Shape::FunctionWord => {
                        let left = group("left").unwrap_or_default();
                        let right = group("right").unwrap_or_default();
                        let Some((m, f)) = lookup_function_word(&left, &right) else {
                            continue;
                        };
                        GenderFairMatch {
                            start: 0,
                            end: 0,
                            byte_start: whole.start(),
                            byte_end: whole.end(),
                            kind: p.kind,
                            number: p.number,
                            masculine: mirror_case(&left, m),
                            feminine: mirror_case(&left, f),
                            stem: left,
                            matched,
                            first_gender: None,
                            function_word: true,
                        }
                    }
                };
                out.push(hit);
            }
        }
        out
    }

    /// All non-overlapping matches, leftmost first, longest on ties.
    pub fn find_matches(&self, text: &str) -> Vec<GenderFairMatch> {
        let mut cands = self.candidates(text);
        cands.sort_by(|a, b| {
            a.byte_start
                .cmp(&b.byte_start)
                .then(b.byte_end.cmp(&a.byte_end))
        });
        let mut out: Vec<GenderFairMatch> = Vec::new();
        for c in cands {
            if out.last().is_none_or(|prev| c.byte_start >= prev.byte_end) {
                out.push(c);
            }
        }
        // Byte offsets to char offsets in one forward pass.
        let mut chars = 0;
        let mut at = 0;
        for m in &mut out {
            chars += text[at..m.byte_start].chars().count();
            m.start = chars;
            chars += m.matched.chars().count();
            m.end = chars;
            at = m.byte_end;
        }
        out
    }
}
