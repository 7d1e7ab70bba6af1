//! English lookup tables between gendered and gender-fair surfaces.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::patterns::{Gender, Number};

const BUILTIN: &str = include_str!("../../data/lexicon_en.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexCategory {
    Pronoun,
    JobTitle,
    GenericMan,
    FeminineForm,
}

impl LexCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            LexCategory::Pronoun => "pronoun",
            LexCategory::JobTitle => "job_title",
            LexCategory::GenericMan => "generic_man",
            LexCategory::FeminineForm => "feminine_form",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            LexCategory::Pronoun,
            LexCategory::JobTitle,
            LexCategory::GenericMan,
            LexCategory::FeminineForm,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderedForm {
    pub surface: String,
    pub gender: Gender,
    pub number: Number,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexEntry {
    pub gendered_forms: Vec<GenderedForm>,
    pub fair_form: String,
    pub category: LexCategory,
}

impl LexEntry {
    pub fn form(&self, gender: Gender) -> Option<&GenderedForm> {
        self.gendered_forms.iter().find(|f| f.gender == gender)
    }

    pub fn number(&self) -> Number {
        self.gendered_forms
            .first()
            .map(|f| f.number)
            .unwrap_or(Number::Sg)
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{origin}:{line}: {msg}")]
    Parse {
        origin: String,
        line: usize,
        msg: String,
    },
    #[error("{origin}: gendered surface {surface:?} ({number}) listed twice")]
    Duplicate {
        origin: String,
        surface: String,
        number: &'static str,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// What a phrase in running text turned out to be.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexHitKind {
    /// Entry indices with the gender of the matched form.
    Gendered(Vec<(usize, Gender)>),
    Fair(Vec<usize>),
}

/// A lexicon phrase found in a token sequence, `start..end` in token indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexHit {
    pub start: usize,
    pub end: usize,
    pub kind: LexHitKind,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    pub entries: Vec<LexEntry>,
    gendered: HashMap<String, Vec<(usize, Gender)>>,
    fair: HashMap<String, Vec<usize>>,
    max_words: usize,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::builtin()
    }
}

impl Lexicon {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN, "lexicon_en.tsv").expect("bundled lexicon is valid")
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Reads `category<TAB>number<TAB>feminine<TAB>masculine<TAB>fair` rows.
    pub fn parse(text: &str, origin: &str) -> Result<Self, LexiconError> {
        let err = |line: usize, msg: String| LexiconError::Parse {
            origin: origin.to_string(),
            line,
            msg,
        };
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if cols.len() != 5 {
                return Err(err(line, format!("expected 5 columns, got {}", cols.len())));
            }
            let category =
                LexCategory::parse(cols[0]).ok_or_else(|| err(line, format!("unknown category {:?}", cols[0])))?;
            let number: Number = cols[1]
                .parse()
                .map_err(|_| err(line, format!("unknown number {:?}", cols[1])))?;
            let mut forms = Vec::new();
            for (surface, gender) in [(cols[2], Gender::F), (cols[3], Gender::M)] {
                if !surface.is_empty() {
                    forms.push(GenderedForm {
                        surface: surface.to_lowercase(),
                        gender,
                        number,
                    });
                }
            }
            if forms.is_empty() {
                return Err(err(line, "row has no gendered form".into()));
            }
            if cols[4].is_empty() {
                return Err(err(line, "empty fair form".into()));
            }
            entries.push(LexEntry {
                gendered_forms: forms,
                fair_form: cols[4].to_lowercase(),
                category,
            });
        }
        Self::from_entries(entries, origin)
    }

    /// Builds the indices. Pronoun surfaces may repeat ("her" is both
    /// possessive and object); everything else must be unique per number.
    pub fn from_entries(entries: Vec<LexEntry>, origin: &str) -> Result<Self, LexiconError> {
        let mut gendered: HashMap<String, Vec<(usize, Gender)>> = HashMap::new();
        let mut fair: HashMap<String, Vec<usize>> = HashMap::new();
        let mut max_words = 1;
        for (idx, e) in entries.iter().enumerate() {
            for f in &e.gendered_forms {
                let slot = gendered.entry(f.surface.clone()).or_default();
                let clash = slot.iter().any(|&(j, _)| {
                    entries[j].number() == f.number
                        && !(entries[j].category == LexCategory::Pronoun && e.category == LexCategory::Pronoun)
                });
                if clash {
                    return Err(LexiconError::Duplicate {
                        origin: origin.to_string(),
                        surface: f.surface.clone(),
                        number: f.number.as_str(),
                    });
                }
                slot.push((idx, f.gender));
                max_words = max_words.max(word_count(&f.surface));
            }
            fair.entry(e.fair_form.clone()).or_default().push(idx);
            max_words = max_words.max(word_count(&e.fair_form));
        }
        Ok(Lexicon {
            entries,
            gendered,
            fair,
            max_words,
        })
    }

    pub fn gendered(&self, phrase: &str) -> Option<&[(usize, Gender)]> {
        self.gendered.get(&phrase.to_lowercase()).map(Vec::as_slice)
    }

    pub fn fair(&self, phrase: &str) -> Option<&[usize]> {
        self.fair.get(&phrase.to_lowercase()).map(Vec::as_slice)
    }

    pub fn entry(&self, idx: usize) -> &LexEntry {
        &self.entries[idx]
    }

    pub fn gendered_surfaces(&self) -> impl Iterator<Item = &str> {
        self.gendered.keys().map(String::as_str)
    }

    pub fn fair_surfaces(&self) -> impl Iterator<Item = &str> {
        self.fair.keys().map(String::as_str)
    }

    /// Longest-first phrase scan over tokens. A phrase that is both a
    /// gendered and a fair surface counts as gendered.
    pub fn scan<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<LexHit> {
        let lower: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
        let mut hits = Vec::new();
        let mut i = 0;
        while i < lower.len() {
            let mut found = None;
            for n in (1..=self.max_words.min(lower.len() - i)).rev() {
                let phrase = lower[i..i + n].join(" ");
                if let Some(g) = self.gendered.get(&phrase) {
                    found = Some((n, LexHitKind::Gendered(g.clone())));
                } else if let Some(f) = self.fair.get(&phrase) {
                    found = Some((n, LexHitKind::Fair(f.clone())));
                }
                if found.is_some() {
                    break;
                }
            }
            match found {
                Some((n, kind)) => {
                    hits.push(LexHit {
                        start: i,
                        end: i + n,
                        kind,
                    });
                    i += n;
                }
                None => i += 1,
            }
        }
        hits
    }
}

fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Mirrors the capitalization of `original` onto `replacement`.
pub fn restore_case(original: &str, replacement: &str) -> String {
    let letters: Vec<char> = original.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return replacement.to_uppercase();
    }
    if original.chars().next().is_some_and(char::is_uppercase) {
        let mut cs = replacement.chars();
        return match cs.next() {
            Some(c) => c.to_uppercase().chain(cs).collect(),
            None => String::new(),
        };
    }
    replacement.to_string()
}
