//! Gender lexicon for English and gender-fair pattern matching for German.

mod lexicon;
mod patterns;

pub use lexicon::{
    restore_case, GenderedForm, LexCategory, LexEntry, LexHit, LexHitKind, Lexicon, LexiconError,
};
pub use patterns::{FormKind, Gender, GenderFairMatch, Number, Pattern, PatternError, PatternSet};

use serde::{Deserialize, Serialize};

use crate::textcore::{tokenize, Segment, TokenizerMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnClass {
    Gendered,
    GenderFair,
    NonGendered,
}

impl EnClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EnClass::Gendered => "gendered",
            EnClass::GenderFair => "gender_fair",
            EnClass::NonGendered => "non_gendered",
        }
    }
}

/// English segment class from a token-level lexicon scan.
///
/// ```
/// use fairforge::genderlex::{classify_en, EnClass, Lexicon};
/// use fairforge::textcore::Segment;
///
/// let lex = Lexicon::builtin();
/// let seg = Segment::new(1, "She spoke to the chairwoman.", "en");
/// assert_eq!(classify_en(&seg, &lex), EnClass::Gendered);
/// ```
pub fn classify_en(seg: &Segment, lex: &Lexicon) -> EnClass {
    classify_en_text(&seg.text, lex)
}

pub fn classify_en_text(text: &str, lex: &Lexicon) -> EnClass {
    let toks = tokenize(text, TokenizerMode::MarkerPreserving);
    let hits = lex.scan(&toks.0);
    if hits.iter().any(|h| matches!(h.kind, LexHitKind::Gendered(_))) {
        EnClass::Gendered
    } else if !hits.is_empty() {
        EnClass::GenderFair
    } else {
        EnClass::NonGendered
    }
}

pub fn find_matches_de(text: &str, patterns: &PatternSet) -> Vec<GenderFairMatch> {
    patterns.find_matches(text)
}

/// Rewrites every match to `target`, keeping stem and number. Text outside
/// matches is copied byte for byte.
///
/// ```
/// use fairforge::genderlex::{normalize_de, FormKind, PatternSet};
///
/// let set = PatternSet::builtin();
/// assert_eq!(
///     normalize_de("Studentinnen und Studenten lernen.", &set, FormKind::Star),
///     "Student*innen lernen."
/// );
/// ```
pub fn normalize_de(text: &str, patterns: &PatternSet, target: FormKind) -> String {
    let mut out = String::with_capacity(text.len());
    let mut at = 0;
    for m in patterns.find_matches(text) {
        out.push_str(&text[at..m.byte_start]);
        out.push_str(&m.render(target));
        at = m.byte_end;
    }
    out.push_str(&text[at..]);
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeClass {
    pub gender_fair: bool,
    pub has_sg: bool,
    pub has_pl: bool,
}

impl DeClass {
    pub fn from_matches(matches: &[GenderFairMatch]) -> Self {
        DeClass {
            gender_fair: !matches.is_empty(),
            has_sg: matches.iter().any(|m| m.number == Number::Sg),
            has_pl: matches.iter().any(|m| m.number == Number::Pl),
        }
    }

    pub fn labels(self) -> Vec<&'static str> {
        let mut v = vec![if self.gender_fair { "gender_fair" } else { "non_gendered" }];
        if self.has_sg {
            v.push("has_sg");
        }
        if self.has_pl {
            v.push("has_pl");
        }
        v
    }
}

pub fn classify_de(seg: &Segment, patterns: &PatternSet) -> DeClass {
    DeClass::from_matches(&patterns.find_matches(&seg.text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn english_examples() {
        let lex = Lexicon::builtin();
        let c = |t: &str| classify_en(&Segment::new(0, t, "en"), &lex);
        assert_eq!(c("She spoke to the chairwoman."), EnClass::Gendered);
        assert_eq!(c("They gave their talk."), EnClass::GenderFair);
        assert_eq!(c("The weather is nice."), EnClass::NonGendered);
        assert_eq!(c("They met her."), EnClass::Gendered);
    }

    #[test]
    fn every_gendered_surface_classifies_itself() {
        let lex = Lexicon::builtin();
        for s in lex.gendered_surfaces() {
            assert_eq!(classify_en_text(s, &lex), EnClass::Gendered, "{s}");
        }
    }

    #[test]
    fn german_examples() {
        let set = PatternSet::builtin();
        let m = find_matches_de("StudentInnen kommen.", &set);
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].kind, m[0].number), (FormKind::BinnenI, Number::Pl));
        assert_eq!(normalize_de("Student:innen", &set, FormKind::Star), "Student*innen");
        assert_eq!(normalize_de("Student_innen", &set, FormKind::Star), "Student*innen");
        assert_eq!(normalize_de("Haus", &set, FormKind::Star), "Haus");

        let c = |t: &str| classify_de(&Segment::new(0, t, "de"), &set);
        let sg = c("Ein*e Schüler*in liest.");
        assert!(sg.gender_fair && sg.has_sg && !sg.has_pl);
        let pl = c("Schüler*innen lesen.");
        assert!(pl.gender_fair && pl.has_pl && !pl.has_sg);
        assert_eq!(c("Es regnet.").labels(), vec!["non_gendered"]);
    }

    fn marked_text() -> impl Strategy<Value = String> {
        let word = prop::sample::select(vec![
            "Haus", "Lehrer", "Student", "Kund", "Ärzt", "Schüler", "und", "die", "Bürger",
        ]);
        let mark = prop::sample::select(vec!["", "", "*innen", ":in", "_innen", "/in", "Innen", "*in", "innen"]);
        prop::collection::vec((word, mark, prop::bool::ANY), 0..8).prop_map(|parts| {
            parts
                .into_iter()
                .map(|(w, m, dot)| format!("{w}{m}{}", if dot { "." } else { "" }))
                .collect::<Vec<_>>()
                .join(" ")
        })
    }

    proptest! {
        #[test]
        fn offsets_slice_to_matched(text in marked_text()) {
            let chars: Vec<char> = text.chars().collect();
            for m in find_matches_de(&text, &PatternSet::builtin()) {
                prop_assert!(m.start < m.end && m.end <= chars.len());
                let sliced: String = chars[m.start..m.end].iter().collect();
                prop_assert_eq!(&sliced, &m.matched);
                prop_assert_eq!(&text[m.byte_range()], m.matched.as_str());
                prop_assert!(m.matched.starts_with(&m.stem));
            }
        }

        #[test]
        fn normalize_is_idempotent(text in marked_text()) {
            let set = PatternSet::builtin();
            let once = normalize_de(&text, &set, FormKind::Star);
            prop_assert_eq!(normalize_de(&once, &set, FormKind::Star), once.clone());
        }
    }
}
