//! Present-tense number agreement for verbs after a subject pronoun.

use std::collections::HashMap;

use crate::genderlex::restore_case;

/// Irregular third-person singular / plural pairs.
const IRREGULAR: &[(&str, &str)] = &[
    ("is", "are"),
    ("was", "were"),
    ("has", "have"),
    ("does", "do"),
    ("goes", "go"),
    ("isn't", "aren't"),
    ("wasn't", "weren't"),
    ("hasn't", "haven't"),
    ("doesn't", "don't"),
    ("isn’t", "aren’t"),
    ("wasn’t", "weren’t"),
    ("hasn’t", "haven’t"),
    ("doesn’t", "don’t"),
];

const MODALS: &[&str] = &[
    "can", "could", "will", "would", "shall", "should", "may", "might", "must", "can't", "won't",
    "wouldn't", "couldn't", "shouldn't", "mustn't", "cannot",
];

const PAST: &[&str] = &[
    "had", "did", "ran", "saw", "went", "said", "made", "took", "came", "gave", "told", "found",
    "thought", "knew", "got", "felt", "left", "kept", "hurt", "put", "set", "cut", "let", "wrote",
    "spoke", "met", "sat", "stood", "heard", "paid", "sent", "built", "brought", "bought",
    "taught", "caught", "held", "won", "lost", "led", "fell", "ate", "drank", "began", "became",
    "sang", "swam", "drove", "rode", "chose", "forgot", "understood", "meant", "spent", "sold",
    "didn't", "hadn't",
];

#[derive(Debug, Clone)]
pub struct VerbTable {
    to_plural: HashMap<String, String>,
    to_singular: HashMap<String, String>,
}

impl Default for VerbTable {
    fn default() -> Self {
        VerbTable::new(IRREGULAR.iter().map(|&(s, p)| (s.to_string(), p.to_string())))
    }
}

impl VerbTable {
    pub fn new(irregular: impl IntoIterator<Item = (String, String)>) -> Self {
        let mut to_plural = HashMap::new();
        let mut to_singular = HashMap::new();
        for (sg, pl) in irregular {
            to_plural.insert(sg.clone(), pl.clone());
            to_singular.insert(pl, sg);
        }
        VerbTable {
            to_plural,
            to_singular,
        }
    }

    pub fn irregular(&self) -> impl Iterator<Item = (&str, &str)> {
        self.to_plural.iter().map(|(s, p)| (s.as_str(), p.as_str()))
    }

    pub fn is_invariant(word: &str) -> bool {
        let w = word.to_lowercase();
        MODALS.contains(&w.as_str()) || PAST.contains(&w.as_str()) || (w.len() > 3 && w.ends_with("ed"))
    }

    /// 3sg present to plural ("runs" → "run"). `None` when the word is not
    /// a recognizable 3sg form.
    pub fn pluralize(&self, word: &str) -> Option<String> {
        let w = word.to_lowercase();
        if let Some(p) = self.to_plural.get(&w) {
            return Some(restore_case(word, p));
        }
        if Self::is_invariant(&w) || !w.chars().all(|c| c.is_ascii_alphabetic()) {
            return None;
        }
        let base = regular_base(&w)?;
        Some(restore_case(word, &base))
    }

    /// Plural present to 3sg ("run" → "runs").
    pub fn singularize(&self, word: &str) -> Option<String> {
        let w = word.to_lowercase();
        if let Some(s) = self.to_singular.get(&w) {
            return Some(restore_case(word, s));
        }
        if Self::is_invariant(&w) || w.len() < 2 || !w.chars().all(|c| c.is_ascii_alphabetic()) {
            return None;
        }
        Some(restore_case(word, &regular_third_person(&w)))
    }
}

fn regular_base(w: &str) -> Option<String> {
    let n = w.len();
    if n < 3 || !w.ends_with('s') || w.ends_with("ss") || w.ends_with("us") || w.ends_with("is") {
        return None;
    }
    if w.ends_with("ies") {
        // lies, dies, ties keep their "ie".
        return Some(if n == 4 {
            w[..n - 1].to_string()
        } else {
            format!("{}y", &w[..n - 3])
        });
    }
    for suffix in ["sses", "shes", "ches", "xes", "zzes", "oes"] {
        if w.ends_with(suffix) {
            return Some(w[..n - 2].to_string());
        }
    }
    Some(w[..n - 1].to_string())
}

fn regular_third_person(w: &str) -> String {
    let bytes = w.as_bytes();
    let n = bytes.len();
    if n >= 2 && bytes[n - 1] == b'y' && !b"aeiou".contains(&bytes[n - 2]) {
        return format!("{}ies", &w[..n - 1]);
    }
    if ["s", "sh", "ch", "x", "z", "o"].iter().any(|s| w.ends_with(s)) {
        return format!("{w}es");
    }
    format!("{w}s")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn irregulars_are_bijective() {
        let t = VerbTable::default();
        for (s, p) in t.irregular() {
            assert_eq!(t.pluralize(s).as_deref(), Some(p));
            assert_eq!(t.singularize(p).as_deref(), Some(s));
        }
    }

    #[test]
    fn regular_examples() {
        let t = VerbTable::default();
        for (sg, pl) in [
            ("runs", "run"),
            ("knows", "know"),
            ("flies", "fly"),
            ("lies", "lie"),
            ("watches", "watch"),
            ("passes", "pass"),
            ("fixes", "fix"),
            ("plays", "play"),
            ("Says", "Say"),
        ] {
            assert_eq!(t.pluralize(sg).as_deref(), Some(pl), "{sg}");
        }
        assert_eq!(t.pluralize("ran"), None);
        assert_eq!(t.pluralize("walked"), None);
        assert_eq!(t.singularize("can"), None);
        assert_eq!(t.singularize("try").as_deref(), Some("tries"));
        for v in ["lie", "die", "tie"] {
            assert_eq!(t.pluralize(&t.singularize(v).unwrap()).as_deref(), Some(v));
        }
    }

    // Base forms over the orthographies the regular rule covers.
    fn base_verb() -> impl Strategy<Value = String> {
        let stem = "[bcdfglmnprtvw][aeiou][bcdfgklmnprt]{1,2}";
        let ending = prop::sample::select(vec!["", "e", "y", "ay", "sh", "ch", "x", "ss", "zz", "o"]);
        (stem, ending).prop_map(|(s, e)| format!("{s}{e}"))
    }

    proptest! {
        #[test]
        fn regular_rule_inverts(v in base_verb()) {
            let t = VerbTable::default();
            prop_assume!(!VerbTable::is_invariant(&v));
            let sg = t.singularize(&v).unwrap();
            prop_assert_eq!(t.pluralize(&sg), Some(v));
        }
    }
}
