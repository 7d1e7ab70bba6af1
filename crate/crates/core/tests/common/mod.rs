#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use fairforge::genderlex::{Gender, LexCategory, LexEntry, Lexicon};
use fairforge::rewrite_en::{backward_rewrite, forward_rewrite, VerbTable};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Edit distance by plain top-down recursion with memoization; shares no
/// code with the library's table-filling version.
pub fn edit_distance_memo(a: &[String], b: &[String]) -> usize {
    fn go(a: &[String], b: &[String], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j + 1, memo)
                .min(go(a, b, i + 1, j, memo))
                .min(go(a, b, i, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// Minimum cost over every alignment path, enumerated exhaustively. Only
/// feasible for very short inputs.
pub fn edit_distance_brute(a: &[String], b: &[String]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let diag = usize::from(x != y) + edit_distance_brute(ra, rb);
            let del = 1 + edit_distance_brute(ra, b);
            let ins = 1 + edit_distance_brute(a, rb);
            diag.min(del).min(ins)
        }
    }
}

/// Random token sequences over a five-word alphabet.
pub fn random_pairs(n: usize, max_len: usize, seed: u64) -> Vec<(Vec<String>, Vec<String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = ["a", "b", "c", "d", "e"];
    let seq = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let len = rng.random_range(0..=max_len);
        (0..len).map(|_| words[rng.random_range(0..words.len())].to_string()).collect()
    };
    (0..n).map(|_| (seq(&mut rng), seq(&mut rng))).collect()
}

#[derive(Debug)]
pub struct RowCheck {
    pub surface: String,
    pub gender: Gender,
    pub input: String,
    pub expected: String,
    pub forward: String,
    pub backward: String,
}

impl RowCheck {
    pub fn ok(&self) -> bool {
        self.forward == self.expected && self.backward == self.input
    }
}

/// Sentences for pronoun rows, keyed by (gendered surface, fair surface).
fn pronoun_carrier(surface: &str, fair: &str) -> (String, String) {
    let cap = |s: &str| {
        let mut c = s.chars();
        c.next().map(|f| f.to_uppercase().chain(c).collect::<String>()).unwrap_or_default()
    };
    match fair {
        "they" => (format!("Yesterday {surface} arrived."), "Yesterday they arrived.".into()),
        "their" => (format!("I took {surface} bag."), "I took their bag.".into()),
        "them" => (format!("I saw {surface} yesterday."), "I saw them yesterday.".into()),
        "theirs" => (format!("The bag is {surface}."), "The bag is theirs.".into()),
        "themself" => {
            let subject = if surface == "herself" { "she" } else { "he" };
            (format!("{} hurt {surface}.", cap(subject)), "They hurt themself.".into())
        }
        other => panic!("no carrier for pronoun {other}"),
    }
}

fn check_form(entry: &LexEntry, surface: &str, gender: Gender, lex: &Lexicon, verbs: &VerbTable) -> RowCheck {
    let (input, expected) = if entry.category == LexCategory::Pronoun {
        pronoun_carrier(surface, &entry.fair_form)
    } else {
        (
            format!("Yesterday the {surface} arrived."),
            format!("Yesterday the {} arrived.", entry.fair_form),
        )
    };
    let forward = forward_rewrite(&input, lex, verbs).0;
    let backward = backward_rewrite(&expected, gender, lex, verbs).0;
    RowCheck {
        surface: surface.to_string(),
        gender,
        input,
        expected,
        forward,
        backward,
    }
}

/// One check per gendered surface of every lexicon row.
pub fn lexicon_row_checks(lex: &Lexicon) -> Vec<RowCheck> {
    let verbs = VerbTable::default();
    lex.entries
        .iter()
        .flat_map(|e| {
            e.gendered_forms
                .iter()
                .map(|f| check_form(e, &f.surface, f.gender, lex, &verbs))
                .collect::<Vec<_>>()
        })
        .collect()
}
