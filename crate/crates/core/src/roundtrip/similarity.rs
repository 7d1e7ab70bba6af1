//! Ratcliff–Obershelp gestalt similarity over characters.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Longest common block in `a[alo..ahi]` / `b[blo..bhi]`: earliest in `a`,
/// then earliest in `b`, among the longest.
fn longest_match(
    a: &[char],
    b2j: &HashMap<char, Vec<usize>>,
    (alo, ahi): (usize, usize),
    (blo, bhi): (usize, usize),
) -> (usize, usize, usize) {
    let (mut besti, mut bestj, mut bestsize) = (alo, blo, 0);
    let mut j2len: HashMap<usize, usize> = HashMap::new();
    for (i, ch) in a.iter().enumerate().take(ahi).skip(alo) {
        let mut next: HashMap<usize, usize> = HashMap::new();
        if let Some(js) = b2j.get(ch) {
            for &j in js {
                if j < blo {
                    continue;
                }
                if j >= bhi {
                    break;
                }
                let k = j.checked_sub(1).and_then(|p| j2len.get(&p)).copied().unwrap_or(0) + 1;
                next.insert(j, k);
                if k > bestsize {
                    besti = i + 1 - k;
                    bestj = j + 1 - k;
                    bestsize = k;
                }
            }
        }
        j2len = next;
    }
    (besti, bestj, bestsize)
}

/// Total size of the recursive longest-block decomposition.
fn matched_chars(a: &[char], b: &[char]) -> usize {
    let mut b2j: HashMap<char, Vec<usize>> = HashMap::new();
    for (j, &c) in b.iter().enumerate() {
        b2j.entry(c).or_default().push(j);
    }
    let mut total = 0;
    let mut queue = vec![(0, a.len(), 0, b.len())];
    while let Some((alo, ahi, blo, bhi)) = queue.pop() {
        let (i, j, k) = longest_match(a, &b2j, (alo, ahi), (blo, bhi));
        if k == 0 {
            continue;
        }
        total += k;
        if alo < i && blo < j {
            queue.push((alo, i, blo, j));
        }
        if i + k < ahi && j + k < bhi {
            queue.push((i + k, ahi, j + k, bhi));
        }
    }
    total
}

/// `2·M / (|a| + |b|)` with `M` the matched characters; 1.0 for two empty
/// strings.
///
/// ```
/// use fairforge::roundtrip::similarity_ratio;
///
/// assert!((similarity_ratio("Schüler*in", "Schüler") - 14.0 / 17.0).abs() < 1e-12);
/// assert_eq!(similarity_ratio("abc", "xyz"), 0.0);
/// ```
pub fn similarity_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let len = a.len() + b.len();
    if len == 0 {
        return 1.0;
    }
    2.0 * matched_chars(&a, &b) as f64 / len as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeConfig {
    pub cutoff: f64,
    pub max_candidates: usize,
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig {
            cutoff: 0.6,
            max_candidates: 1,
        }
    }
}

/// A candidate that cleared the cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloseMatch {
    pub word: String,
    pub position: usize,
    pub similarity: f64,
}

/// Candidates with ratio ≥ cutoff, best first, earlier position first on
/// ties, at most `max_candidates`. Each ratio is computed with the candidate
/// as the first sequence and `word` as the second.
pub fn get_close_matches<S: AsRef<str>>(word: &str, candidates: &[S], cfg: &MergeConfig) -> Vec<CloseMatch> {
    let mut hits: Vec<CloseMatch> = candidates
        .iter()
        .enumerate()
        .filter_map(|(position, c)| {
            let similarity = similarity_ratio(c.as_ref(), word);
            (similarity >= cfg.cutoff).then(|| CloseMatch {
                word: c.as_ref().to_string(),
                position,
                similarity,
            })
        })
        .collect();
    hits.sort_by(|x, y| y.similarity.total_cmp(&x.similarity).then(x.position.cmp(&y.position)));
    hits.truncate(cfg.max_candidates);
    hits
}
