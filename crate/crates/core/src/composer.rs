//! Training-set assembly: weighted bundles, a non-gendered share of the
//! total, cross-bundle dedup and a seeded shuffle.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genderlex::{normalize_de, FormKind, Gender, Lexicon, PatternSet};
use crate::mtclient::Translator;
use crate::rewrite_en::{backward_rewrite, VerbTable};
use crate::roundtrip::{build_pseudo_sources, RoundtripError, RoundtripMode, RoundtripOptions};
use crate::textcore::{read_jsonl, Origin, ParallelRecord, Segment, TextError};

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("non-gendered pool too small: need {required}, have {available}")]
    InsufficientPool { required: usize, available: usize },
    #[error("non_gendered_ratio must be in [0, 1), got {0}")]
    BadRatio(f64),
    #[error("bundle {name}: weight must be finite and >= 0, got {weight}")]
    BadWeight { name: String, weight: f64 },
    #[error("{path}:{line}: {msg}")]
    Plan { path: String, line: usize, msg: String },
    #[error(transparent)]
    Text(#[from] TextError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleSpec {
    pub name: String,
    pub path: PathBuf,
    /// Replication factor: a bundle of n records contributes round(w·n).
    pub weight: f64,
    pub cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposePlan {
    pub bundles: Vec<BundleSpec>,
    pub non_gendered: Option<PathBuf>,
    pub non_gendered_ratio: f64,
    pub shuffle_seed: u64,
    pub dedup: bool,
}

impl Default for ComposePlan {
    fn default() -> Self {
        ComposePlan {
            bundles: Vec::new(),
            non_gendered: None,
            non_gendered_ratio: 0.3,
            shuffle_seed: 1,
            dedup: true,
        }
    }
}

impl ComposePlan {
    /// Parses `key = value` lines followed by `[bundle NAME]` stanzas.
    /// Relative paths are resolved against `base`.
    ///
    /// ```
    /// use std::path::Path;
    /// use fairforge::composer::ComposePlan;
    ///
    /// let plan = ComposePlan::parse(
    ///     "non_gendered_ratio = 0.3\nnon_gendered = ng.jsonl\n\n[bundle masc]\npath = m.jsonl\ncap = 10\n",
    ///     Path::new("work"),
    ///     "plan.cfg",
    /// )
    /// .unwrap();
    /// assert_eq!(plan.bundles[0].name, "masc");
    /// assert_eq!(plan.bundles[0].path, Path::new("work/m.jsonl"));
    /// assert_eq!(plan.bundles[0].cap, Some(10));
    /// ```
    pub fn parse(text: &str, base: &Path, origin: &str) -> Result<Self, ComposeError> {
        let mut plan = ComposePlan::default();
        let err = |line: usize, msg: String| ComposeError::Plan {
            path: origin.to_string(),
            line,
            msg,
        };
        let mut current: Option<(usize, BundleSpec)> = None;
        let finish = |cur: Option<(usize, BundleSpec)>, plan: &mut ComposePlan| -> Result<(), ComposeError> {
            if let Some((line, b)) = cur {
                if b.path.as_os_str().is_empty() {
                    return Err(err(line, format!("bundle {} has no path", b.name)));
                }
                plan.bundles.push(b);
            }
            Ok(())
        };
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = header
                    .strip_prefix("bundle")
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| err(n, format!("expected [bundle NAME], got [{header}]")))?;
                finish(current.take(), &mut plan)?;
                current = Some((
                    n,
                    BundleSpec {
                        name: name.to_string(),
                        path: PathBuf::new(),
                        weight: 1.0,
                        cap: None,
                    },
                ));
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(n, format!("expected key = value, got {line:?}")))?;
            let bad = |what: &str| err(n, format!("{key}: {what} {value:?}"));
            match (&mut current, key) {
                (Some((_, b)), "path") => b.path = base.join(value),
                (Some((_, b)), "weight") => b.weight = value.parse().map_err(|_| bad("not a number"))?,
                (Some((_, b)), "cap") => b.cap = Some(value.parse().map_err(|_| bad("not a count"))?),
                (None, "non_gendered") => plan.non_gendered = Some(base.join(value)),
                (None, "non_gendered_ratio") => {
                    plan.non_gendered_ratio = value.parse().map_err(|_| bad("not a number"))?
                }
                (None, "shuffle_seed") => plan.shuffle_seed = value.parse().map_err(|_| bad("not a seed"))?,
                (None, "dedup") => plan.dedup = value.parse().map_err(|_| bad("not a bool"))?,
                _ => return Err(err(n, format!("unknown key {key:?}"))),
            }
        }
        finish(current, &mut plan)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self, ComposeError> {
        let text = std::fs::read_to_string(path).map_err(|e| TextError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<(), ComposeError> {
        if !(0.0..1.0).contains(&self.non_gendered_ratio) {
            return Err(ComposeError::BadRatio(self.non_gendered_ratio));
        }
        for b in &self.bundles {
            if !b.weight.is_finite() || b.weight < 0.0 {
                return Err(ComposeError::BadWeight {
                    name: b.name.clone(),
                    weight: b.weight,
                });
            }
        }
        Ok(())
    }

    /// Reads every bundle and the pool, then composes.
    pub fn run(&self) -> Result<Composed, ComposeError> {
        let mut bundles = Vec::with_capacity(self.bundles.len());
        for spec in &self.bundles {
            bundles.push(Bundle {
                name: spec.name.clone(),
                records: read_jsonl(&spec.path)?,
                weight: spec.weight,
                cap: spec.cap,
            });
        }
        let pool = match &self.non_gendered {
            Some(p) => read_jsonl(p)?,
            None => Vec::new(),
        };
        compose(bundles, pool, &self.settings())
    }

    pub fn settings(&self) -> ComposeSettings {
        ComposeSettings {
            non_gendered_ratio: self.non_gendered_ratio,
            shuffle_seed: self.shuffle_seed,
            dedup: self.dedup,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub name: String,
    pub records: Vec<ParallelRecord>,
    pub weight: f64,
    pub cap: Option<usize>,
}

impl Bundle {
    pub fn new(name: &str, records: Vec<ParallelRecord>) -> Self {
        Bundle {
            name: name.to_string(),
            records,
            weight: 1.0,
            cap: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ComposeSettings {
    pub non_gendered_ratio: f64,
    pub shuffle_seed: u64,
    pub dedup: bool,
}

impl Default for ComposeSettings {
    fn default() -> Self {
        ComposePlan::default().settings()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleCount {
    pub name: String,
    pub available: usize,
    /// After weighting and the cap.
    pub selected: usize,
    pub duplicates: usize,
    pub emitted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub bundles: Vec<BundleCount>,
    pub gendered: usize,
    pub non_gendered_requested_ratio: f64,
    pub non_gendered_required: usize,
    pub non_gendered_available: usize,
    pub non_gendered: usize,
    pub total: usize,
    pub achieved_ratio: f64,
    pub shuffle_seed: u64,
    pub dedup: bool,
}

#[derive(Debug, Clone)]
pub struct Composed {
    pub records: Vec<ParallelRecord>,
    pub manifest: Manifest,
}

/// Non-gendered records needed for `gendered` records to make up `1 - ratio`
/// of the total: round(g·r / (1 - r)).
///
/// ```
/// assert_eq!(fairforge::composer::non_gendered_needed(7000, 0.3), 3000);
/// assert_eq!(fairforge::composer::non_gendered_needed(10_000, 0.3), 4286);
/// ```
pub fn non_gendered_needed(gendered: usize, ratio: f64) -> usize {
    if ratio <= 0.0 {
        return 0;
    }
    (gendered as f64 * ratio / (1.0 - ratio)).round() as usize
}

fn weighted(records: Vec<ParallelRecord>, weight: f64, cap: Option<usize>, rng: &mut ChaCha8Rng) -> Vec<ParallelRecord> {
    let n = records.len();
    let want = ((n as f64 * weight).round() as usize).min(cap.unwrap_or(usize::MAX));
    if n == 0 || want == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(want);
    while out.len() + n <= want {
        out.extend_from_slice(&records);
    }
    let rest = want - out.len();
    if rest > 0 {
        let mut picked = index::sample(rng, n, rest).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| records[i].clone()));
    }
    out
}

/// Assembles the training set.
///
/// Bundles are processed in order; with dedup on, a (src, trg) pair seen in
/// an earlier bundle is dropped from later ones, and the pool is deduplicated
/// the same way. Pool records are sampled with the shuffle seed.
pub fn compose(bundles: Vec<Bundle>, pool: Vec<ParallelRecord>, cfg: &ComposeSettings) -> Result<Composed, ComposeError> {
    if !(0.0..1.0).contains(&cfg.non_gendered_ratio) {
        return Err(ComposeError::BadRatio(cfg.non_gendered_ratio));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut out = Vec::new();
    let mut counts = Vec::with_capacity(bundles.len());
    for b in bundles {
        if !b.weight.is_finite() || b.weight < 0.0 {
            return Err(ComposeError::BadWeight {
                name: b.name,
                weight: b.weight,
            });
        }
        let available = b.records.len();
        let selected = weighted(b.records, b.weight, b.cap, &mut rng);
        let mut count = BundleCount {
            name: b.name,
            available,
            selected: selected.len(),
            duplicates: 0,
            emitted: 0,
        };
        for r in selected {
            if cfg.dedup && !seen.insert((r.src.clone(), r.trg.clone())) {
                count.duplicates += 1;
                continue;
            }
            out.push(r);
            count.emitted += 1;
        }
        counts.push(count);
    }
    let gendered = out.len();
    let required = non_gendered_needed(gendered, cfg.non_gendered_ratio);
    let pool: Vec<ParallelRecord> = if cfg.dedup {
        pool.into_iter()
            .filter(|r| seen.insert((r.src.clone(), r.trg.clone())))
            .collect()
    } else {
        pool
    };
    if pool.len() < required {
        return Err(ComposeError::InsufficientPool {
            required,
            available: pool.len(),
        });
    }
    let mut picked = index::sample(&mut rng, pool.len(), required).into_vec();
    picked.sort_unstable();
    out.extend(picked.into_iter().map(|i| pool[i].clone()));
    out.shuffle(&mut rng);
    let total = out.len();
    let manifest = Manifest {
        bundles: counts,
        gendered,
        non_gendered_requested_ratio: cfg.non_gendered_ratio,
        non_gendered_required: required,
        non_gendered_available: pool.len(),
        non_gendered: required,
        total,
        achieved_ratio: if total == 0 { 0.0 } else { required as f64 / total as f64 },
        shuffle_seed: cfg.shuffle_seed,
        dedup: cfg.dedup,
    };
    Ok(Composed { records: out, manifest })
}

/// Masculine, feminine and copy variants of the same targets, index-aligned.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Complementary {
    pub masc: Vec<ParallelRecord>,
    pub fem: Vec<ParallelRecord>,
    pub copy: Vec<ParallelRecord>,
}

impl Complementary {
    pub fn len(&self) -> usize {
        self.copy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.copy.is_empty()
    }

    fn push(&mut self, masc: ParallelRecord, fem: ParallelRecord, copy: ParallelRecord) {
        self.masc.push(masc);
        self.fem.push(fem);
        self.copy.push(copy);
    }
}

/// English targets through the rule-based rewriter. A target that neither
/// gender changes has nothing to learn from and is dropped.
pub fn make_complementary_en<S: AsRef<str>>(targets: &[S], lex: &Lexicon, verbs: &VerbTable) -> Complementary {
    let mut out = Complementary::default();
    for t in targets {
        let t = t.as_ref();
        let side = |g: Gender| {
            let (src, decisions) = backward_rewrite(t, g, lex, verbs);
            let mut r = ParallelRecord::new(src, t, Origin::BackwardRule).with_tag(g.as_str());
            if decisions.iter().any(|d| d.low_confidence) {
                r = r.with_tag("low_confidence");
            }
            r
        };
        let (m, f) = (side(Gender::M), side(Gender::F));
        if m.src == t && f.src == t {
            log::info!("no gendered rewrite for {t:?}; dropped");
            continue;
        }
        out.push(m, f, ParallelRecord::new(t, t, Origin::Copy));
    }
    out
}

/// German targets through plain and feminine-tagged round trips. The copy
/// pair keeps the original text as source and the normalized text as target.
/// Segments whose round trip fails are dropped from all three bundles.
pub fn make_complementary_de(
    segments: &[Segment],
    mt: &dyn Translator,
    patterns: &PatternSet,
    opts: &RoundtripOptions,
) -> Result<Complementary, RoundtripError> {
    let run = |mode: RoundtripMode, segs: &[Segment]| {
        let o = RoundtripOptions {
            mode,
            ..opts.clone()
        };
        build_pseudo_sources(segs, mt, patterns, &o)
    };
    let both = |segs: &[Segment]| -> Result<Vec<(ParallelRecord, ParallelRecord)>, RoundtripError> {
        let m = run(RoundtripMode::Plain, segs)?;
        let f = run(RoundtripMode::TagF, segs)?;
        Ok(m.into_iter().zip(f).map(|(m, f)| (m.record, f.record)).collect())
    };
    let pairs: Vec<Option<(ParallelRecord, ParallelRecord)>> = match both(segments) {
        Ok(v) => v.into_iter().map(Some).collect(),
        Err(RoundtripError::Mt(e)) => {
            log::warn!("batch round trip failed ({e}); retrying per segment");
            segments
                .iter()
                .map(|s| match both(std::slice::from_ref(s)) {
                    Ok(mut v) => v.pop(),
                    Err(e) => {
                        log::warn!("segment {}: dropped, {e}", s.id);
                        None
                    }
                })
                .collect()
        }
        Err(e) => return Err(e),
    };
    let mut out = Complementary::default();
    for (seg, pair) in segments.iter().zip(pairs) {
        let Some((m, f)) = pair else { continue };
        let trg = match opts.normalize_target {
            Some(kind) => normalize_de(&seg.text, patterns, kind),
            None => seg.text.clone(),
        };
        out.push(m, f, ParallelRecord::new(seg.text.clone(), trg, Origin::Copy));
    }
    Ok(out)
}

/// The convention targets are normalized to when none is given.
pub const DEFAULT_TARGET_FORM: FormKind = FormKind::Star;
