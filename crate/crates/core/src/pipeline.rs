//! Preset end-to-end runs over file artifacts.
//!
//! Each stage writes `NAME.partial` and renames it once complete, so an
//! aborted run leaves its unfinished artifact labeled as such.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{builtin_seeds, expand_prompts, load_seeds, AugmentError, LmAugmentConfig, LmAugmentStats};
use crate::composer::{make_complementary_en, Complementary, ComposeError, ComposePlan, Manifest, DEFAULT_TARGET_FORM};
use crate::filters::{filter_corpus, FilterConfig, FilterStats, TrigramScorer};
use crate::genderlex::{classify_de, classify_en, normalize_de, EnClass, FormKind, Lexicon, PatternSet};
use crate::mtclient::{BatchConfig, LanguageModel, Translator};
use crate::rewrite_en::VerbTable;
use crate::roundtrip::{
    build_pseudo_sources, check_merge_locality, MergeConfig, RoundTripOutcome, RoundtripError, RoundtripMode,
    RoundTripTrace, RoundtripOptions, TagCompliance,
};
use crate::textcore::{read_segments, write_jsonl, Origin, ParallelRecord, Segment, TextError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Roundtrip(#[from] RoundtripError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    BackwardEn,
    RoundtripPlain,
    RoundtripMerged,
    RoundtripLm,
    RoundtripGc,
    RoundtripAll,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::BackwardEn,
        Preset::RoundtripPlain,
        Preset::RoundtripMerged,
        Preset::RoundtripLm,
        Preset::RoundtripGc,
        Preset::RoundtripAll,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::BackwardEn => "backward-en",
            Preset::RoundtripPlain => "roundtrip-plain",
            Preset::RoundtripMerged => "roundtrip-merged",
            Preset::RoundtripLm => "roundtrip-lm",
            Preset::RoundtripGc => "roundtrip-gc",
            Preset::RoundtripAll => "roundtrip-all",
        }
    }

    pub fn lang(self) -> &'static str {
        match self {
            Preset::BackwardEn => "en",
            _ => "de",
        }
    }

    /// The compose plan, with bundle paths relative to the output directory.
    pub fn plan_text(self) -> &'static str {
        match self {
            Preset::BackwardEn => include_str!("../plans/backward-en.cfg"),
            Preset::RoundtripPlain => include_str!("../plans/roundtrip-plain.cfg"),
            Preset::RoundtripMerged => include_str!("../plans/roundtrip-merged.cfg"),
            Preset::RoundtripLm => include_str!("../plans/roundtrip-lm.cfg"),
            Preset::RoundtripGc => include_str!("../plans/roundtrip-gc.cfg"),
            Preset::RoundtripAll => include_str!("../plans/roundtrip-all.cfg"),
        }
    }

    fn merges(self) -> bool {
        self != Preset::RoundtripPlain
    }

    fn feminine(self) -> bool {
        matches!(self, Preset::RoundtripGc | Preset::RoundtripAll)
    }

    fn lm(self) -> bool {
        matches!(self, Preset::RoundtripLm | Preset::RoundtripAll)
    }
}

impl FromStr for Preset {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| PipelineError::UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub preset: Preset,
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub filter: FilterConfig,
    pub merge: MergeConfig,
    pub batch: BatchConfig,
    pub pivot: String,
    /// Target convention for German records; `None` keeps targets as written.
    pub normalize: Option<FormKind>,
    /// Seed nouns file; the bundled list when `None`.
    pub lm_seeds: Option<PathBuf>,
    /// At most this many LM sentences enter the round trip.
    pub lm_limit: usize,
    pub lm_max_tokens: usize,
}

impl PipelineConfig {
    pub fn new(preset: Preset, input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            preset,
            input: input.into(),
            out_dir: out_dir.into(),
            seed: 1,
            filter: FilterConfig::for_lang(preset.lang()),
            merge: MergeConfig::default(),
            batch: BatchConfig::default(),
            pivot: "en".to_string(),
            normalize: Some(DEFAULT_TARGET_FORM),
            lm_seeds: None,
            lm_limit: 100,
            lm_max_tokens: LmAugmentConfig::default().max_tokens,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectStats {
    pub gender_fair: usize,
    /// English sentences with gendered but not fair wording; unused.
    pub gendered: usize,
    pub non_gendered: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundtripStats {
    pub segments: usize,
    pub merged: usize,
    pub matched_all: usize,
    pub matched_all_rate: f64,
    pub locality_violations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feminine_tag: Option<TagCompliance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub artifact: String,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub preset: Preset,
    pub seed: u64,
    pub stages: Vec<StageReport>,
    pub filter: FilterStats,
    pub detect: DetectStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roundtrip: Option<RoundtripStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lm: Option<LmAugmentStats>,
    pub manifest: Manifest,
}

struct Artifacts {
    dir: PathBuf,
    stages: Vec<StageReport>,
}

impl Artifacts {
    fn write(&mut self, stage: &str, name: &str, records: usize, body: &[u8]) -> Result<(), TextError> {
        let path = self.dir.join(name);
        let partial = self.dir.join(format!("{name}.partial"));
        std::fs::write(&partial, body).map_err(|e| TextError::io(&partial, e))?;
        std::fs::rename(&partial, &path).map_err(|e| TextError::io(&path, e))?;
        self.stages.push(StageReport {
            stage: stage.to_string(),
            artifact: name.to_string(),
            records,
        });
        Ok(())
    }

    fn jsonl<T: Serialize>(&mut self, stage: &str, name: &str, items: &[T]) -> Result<(), TextError> {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, items).map_err(|e| TextError::io(&self.dir.join(name), e))?;
        self.write(stage, name, items.len(), &buf)
    }

    fn lines(&mut self, stage: &str, name: &str, segs: &[Segment]) -> Result<(), TextError> {
        let mut body = String::new();
        for s in segs {
            body.push_str(&s.text);
            body.push('\n');
        }
        self.write(stage, name, segs.len(), body.as_bytes())
    }
}

fn records(outcomes: &[RoundTripOutcome]) -> Vec<ParallelRecord> {
    outcomes.iter().map(|o| o.record.clone()).collect()
}

fn copies(segs: &[Segment], patterns: &PatternSet, normalize: Option<FormKind>) -> Vec<ParallelRecord> {
    segs.iter()
        .map(|s| {
            let trg = match normalize {
                Some(k) => normalize_de(&s.text, patterns, k),
                None => s.text.clone(),
            };
            ParallelRecord::new(s.text.clone(), trg, Origin::Copy)
        })
        .collect()
}

/// German targets through the preset's round trips; writes the bundles
/// under `prefix` and returns the traces' statistics.
#[allow(clippy::too_many_arguments)]
fn roundtrip_bundles(
    art: &mut Artifacts,
    prefix: &str,
    segs: &[Segment],
    cfg: &PipelineConfig,
    mt: &dyn Translator,
    patterns: &PatternSet,
    stats: &mut RoundtripStats,
    traces: &mut Vec<RoundTripTrace>,
) -> Result<(), PipelineError> {
    let opts = RoundtripOptions {
        mode: RoundtripMode::Plain,
        pivot: cfg.pivot.clone(),
        merge: cfg.preset.merges(),
        merge_cfg: cfg.merge,
        normalize_target: cfg.normalize,
        batch: cfg.batch,
    };
    let masc = build_pseudo_sources(segs, mt, patterns, &opts)?;
    for o in &masc {
        stats.segments += 1;
        if let Some(m) = &o.trace.merge {
            stats.merged += 1;
            stats.matched_all += usize::from(m.matched_all);
            stats.locality_violations += usize::from(!check_merge_locality(&o.trace.target, m));
        }
    }
    art.jsonl("augment", &format!("bundle_{prefix}masc.jsonl"), &records(&masc))?;
    traces.extend(masc.into_iter().map(|o| o.trace));
    if cfg.preset.feminine() {
        let fem_opts = RoundtripOptions {
            mode: RoundtripMode::TagF,
            ..opts
        };
        let fem = build_pseudo_sources(segs, mt, patterns, &fem_opts)?;
        let tc = stats.feminine_tag.get_or_insert_with(TagCompliance::default);
        for o in &fem {
            if let Some(m) = &o.trace.merge {
                tc.add(&o.trace.target, m, patterns);
            }
        }
        art.jsonl("augment", &format!("bundle_{prefix}fem.jsonl"), &records(&fem))?;
        traces.extend(fem.into_iter().map(|o| o.trace));
    }
    art.jsonl("augment", &format!("bundle_{prefix}copy.jsonl"), &copies(segs, patterns, cfg.normalize))?;
    Ok(())
}

/// Runs filter, detect, augment and compose for `cfg.preset`, writing every
/// artifact into `cfg.out_dir`.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    mt: &dyn Translator,
    lm: &dyn LanguageModel,
) -> Result<PipelineReport, PipelineError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| TextError::io(&cfg.out_dir, e))?;
    let mut art = Artifacts {
        dir: cfg.out_dir.clone(),
        stages: Vec::new(),
    };
    let lang = cfg.preset.lang();

    let input: Vec<Segment> = read_segments(&cfg.input, lang)?.collect::<Result<_, _>>()?;
    let (kept, filter) = filter_corpus(input, &cfg.filter, &TrigramScorer::bundled());
    art.lines("filter", "filtered.txt", &kept)?;

    let patterns = PatternSet::builtin();
    let lex = Lexicon::builtin();
    let mut detect = DetectStats::default();
    let mut fair = Vec::new();
    let mut plain = Vec::new();
    let mut detected = Vec::with_capacity(kept.len());
    for seg in kept {
        let seg = if lang == "en" {
            let c = classify_en(&seg, &lex);
            seg.with_label(c.as_str())
        } else {
            classify_de(&seg, &patterns)
                .labels()
                .into_iter()
                .fold(seg, |s, l| s.with_label(l))
        };
        if seg.has_label(EnClass::GenderFair.as_str()) {
            detect.gender_fair += 1;
            fair.push(seg.clone());
        } else if seg.has_label(EnClass::NonGendered.as_str()) {
            detect.non_gendered += 1;
            plain.push(seg.clone());
        } else {
            detect.gendered += 1;
        }
        detected.push(seg);
    }
    art.jsonl("detect", "detected.jsonl", &detected)?;
    let pool: Vec<ParallelRecord> = plain
        .iter()
        .map(|s| ParallelRecord::new(s.text.clone(), s.text.clone(), Origin::NonGendered))
        .collect();
    art.jsonl("detect", "nongendered.jsonl", &pool)?;

    let mut roundtrip = None;
    let mut lm_stats = None;
    if lang == "en" {
        let texts: Vec<&str> = fair.iter().map(|s| s.text.as_str()).collect();
        let Complementary { masc, fem, copy } = make_complementary_en(&texts, &lex, &VerbTable::default());
        art.jsonl("augment", "bundle_masc.jsonl", &masc)?;
        art.jsonl("augment", "bundle_fem.jsonl", &fem)?;
        art.jsonl("augment", "bundle_copy.jsonl", &copy)?;
    } else {
        let mut stats = RoundtripStats::default();
        let mut traces = Vec::new();
        roundtrip_bundles(&mut art, "", &fair, cfg, mt, &patterns, &mut stats, &mut traces)?;
        if cfg.preset.lm() {
            let seeds = match &cfg.lm_seeds {
                Some(p) => load_seeds(p)?,
                None => builtin_seeds(),
            };
            let lm_cfg = LmAugmentConfig {
                max_tokens: cfg.lm_max_tokens,
                seed: cfg.seed,
            };
            let (mut lm_segs, s) = expand_prompts(&seeds, lm, &patterns, &lm_cfg)?;
            lm_segs.truncate(cfg.lm_limit);
            art.lines("augment", "lm_fair.txt", &lm_segs)?;
            roundtrip_bundles(&mut art, "lm_", &lm_segs, cfg, mt, &patterns, &mut stats, &mut traces)?;
            lm_stats = Some(s);
        }
        stats.matched_all_rate = if stats.merged == 0 {
            0.0
        } else {
            stats.matched_all as f64 / stats.merged as f64
        };
        art.jsonl("augment", "roundtrip_trace.jsonl", &traces)?;
        roundtrip = Some(stats);
    }

    let plan_text = format!("shuffle_seed = {}\n{}", cfg.seed, cfg.preset.plan_text());
    art.write("compose", "plan.cfg", 0, plan_text.as_bytes())?;
    let plan = ComposePlan::parse(&plan_text, &cfg.out_dir, "plan.cfg")?;
    let composed = plan.run()?;
    art.jsonl("compose", "train.jsonl", &composed.records)?;
    let manifest_json = serde_json::to_string_pretty(&composed.manifest).expect("serializable") + "\n";
    art.write("compose", "manifest.json", composed.manifest.total, manifest_json.as_bytes())?;

    let report = PipelineReport {
        preset: cfg.preset,
        seed: cfg.seed,
        stages: art.stages.clone(),
        filter,
        detect,
        roundtrip,
        lm: lm_stats,
        manifest: composed.manifest,
    };
    let body = serde_json::to_string_pretty(&report).expect("serializable") + "\n";
    art.write("report", "report.json", 0, body.as_bytes())?;
    Ok(report)
}

