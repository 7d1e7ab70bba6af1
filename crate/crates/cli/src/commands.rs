use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context};
use fairforge::augment::{builtin_seeds, expand_prompts, gendertag_records, load_seeds, LmAugmentConfig};
use fairforge::composer::ComposePlan;
use fairforge::eval::{corpus_wer, mark_best, parse_tags, EvalSet};
use fairforge::filters::{filter_corpus, FilterConfig, TrigramScorer};
use fairforge::genderlex::{classify_de, classify_en, Gender, Lexicon, PatternSet};
use fairforge::mtclient::{
    lm_from_env, translator_from_env, BatchConfig, LanguageModel, LmRequest, MockConfig, MockLm, MockServer,
    MockTranslator, Translator,
};
use fairforge::pipeline::{run_pipeline, PipelineConfig};
use fairforge::rewrite_en::{backward_rewrite, forward_rewrite, VerbTable};
use fairforge::roundtrip::{build_pseudo_sources, MergeConfig, RoundtripOptions};
use fairforge::textcore::{parse_jsonl, write_jsonl, ParallelRecord, Segment, TokenizerMode};
use serde_json::json;

use crate::io::{aligned_lines, reader, require, segments, write_json, writer};
use crate::{Cli, Command, DirectionArg, GenderArg, Lang};

fn mock_config(cli: &Cli) -> MockConfig {
    MockConfig {
        seed: cli.seed(),
        bias: cli.mock_bias,
        ..MockConfig::default()
    }
}

fn translator(cli: &Cli) -> Arc<dyn Translator> {
    if cli.mock {
        Arc::new(MockTranslator::new(mock_config(cli)))
    } else {
        translator_from_env(mock_config(cli))
    }
}

fn language_model(cli: &Cli) -> Arc<dyn LanguageModel> {
    if cli.mock {
        Arc::new(MockLm)
    } else {
        lm_from_env()
    }
}

fn batch(cli: &Cli, batch_size: usize) -> BatchConfig {
    BatchConfig {
        batch_size,
        in_flight: cli.jobs.unwrap_or(BatchConfig::default().in_flight).max(1),
    }
}

fn patterns(path: Option<&Path>) -> anyhow::Result<PatternSet> {
    match path {
        Some(p) => {
            require(p)?;
            Ok(PatternSet::load(p)?)
        }
        None => Ok(PatternSet::builtin()),
    }
}

fn lexicon(path: Option<&Path>) -> anyhow::Result<Lexicon> {
    match path {
        Some(p) => {
            require(p)?;
            Ok(Lexicon::load(p)?)
        }
        None => Ok(Lexicon::builtin()),
    }
}

fn filter_config(cli: &Cli, lang: &str) -> anyhow::Result<FilterConfig> {
    match &cli.config {
        Some(p) => {
            require(p)?;
            let mut cfg = FilterConfig::load(p).with_context(|| format!("reading {}", p.display()))?;
            cfg.expected_lang = lang.to_string();
            Ok(cfg)
        }
        None => Ok(FilterConfig::for_lang(lang)),
    }
}

fn collect(path: Option<&Path>, lang: &str) -> anyhow::Result<Vec<Segment>> {
    Ok(segments(path, lang)?.collect::<Result<_, _>>()?)
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    if cli.config.is_some() && !matches!(cli.command, Command::Filter { .. } | Command::Pipeline { .. }) {
        log::warn!("--config is read only by filter and pipeline");
    }
    match &cli.command {
        Command::Filter {
            lang,
            input,
            output,
            stats,
        } => {
            let cfg = filter_config(cli, lang.code())?;
            let segs = collect(input.as_deref(), lang.code())?;
            let (kept, s) = filter_corpus(segs, &cfg, &TrigramScorer::bundled());
            let mut w = writer(output.as_deref())?;
            for seg in &kept {
                writeln!(w, "{}", seg.text)?;
            }
            w.flush()?;
            log::info!("filter: kept {} of {}", s.kept, s.input);
            if let Some(p) = stats {
                write_json(Some(p), &s)?;
            }
        }
        Command::Detect {
            lang,
            input,
            output,
            patterns: pat,
            lexicon: lex,
        } => {
            let set = patterns(pat.as_deref())?;
            let lex = lexicon(lex.as_deref())?;
            let mut w = writer(output.as_deref())?;
            for seg in segments(input.as_deref(), lang.code())? {
                let seg = seg?;
                let seg = match lang {
                    Lang::En => {
                        let c = classify_en(&seg, &lex);
                        seg.with_label(c.as_str())
                    }
                    Lang::De => classify_de(&seg, &set)
                        .labels()
                        .into_iter()
                        .fold(seg, |s, l| s.with_label(l)),
                };
                write_jsonl(&mut w, [&seg])?;
            }
            w.flush()?;
        }
        Command::RewriteEn {
            direction,
            gender,
            audit,
            lexicon: lex,
            input,
            output,
        } => {
            let lex = lexicon(lex.as_deref())?;
            let verbs = VerbTable::default();
            let gender = match (direction, gender) {
                (DirectionArg::Backward, None) => bail!("--direction backward needs --gender f|m"),
                (_, Some(GenderArg::F)) => Gender::F,
                (_, _) => Gender::M,
            };
            let mut w = writer(output.as_deref())?;
            let mut log_w = audit.as_deref().map(|p| writer(Some(p))).transpose()?;
            for seg in segments(input.as_deref(), "en")? {
                let seg = seg?;
                let (out, decisions) = match direction {
                    DirectionArg::Forward => forward_rewrite(&seg.text, &lex, &verbs),
                    DirectionArg::Backward => backward_rewrite(&seg.text, gender, &lex, &verbs),
                };
                writeln!(w, "{out}")?;
                if let Some(a) = log_w.as_mut() {
                    serde_json::to_writer(&mut *a, &json!({ "line": seg.id, "decisions": decisions }))?;
                    writeln!(a)?;
                }
            }
            w.flush()?;
            if let Some(mut a) = log_w {
                a.flush()?;
            }
        }
        Command::Roundtrip {
            pivot,
            mode,
            cutoff,
            no_merge,
            normalize,
            trace,
            batch_size,
            patterns: pat,
            input,
            output,
        } => {
            let set = patterns(pat.as_deref())?;
            let all = collect(input.as_deref(), "de")?;
            let before = all.len();
            let fair: Vec<Segment> = all
                .into_iter()
                .filter(|s| !set.find_matches(&s.text).is_empty())
                .collect();
            if fair.len() < before {
                log::warn!("roundtrip: skipped {} lines without a gender-fair form", before - fair.len());
            }
            let opts = RoundtripOptions {
                mode: *mode,
                pivot: pivot.clone(),
                merge: !no_merge,
                merge_cfg: MergeConfig {
                    cutoff: *cutoff,
                    ..MergeConfig::default()
                },
                normalize_target: *normalize,
                batch: batch(cli, *batch_size),
            };
            let mt = translator(cli);
            let outcomes = build_pseudo_sources(&fair, mt.as_ref(), &set, &opts)?;
            let mut w = writer(output.as_deref())?;
            write_jsonl(&mut w, outcomes.iter().map(|o| &o.record))?;
            w.flush()?;
            if let Some(p) = trace {
                let mut t = writer(Some(p))?;
                write_jsonl(&mut t, outcomes.iter().map(|o| &o.trace))?;
                t.flush()?;
            }
        }
        Command::Gendertag {
            parallel,
            patterns: pat,
            output,
        } => {
            let set = patterns(pat.as_deref())?;
            let name = parallel.as_deref().unwrap_or(Path::new("<stdin>"));
            let records: Vec<ParallelRecord> = parse_jsonl(reader(parallel.as_deref())?, name)?;
            let (tagged, stats) = gendertag_records(&records, &set);
            let mut w = writer(output.as_deref())?;
            write_jsonl(&mut w, &tagged)?;
            w.flush()?;
            log::info!("gendertag: {stats:?}");
        }
        Command::LmAugment {
            seeds,
            max_tokens,
            limit,
            output,
        } => {
            let seeds = match seeds {
                Some(p) => {
                    require(p)?;
                    load_seeds(p)?
                }
                None => builtin_seeds(),
            };
            let lm = language_model(cli);
            let cfg = LmAugmentConfig {
                max_tokens: *max_tokens,
                seed: cli.seed(),
            };
            let (mut segs, stats) = expand_prompts(&seeds, lm.as_ref(), &PatternSet::builtin(), &cfg)?;
            if stats.failed_seeds == stats.seeds {
                // Surface the backend's own error rather than an empty file.
                lm.generate(&LmRequest {
                    prompt: format!("Ein*e {}*in", seeds[0]),
                    max_tokens: *max_tokens,
                    seed: cli.seed(),
                })?;
                bail!("every language model request failed");
            }
            if let Some(n) = limit {
                segs.truncate(*n);
            }
            let mut w = writer(output.as_deref())?;
            for s in &segs {
                writeln!(w, "{}", s.text)?;
            }
            w.flush()?;
            log::info!("lm-augment: {stats:?}");
        }
        Command::Compose { plan, out, manifest } => {
            require(plan)?;
            let mut plan = ComposePlan::load(plan)?;
            if let Some(seed) = cli.seed {
                plan.shuffle_seed = seed;
            }
            let composed = plan.run()?;
            let mut w = writer(Some(out))?;
            write_jsonl(&mut w, &composed.records)?;
            w.flush()?;
            match manifest {
                Some(p) => write_json(Some(p), &composed.manifest)?,
                None => log::info!("compose: {} records", composed.manifest.total),
            }
        }
        Command::Score {
            hyp,
            reference,
            tags,
            out,
            aggressive,
        } => {
            let hyps = aligned_lines(hyp)?;
            let refs = aligned_lines(reference)?;
            let tags: Vec<Vec<String>> = match tags {
                Some(p) => aligned_lines(p)?.iter().map(|l| parse_tags(l)).collect(),
                None => Vec::new(),
            };
            let set = EvalSet::from_texts(&hyps, &refs, &tags)?;
            write_json(out.as_deref(), &corpus_wer(&set, mode(*aggressive)))?;
        }
        Command::Significance {
            systems,
            reference,
            samples,
            out,
            aggressive,
        } => {
            let refs = aligned_lines(reference)?;
            let mut sets = Vec::with_capacity(systems.len());
            for p in systems {
                let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                sets.push((name, EvalSet::from_texts(&aligned_lines(p)?, &refs, &[])?));
            }
            let m = mark_best(&sets, *samples, cli.seed(), mode(*aggressive))?;
            write_json(out.as_deref(), &m)?;
        }
        Command::MtMockServe { host, port } => {
            let server = MockServer::start(
                &format!("{host}:{port}"),
                Arc::new(MockTranslator::new(mock_config(cli))),
                Arc::new(MockLm),
            )
                .map_err(|e| anyhow::anyhow!("binding {host}:{port}: {e}"))?;
            let mut out = std::io::stdout();
            writeln!(out, "{}", server.url())?;
            out.flush()?;
            server.join();
        }
        Command::Pipeline {
            preset,
            input,
            out,
            lm_seeds,
            lm_limit,
            batch_size,
        } => {
            require(input)?;
            if let Some(p) = lm_seeds {
                require(p)?;
            }
            let mut cfg = PipelineConfig::new(*preset, input, out);
            cfg.seed = cli.seed();
            cfg.filter = filter_config(cli, preset.lang())?;
            cfg.batch = batch(cli, *batch_size);
            cfg.lm_seeds = lm_seeds.clone();
            cfg.lm_limit = *lm_limit;
            let report = run_pipeline(&cfg, translator(cli).as_ref(), language_model(cli).as_ref())?;
            eprintln!(
                "{}: {} records ({} non-gendered) in {}",
                preset.as_str(),
                report.manifest.total,
                report.manifest.non_gendered,
                out.display()
            );
        }
    }
    Ok(())
}

fn mode(aggressive: bool) -> TokenizerMode {
    if aggressive {
        TokenizerMode::Aggressive
    } else {
        TokenizerMode::MarkerPreserving
    }
}
