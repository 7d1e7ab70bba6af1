mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fairforge::composer::ComposeError;
use fairforge::genderlex::FormKind;
use fairforge::mtclient::MtError;
use fairforge::pipeline::{PipelineError, Preset};
use fairforge::roundtrip::{RoundtripError, RoundtripMode};
use fairforge::textcore::TextError;

#[derive(Debug, Parser)]
#[command(name = "fairforge", version, about = "Build and score gender-fair rewriting corpora")]
pub struct Cli {
    /// Seed for every randomized stage.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads per stage (and concurrent MT batches).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Use the in-process mock backends even when backend URLs are set.
    #[arg(long, global = true)]
    pub mock: bool,
    /// Mock MT probability of masculinizing an untagged gender-fair form.
    #[arg(long, global = true, default_value_t = 0.9)]
    pub mock_bias: f64,
    /// key=value filter settings, read by `filter` and `pipeline`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Lang {
    De,
    En,
}

impl Lang {
    pub fn code(self) -> &'static str {
        match self {
            Lang::De => "de",
            Lang::En => "en",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GenderArg {
    F,
    M,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drop segments failing length, long-word, alphabet or language checks, then deduplicate.
    Filter {
        #[arg(long, value_enum, default_value = "de")]
        lang: Lang,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write rejection counts as JSON.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Label each line as gender-fair, gendered or non-gendered (JSONL out).
    Detect {
        #[arg(long, value_enum, default_value = "de")]
        lang: Lang,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// German pattern file replacing the built-in set.
        #[arg(long)]
        patterns: Option<PathBuf>,
        /// English lexicon TSV replacing the built-in table.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Rule-based English rewriting between gendered and gender-fair forms.
    RewriteEn {
        #[arg(long, value_enum, default_value = "forward")]
        direction: DirectionArg,
        /// Target gender for backward rewriting.
        #[arg(long, value_enum)]
        gender: Option<GenderArg>,
        /// Write every rewrite decision as JSONL.
        #[arg(long)]
        audit: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Pseudo sources for German gender-fair lines by round-trip translation.
    Roundtrip {
        #[arg(long, default_value = "en")]
        pivot: String,
        /// plain, tag_f or tag_m.
        #[arg(long, default_value = "plain")]
        mode: RoundtripMode,
        #[arg(long, default_value_t = 0.6)]
        cutoff: f64,
        /// Use back-translations verbatim instead of merging them.
        #[arg(long)]
        no_merge: bool,
        /// Rewrite targets to one convention (star, colon, gap, slash, binnen_i).
        #[arg(long)]
        normalize: Option<FormKind>,
        /// Write per-segment traces as JSONL.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Split records with pair forms into <f>/<m> tagged variants.
    Gendertag {
        /// Parallel records as JSONL.
        #[arg(long)]
        parallel: Option<PathBuf>,
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Prompt the language model with seed nouns and keep gender-fair sentences.
    LmAugment {
        /// One seed noun per line; the bundled list when absent.
        #[arg(long)]
        seeds: Option<PathBuf>,
        #[arg(long, default_value_t = 80)]
        max_tokens: usize,
        /// Keep at most this many sentences.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Mix bundles and non-gendered data per a plan file.
    Compose {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Corpus and per-category WER of a hypothesis file.
    Score {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// One line of comma- or space-separated categories per item.
        #[arg(long)]
        tags: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Split markers such as `*` off words before scoring.
        #[arg(long)]
        aggressive: bool,
    },
    /// Pairwise paired-bootstrap significance between systems.
    Significance {
        #[arg(long, num_args = 2.., required = true)]
        systems: Vec<PathBuf>,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        aggressive: bool,
    },
    /// Serve the mock MT and LM backends over HTTP.
    MtMockServe {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Run a preset end to end, writing every artifact to the output directory.
    Pipeline {
        #[arg(long)]
        preset: Preset,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        lm_seeds: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        lm_limit: usize,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
    },
}

/// Exit status for an error: 3 for a missing input, 4 for an unreachable
/// backend, 1 for anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    fn text(e: &TextError) -> Option<u8> {
        match e {
            TextError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => Some(3),
            _ => None,
        }
    }
    fn mt(e: &MtError) -> Option<u8> {
        matches!(e, MtError::Unreachable(_)).then_some(4)
    }
    fn roundtrip(e: &RoundtripError) -> Option<u8> {
        match e {
            RoundtripError::Mt(m) => mt(m),
            RoundtripError::NotGenderFair(_) => None,
        }
    }
    fn compose(e: &ComposeError) -> Option<u8> {
        match e {
            ComposeError::Text(t) => text(t),
            _ => None,
        }
    }
    for cause in err.chain() {
        let code = if let Some(io::MissingFile(_)) = cause.downcast_ref() {
            Some(3)
        } else if let Some(e) = cause.downcast_ref::<TextError>() {
            text(e)
        } else if let Some(e) = cause.downcast_ref::<MtError>() {
            mt(e)
        } else if let Some(e) = cause.downcast_ref::<RoundtripError>() {
            roundtrip(e)
        } else if let Some(e) = cause.downcast_ref::<ComposeError>() {
            compose(e)
        } else if let Some(e) = cause.downcast_ref::<PipelineError>() {
            match e {
                PipelineError::Text(t) => text(t),
                PipelineError::Roundtrip(r) => roundtrip(r),
                PipelineError::Compose(c) => compose(c),
                _ => None,
            }
        } else if let Some(e) = cause.downcast_ref::<std::io::Error>() {
            (e.kind() == std::io::ErrorKind::NotFound).then_some(3)
        } else {
            None
        };
        if let Some(c) = code {
            return c;
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("--jobs ignored: {e}");
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fairforge: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
