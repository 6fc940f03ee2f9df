// Copyright 2026 The ljp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! `ljp` command line: argument parsing, config resolution and dispatch.
//!
//! Settings resolve in the order flag, environment variable, config file,
//! built-in default.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod server;
pub mod stage;

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use ljp_core::datasets::{DateRange, TierSet};
use ljp_core::ingest::CourtTier;
use ljp_core::labeler::{BinaryVariant, Task};
use ljp_core::prompts::TemplateKind;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::pipeline::{ClassifyInputs, ExplainInputs, OutputFormat};

#[derive(Debug, Parser)]
#[command(name = "ljp", version, about = "Legal judgment prediction pipeline")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, env = "LJP_CONFIG")]
    pub config: Option<PathBuf>,
    /// Directory holding every artifact and manifest of the run.
    #[arg(long, global = true, env = "LJP_RUN_DIR")]
    pub run_dir: Option<PathBuf>,
    /// Seed for every random draw (default 13).
    #[arg(long, global = true, env = "LJP_SEED")]
    pub seed: Option<u64>,
    /// Proceed despite stale, inconsistent or mismatched upstream artifacts.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Strip metadata, extract bodies, clean tokens and length-filter.
    Ingest(IngestArgs),
    /// Assign weak decision labels from the closing words of each body.
    Label(LabelArgs),
    /// Seeded train/validation/test partition.
    Split(SplitArgs),
    /// Per-bucket dataset statistics.
    Stats(FormatArgs),
    /// Overlapping token windows for every split bucket.
    Chunk(ChunkArgs),
    /// Render prompts and query an inference backend.
    Predict(PredictArgs),
    /// Macro precision, recall and F1 of predictions.
    EvalClassify(EvalClassifyArgs),
    /// Lexical and embedding scores of generated explanations.
    EvalExplain(EvalExplainArgs),
    /// Serve the rating API (creates the task store on first run).
    AnnotateServe(ServeArgs),
    /// Write ratings and per-model score distributions.
    AnnotateExport(ExportArgs),
    /// Walk every manifest in the run directory and check digests.
    Verify,
    /// Write a deterministic synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, env = "LJP_CORPUS")]
    pub corpus: Option<PathBuf>,
    /// records | text
    #[arg(long, env = "LJP_INGEST_FORMAT")]
    pub format: Option<String>,
    #[arg(long, env = "LJP_INGEST_DEFAULT_TIER")]
    pub default_tier: Option<CourtTier>,
    #[arg(long, env = "LJP_INGEST_MIN_WORDS")]
    pub min_words: Option<usize>,
    #[arg(long, env = "LJP_INGEST_MAX_WORDS")]
    pub max_words: Option<usize>,
    #[arg(long, env = "LJP_INGEST_KEEP_UNMARKED")]
    pub keep_unmarked: Option<bool>,
    #[arg(long, env = "LJP_INGEST_RULES")]
    pub rules: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long, env = "LJP_LABELER_WINDOW_WORDS")]
    pub window_words: Option<usize>,
    #[arg(long, env = "LJP_LABELER_CONTEXT_RADIUS")]
    pub context_radius: Option<usize>,
    #[arg(long, env = "LJP_LABELER_NEGATION_RADIUS")]
    pub negation_radius: Option<usize>,
    #[arg(long, env = "LJP_LABELER_LEXICONS")]
    pub lexicons: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Train,validation,test percentages, e.g. 70,10,20.
    #[arg(long, env = "LJP_SPLIT_RATIO", value_delimiter = ',', num_args = 3)]
    pub ratio: Option<Vec<u32>>,
    #[arg(long, env = "LJP_SPLIT_TASK")]
    pub task: Option<Task>,
    #[arg(long, env = "LJP_SPLIT_VARIANT")]
    pub variant: Option<BinaryVariant>,
    /// Cumulative tier prefix, e.g. SCI, SCI+HC, all.
    #[arg(long, env = "LJP_SPLIT_TIERS")]
    pub tiers: Option<TierSet>,
    /// Inclusive range START..END held out as a temporal test set.
    #[arg(long, env = "LJP_SPLIT_TEMPORAL_TEST")]
    pub temporal_test: Option<DateRange>,
    #[arg(long, env = "LJP_SPLIT_STRATIFY")]
    pub stratify: Option<bool>,
}

#[derive(Debug, Args)]
pub struct FormatArgs {
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ChunkArgs {
    #[arg(long, env = "LJP_CHUNKER_WINDOW")]
    pub window: Option<usize>,
    #[arg(long, env = "LJP_CHUNKER_OVERLAP")]
    pub overlap: Option<usize>,
    #[arg(long, env = "LJP_CHUNKER_PAD_FINAL")]
    pub pad_final: Option<bool>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// t1..t4 or a template name.
    #[arg(long, env = "LJP_PROMPT_TEMPLATE")]
    pub template: Option<TemplateKind>,
    /// keyword | echo | pipe | socket
    #[arg(long, env = "LJP_PROMPT_BACKEND")]
    pub backend: Option<String>,
    #[arg(long, env = "LJP_PROMPT_MODEL_ID")]
    pub model_id: Option<String>,
    /// Program for the pipe backend.
    #[arg(long, env = "LJP_PROMPT_COMMAND")]
    pub command: Option<String>,
    /// host:port for the socket backend.
    #[arg(long, env = "LJP_PROMPT_ADDR")]
    pub addr: Option<String>,
    /// none | head:N | tail:N
    #[arg(long, env = "LJP_PROMPT_TRUNCATION")]
    pub truncation: Option<String>,
    #[arg(long, env = "LJP_PROMPT_PARALLELISM")]
    pub parallelism: Option<usize>,
    #[arg(long, env = "LJP_PROMPT_BUCKET")]
    pub bucket: Option<String>,
    #[arg(long, env = "LJP_PROMPT_TIMEOUT_MS")]
    pub timeout_ms: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalClassifyArgs {
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
    /// `{case_id, label}` lines; defaults to the split's labels.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Prediction lines; defaults to the run's predictions.
    #[arg(long)]
    pub pred: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalExplainArgs {
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
    #[arg(long, env = "LJP_REFERENCES")]
    pub references: Option<PathBuf>,
    /// Exported ratings; adds a mean rating column.
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// hashing | none | command
    #[arg(long, env = "LJP_METRICS_EMBEDDER")]
    pub embedder: Option<String>,
    #[arg(long, env = "LJP_METRICS_BLEU_SMOOTHING")]
    pub bleu_smoothing: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "LJP_ANNOTATE_BIND")]
    pub bind: Option<String>,
    #[arg(long, env = "LJP_ANNOTATE_STORE")]
    pub store: Option<PathBuf>,
    #[arg(long, env = "LJP_ANNOTATE_SAMPLE")]
    pub sample: Option<usize>,
    #[arg(long, env = "LJP_ANNOTATE_EXCERPT_WORDS")]
    pub excerpt_words: Option<usize>,
    /// Built web UI assets to serve next to the API.
    #[arg(long, env = "LJP_ANNOTATE_STATIC_DIR")]
    pub static_dir: Option<PathBuf>,
    #[arg(long, env = "LJP_PROMPT_MODEL_ID")]
    pub model_id: Option<String>,
    /// Create the task store and exit.
    #[arg(long)]
    pub create_only: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, env = "LJP_ANNOTATE_STORE")]
    pub store: Option<PathBuf>,
    /// Output directory; defaults to `<store>/export`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub n_docs: usize,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// File config (if any) with global and per-command overrides applied.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.paths.run_dir, cli.run_dir.clone());
    set(&mut cfg.seed, cli.seed);
    match &cli.command {
        Command::Ingest(a) => {
            cfg.paths.corpus = a.corpus.clone().or(cfg.paths.corpus);
            set(&mut cfg.ingest.format, a.format.clone());
            set(&mut cfg.ingest.default_tier, a.default_tier);
            set(&mut cfg.ingest.min_words, a.min_words);
            set(&mut cfg.ingest.max_words, a.max_words);
            set(&mut cfg.ingest.keep_unmarked, a.keep_unmarked);
            cfg.ingest.rules = a.rules.clone().or(cfg.ingest.rules);
        }
        Command::Label(a) => {
            set(&mut cfg.labeler.window_words, a.window_words);
            set(&mut cfg.labeler.context_radius, a.context_radius);
            set(&mut cfg.labeler.negation_radius, a.negation_radius);
            cfg.labeler.lexicons = a.lexicons.clone().or(cfg.labeler.lexicons);
        }
        Command::Split(a) => {
            if let Some(r) = &a.ratio {
                cfg.split.ratio = [r[0], r[1], r[2]];
            }
            set(&mut cfg.split.task, a.task);
            set(&mut cfg.split.variant, a.variant);
            set(&mut cfg.split.tiers, a.tiers);
            cfg.split.temporal_test = a.temporal_test.or(cfg.split.temporal_test);
            set(&mut cfg.split.stratify, a.stratify);
        }
        Command::Chunk(a) => {
            set(&mut cfg.chunker.window, a.window);
            set(&mut cfg.chunker.overlap, a.overlap);
            set(&mut cfg.chunker.pad_final, a.pad_final);
        }
        Command::Predict(a) => {
            set(&mut cfg.prompt.template, a.template);
            set(&mut cfg.prompt.backend, a.backend.clone());
            cfg.prompt.model_id = a.model_id.clone().or(cfg.prompt.model_id);
            cfg.prompt.command = a.command.clone().or(cfg.prompt.command);
            cfg.prompt.addr = a.addr.clone().or(cfg.prompt.addr);
            set(&mut cfg.prompt.truncation, a.truncation.clone());
            set(&mut cfg.prompt.parallelism, a.parallelism);
            set(&mut cfg.prompt.bucket, a.bucket.clone());
            set(&mut cfg.prompt.timeout_ms, a.timeout_ms);
        }
        Command::EvalExplain(a) => {
            cfg.paths.references = a.references.clone().or(cfg.paths.references);
            set(&mut cfg.metrics.embedder, a.embedder.clone());
            set(&mut cfg.metrics.bleu_smoothing, a.bleu_smoothing.clone());
        }
        Command::AnnotateServe(a) => {
            set(&mut cfg.annotate.bind, a.bind.clone());
            cfg.annotate.store = a.store.clone().or(cfg.annotate.store);
            set(&mut cfg.annotate.sample, a.sample);
            set(&mut cfg.annotate.excerpt_words, a.excerpt_words);
            cfg.annotate.static_dir = a.static_dir.clone().or(cfg.annotate.static_dir);
            cfg.prompt.model_id = a.model_id.clone().or(cfg.prompt.model_id);
        }
        Command::AnnotateExport(a) => {
            cfg.annotate.store = a.store.clone().or(cfg.annotate.store);
        }
        Command::Stats(_) | Command::EvalClassify(_) | Command::Verify | Command::Synth(_) => {}
    }
    Ok(cfg)
}

/// Run one command and return what it prints on stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let cfg = resolve_config(cli)?;
    let force = cli.force;
    match &cli.command {
        Command::Ingest(_) => pipeline::ingest(&cfg, force),
        Command::Label(_) => pipeline::label(&cfg, force),
        Command::Split(_) => pipeline::split(&cfg, force).map(|(m, _)| m),
        Command::Stats(a) => pipeline::stats(&cfg, force, a.format),
        Command::Chunk(_) => pipeline::chunk(&cfg, force),
        Command::Predict(_) => pipeline::predict(&cfg, force),
        Command::EvalClassify(a) => pipeline::eval_classify(
            &cfg,
            force,
            a.format,
            &ClassifyInputs {
                gold: a.gold.clone(),
                pred: a.pred.clone(),
            },
        ),
        Command::EvalExplain(a) => pipeline::eval_explain(
            &cfg,
            force,
            a.format,
            &ExplainInputs {
                references: a.references.clone(),
                ratings: a.ratings.clone(),
            },
        ),
        Command::AnnotateServe(a) => {
            let store = Arc::new(pipeline::open_or_create_store(&cfg, force)?);
            let n = store.tasks().len();
            if a.create_only {
                return Ok(format!("annotate: store with {n} tasks ready\n"));
            }
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Server(e.to_string()))?;
            rt.block_on(server::serve(
                store,
                &cfg.annotate.bind,
                cfg.annotate.static_dir.clone(),
            ))
            .map_err(|e| CliError::Server(e.to_string()))?;
            Ok(format!("annotate: served {n} tasks\n"))
        }
        Command::AnnotateExport(a) => pipeline::annotate_export(&cfg, force, a.out.clone()),
        Command::Verify => pipeline::verify(&cfg),
        Command::Synth(a) => pipeline::synth(&a.out, a.n_docs, cfg.seed),
    }
}
