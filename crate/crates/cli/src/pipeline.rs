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

//! The batch commands. Each reads only documented line-delimited files from
//! the run directory, writes its outputs, and records a stage manifest.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use ljp_core::annotate::{create_tasks, AnnotationStore, StoreMeta};
use ljp_core::chunker::{chunk_text, ChunkConfig, ChunkRecord, WhitespaceTokenizer};
use ljp_core::datasets::{
    build_split, compute_stats, temporal_stats, CorpusFunnel, DatasetSplit, SplitConfig, StatsTable, TemporalTest,
};
use ljp_core::ingest::{self, load_raw, CleanJudgment, FilterConfig, IngestConfig, InputFormat, MetadataRules};
use ljp_core::labeler::{label_case, LabelOutcome, LabeledCase, LabelerConfig, Lexicons};
use ljp_core::metrics::{
    confusion, evaluate_explanations, explanation_records, explanation_table, likert_aggregate, macro_report,
    BleuSmoothing, CommandEmbedder, EmbeddingProvider, ExplanationConfig, ExplanationPair, HashingEmbedder,
    LikertScore,
};
use ljp_core::prompts::{
    infer, parse_prediction, EchoStub, ExemplarSet, GenerationRequest, InferenceBackend, InstructionPools, KeywordStub,
    PipeBackend, Prediction, PredictionRecord, PromptContext, RetryPolicy, SocketBackend, TemplateSet, Truncation,
};
use ljp_core::provenance::verify_chain;
use ljp_core::synthetic::{self, ReferenceRecord, SyntheticConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::stage::{read_jsonl, write_file, write_jsonl, Stage};

pub const CLEAN: &str = "clean.jsonl";
pub const DROPPED: &str = "dropped.jsonl";
pub const INGEST_COUNTS: &str = "ingest_counts.json";
pub const LABELED: &str = "labeled.jsonl";
pub const UNLABELABLE: &str = "unlabelable.jsonl";
pub const FUNNEL_JSON: &str = "funnel.json";
pub const FUNNEL_TXT: &str = "funnel.txt";
pub const SPLIT_DIR: &str = "split";
pub const SPLIT_META: &str = "split/split.json";
pub const TEMPORAL: &str = "split/temporal.json";
pub const STATS_TXT: &str = "stats.txt";
pub const STATS_JSONL: &str = "stats.jsonl";
pub const PREDICTIONS: &str = "predictions.jsonl";
pub const EVAL_CLASSIFY_TXT: &str = "eval_classify.txt";
pub const EVAL_CLASSIFY_JSONL: &str = "eval_classify.jsonl";
pub const EVAL_EXPLAIN_TXT: &str = "eval_explain.txt";
pub const EVAL_EXPLAIN_JSONL: &str = "eval_explain.jsonl";
pub const ANNOTATE_DIR: &str = "annotate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Table,
    Records,
}

fn pick(format: OutputFormat, table: String, records: String) -> String {
    match format {
        OutputFormat::Table => table,
        OutputFormat::Records => records,
    }
}

fn records_text<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
        .collect()
}

fn split_manifest_files(with_temporal: bool) -> Vec<String> {
    let mut v: Vec<String> = ["split.json", "train.manifest", "val.manifest", "test.manifest"]
        .iter()
        .map(|f| format!("{SPLIT_DIR}/{f}"))
        .collect();
    if with_temporal {
        v.push(TEMPORAL.to_string());
    }
    v
}

fn load_lexicons(cfg: &RunConfig, stage: &mut Stage) -> Result<Lexicons, CliError> {
    match &cfg.labeler.lexicons {
        Some(p) => {
            stage.external(p)?;
            Ok(Lexicons::load(p)?)
        }
        None => Ok(Lexicons::default()),
    }
}

fn labeler_config(cfg: &RunConfig) -> LabelerConfig {
    LabelerConfig {
        window_words: cfg.labeler.window_words,
        context_radius: cfg.labeler.context_radius,
        negation_radius: cfg.labeler.negation_radius,
    }
}

pub fn split_config(cfg: &RunConfig) -> SplitConfig {
    SplitConfig {
        ratio: cfg.split.ratio,
        seed: cfg.seed,
        task: cfg.split.task,
        variant: cfg.split.variant,
        tiers: cfg.split.tiers,
        temporal_test: cfg.split.temporal_test,
        stratify: cfg.split.stratify,
    }
}

pub fn ingest(cfg: &RunConfig, force: bool) -> Result<String, CliError> {
    let corpus = cfg
        .paths
        .corpus
        .as_ref()
        .ok_or_else(|| CliError::Config("no corpus path (set paths.corpus or pass --corpus)".into()))?;
    let mut st = Stage::new("ingest", &cfg.paths.run_dir, force)?;
    st.external(corpus)?;
    let rules = match &cfg.ingest.rules {
        Some(p) => {
            st.external(p)?;
            MetadataRules::load(p)?
        }
        None => MetadataRules::default(),
    };
    let format = InputFormat::from_str(&cfg.ingest.format).map_err(CliError::Config)?;
    let loaded = load_raw(corpus, format, cfg.ingest.default_tier)?;
    for e in &loaded.errors {
        log::warn!("skipped record: {e}");
    }
    let icfg = IngestConfig {
        rules,
        filters: FilterConfig {
            min_words: cfg.ingest.min_words,
            max_words: cfg.ingest.max_words,
            keep_unmarked: cfg.ingest.keep_unmarked,
        },
    };
    let out = ingest::run(&loaded.judgments, &icfg);
    let mut funnel = CorpusFunnel::default();
    loaded.judgments.iter().for_each(|r| funnel.add_raw(r.court_tier));
    out.kept.iter().for_each(|c| funnel.add_preprocessed(c.court_tier));
    write_jsonl(&st.path(CLEAN), &out.kept)?;
    write_jsonl(&st.path(DROPPED), &out.dropped)?;
    write_file(
        &st.path(INGEST_COUNTS),
        &(serde_json::to_string_pretty(&funnel).expect("funnel serializes") + "\n"),
    )?;
    st.finish(
        &cfg.ingest,
        cfg.seed,
        &[CLEAN.into(), DROPPED.into(), INGEST_COUNTS.into()],
    )?;
    Ok(format!(
        "ingest: {} raw, {} kept, {} dropped, {} unreadable records\n",
        loaded.judgments.len(),
        out.kept.len(),
        out.dropped.len(),
        loaded.errors.len()
    ))
}

#[derive(Serialize, Deserialize)]
struct UnlabelableRecord {
    id: String,
}

pub fn label(cfg: &RunConfig, force: bool) -> Result<String, CliError> {
    let mut st = Stage::new("label", &cfg.paths.run_dir, force)?;
    let clean_path = st.input("ingest", CLEAN)?;
    let counts_path = st.input("ingest", INGEST_COUNTS)?;
    st.check_lineage()?;
    let lexicons = load_lexicons(cfg, &mut st)?;
    let lcfg = labeler_config(cfg);
    let clean: Vec<CleanJudgment> = read_jsonl(&clean_path)?;
    let outcomes: Vec<LabelOutcome> = clean.into_par_iter().map(|c| label_case(c, &lexicons, &lcfg)).collect();
    let mut labeled = Vec::new();
    let mut unlabelable = Vec::new();
    for o in outcomes {
        match o {
            LabelOutcome::Labeled(l) => labeled.push(l),
            LabelOutcome::Unlabelable { id } => unlabelable.push(UnlabelableRecord { id }),
        }
    }
    let counts = std::fs::read_to_string(&counts_path).map_err(|e| CliError::io(&counts_path, e))?;
    let mut funnel: CorpusFunnel =
        serde_json::from_str(&counts).map_err(|e| CliError::Config(format!("{INGEST_COUNTS}: {e}")))?;
    labeled.iter().for_each(|l| funnel.add_labeled(l.case.court_tier));
    let table = funnel.to_table().render();
    write_jsonl(&st.path(LABELED), &labeled)?;
    write_jsonl(&st.path(UNLABELABLE), &unlabelable)?;
    write_file(
        &st.path(FUNNEL_JSON),
        &(serde_json::to_string_pretty(&funnel).expect("funnel serializes") + "\n"),
    )?;
    write_file(&st.path(FUNNEL_TXT), &table)?;
    #[derive(Serialize)]
    struct Settings<'a> {
        labeler: &'a crate::config::LabelerSettings,
    }
    st.finish(
        &Settings { labeler: &cfg.labeler },
        cfg.seed,
        &[
            LABELED.into(),
            UNLABELABLE.into(),
            FUNNEL_JSON.into(),
            FUNNEL_TXT.into(),
        ],
    )?;
    Ok(format!(
        "label: {} labeled, {} unlabelable\n{table}",
        labeled.len(),
        unlabelable.len()
    ))
}

fn load_labeled(st: &mut Stage) -> Result<Vec<LabeledCase>, CliError> {
    let p = st.input("label", LABELED)?;
    read_jsonl(&p)
}

fn load_split(st: &mut Stage) -> Result<DatasetSplit, CliError> {
    for f in split_manifest_files(false) {
        st.input("split", &f)?;
    }
    Ok(DatasetSplit::read(&st.path(SPLIT_DIR))?)
}

pub fn split(cfg: &RunConfig, force: bool) -> Result<(String, DatasetSplit), CliError> {
    let mut st = Stage::new("split", &cfg.paths.run_dir, force)?;
    let cases = load_labeled(&mut st)?;
    st.check_lineage()?;
    let scfg = split_config(cfg);
    let (split, temporal) = build_split(&cases, &scfg)?;
    split.write(&st.path(SPLIT_DIR))?;
    let temporal_path = st.path(TEMPORAL);
    match &temporal {
        Some(t) => write_file(
            &temporal_path,
            &(serde_json::to_string_pretty(t).expect("temporal serializes") + "\n"),
        )?,
        None if temporal_path.exists() => {
            std::fs::remove_file(&temporal_path).map_err(|e| CliError::io(&temporal_path, e))?
        }
        None => {}
    }
    st.finish(&scfg, cfg.seed, &split_manifest_files(temporal.is_some()))?;
    let [a, b, c] = split.sizes();
    let mut msg = format!(
        "split: train={a} val={b} test={c} hash={}\n",
        &split.manifest_hash[..16]
    );
    if let Some(t) = &temporal {
        msg.push_str(&format!(
            "temporal test: {} cases, {} undated\n",
            t.ids.len(),
            t.undated
        ));
    }
    Ok((msg, split))
}

pub fn stats(cfg: &RunConfig, force: bool, format: OutputFormat) -> Result<String, CliError> {
    let mut st = Stage::new("stats", &cfg.paths.run_dir, force)?;
    let cases = load_labeled(&mut st)?;
    let split = load_split(&mut st)?;
    let temporal: Option<TemporalTest> = if st.path(TEMPORAL).exists() {
        let p = st.input("split", TEMPORAL)?;
        let s = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
        Some(serde_json::from_str(&s).map_err(|e| CliError::Config(format!("{TEMPORAL}: {e}")))?)
    } else {
        None
    };
    st.check_lineage()?;
    let by_id: HashMap<&str, &LabeledCase> = cases.iter().map(|c| (c.id(), c)).collect();
    let mut tables: Vec<StatsTable> = vec![compute_stats(&split, &by_id)?];
    if let Some(t) = &temporal {
        let tc: Vec<&LabeledCase> = t.ids.iter().filter_map(|id| by_id.get(id.as_str()).copied()).collect();
        tables.push(temporal_stats(&tc, split.config.variant));
    }
    let table_text: String = tables.iter().map(|t| t.render() + "\n").collect();
    let records: Vec<_> = tables.iter().flat_map(|t| t.records()).collect();
    let records_txt = records_text(&records);
    write_file(&st.path(STATS_TXT), &table_text)?;
    write_file(&st.path(STATS_JSONL), &records_txt)?;
    st.finish(&(), cfg.seed, &[STATS_TXT.into(), STATS_JSONL.into()])?;
    Ok(pick(format, table_text, records_txt))
}

pub fn chunk(cfg: &RunConfig, force: bool) -> Result<String, CliError> {
    let mut st = Stage::new("chunk", &cfg.paths.run_dir, force)?;
    let cases = load_labeled(&mut st)?;
    let split = load_split(&mut st)?;
    st.check_lineage()?;
    let ccfg = ChunkConfig {
        window: cfg.chunker.window,
        overlap: cfg.chunker.overlap,
        pad_final: cfg.chunker.pad_final,
    };
    ccfg.validate()?;
    let by_id: HashMap<&str, &LabeledCase> = cases.iter().map(|c| (c.id(), c)).collect();
    let mut outputs = Vec::new();
    let mut msg = String::from("chunk:");
    for (bucket, ids) in split.buckets() {
        let per_case: Result<Vec<Vec<ChunkRecord>>, CliError> = ids
            .par_iter()
            .map(|id| {
                let case = by_id
                    .get(id.as_str())
                    .ok_or_else(|| ljp_core::datasets::DatasetError::UnknownId(id.clone()))?;
                let label = split.config.task_label(case.label);
                Ok(chunk_text(&case.case.body_text, &WhitespaceTokenizer, &ccfg)?
                    .into_iter()
                    .map(|c| ChunkRecord {
                        case_id: id.clone(),
                        index: c.index,
                        start: c.span.start,
                        end: c.span.end,
                        text: c.tokens.join(" "),
                        label,
                    })
                    .collect())
            })
            .collect();
        let records: Vec<ChunkRecord> = per_case?.into_iter().flatten().collect();
        let rel = format!("chunks/{bucket}.jsonl");
        write_jsonl(&st.path(&rel), &records)?;
        msg.push_str(&format!(" {bucket}={} chunks/{} cases", records.len(), ids.len()));
        outputs.push(rel);
    }
    st.finish(&cfg.chunker, cfg.seed, &outputs)?;
    msg.push('\n');
    Ok(msg)
}

fn prompt_context(cfg: &RunConfig, st: &mut Stage) -> Result<PromptContext, CliError> {
    let p = &cfg.prompt;
    let mut ctx = PromptContext {
        run_seed: cfg.seed,
        truncation: Truncation::from_str(&p.truncation).map_err(CliError::Config)?,
        ..PromptContext::default()
    };
    if let Some(path) = &p.templates {
        st.external(path)?;
        ctx.templates = TemplateSet::load(path)?;
    }
    if let Some(path) = &p.instructions {
        st.external(path)?;
        ctx.pools = InstructionPools::load(path)?;
    }
    if let Some(path) = &p.exemplars {
        st.external(path)?;
        ctx.exemplars = ExemplarSet::load(path)?;
    }
    Ok(ctx)
}

pub fn make_backend(cfg: &RunConfig, lexicons: Lexicons) -> Result<Box<dyn InferenceBackend>, CliError> {
    let p = &cfg.prompt;
    let timeout = Duration::from_millis(p.timeout_ms);
    let need = |what: &str, v: &Option<String>| {
        v.clone()
            .ok_or_else(|| CliError::Config(format!("backend `{}` needs prompt.{what}", p.backend)))
    };
    Ok(match p.backend.as_str() {
        "keyword" => Box::new(KeywordStub::new(lexicons, labeler_config(cfg))),
        "echo" => Box::new(EchoStub::new(p.echo_reply.clone())),
        "pipe" => Box::new(
            PipeBackend::spawn(&need("command", &p.command)?, &p.args, p.prompt_budget, timeout).map_err(|e| {
                CliError::Inference {
                    case_id: "-".into(),
                    source: e,
                }
            })?,
        ),
        "socket" => Box::new(SocketBackend::new(need("addr", &p.addr)?, p.prompt_budget, timeout)),
        o => {
            return Err(CliError::Config(format!(
                "unknown backend `{o}` (keyword|echo|pipe|socket)"
            )))
        }
    })
}

pub fn predict(cfg: &RunConfig, force: bool) -> Result<String, CliError> {
    let mut st = Stage::new("predict", &cfg.paths.run_dir, force)?;
    let cases = load_labeled(&mut st)?;
    let split = load_split(&mut st)?;
    st.check_lineage()?;
    let ctx = prompt_context(cfg, &mut st)?;
    let lexicons = load_lexicons(cfg, &mut st)?;
    let backend = make_backend(cfg, lexicons)?;
    let ids = split
        .bucket(&cfg.prompt.bucket)
        .ok_or_else(|| CliError::Config(format!("unknown bucket `{}` (train|val|test)", cfg.prompt.bucket)))?;
    let by_id: HashMap<&str, &LabeledCase> = cases.iter().map(|c| (c.id(), c)).collect();
    let kind = cfg.prompt.template;
    let policy = RetryPolicy {
        max_retries: cfg.prompt.max_retries,
        ..RetryPolicy::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.prompt.parallelism.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let backend: &dyn InferenceBackend = backend.as_ref();
    let results: Result<Vec<PredictionRecord>, CliError> = pool.install(|| {
        ids.par_iter()
            .map(|id| {
                let case = by_id
                    .get(id.as_str())
                    .ok_or_else(|| ljp_core::datasets::DatasetError::UnknownId(id.clone()))?;
                let prompt = ctx.render(kind, id, &case.case.body_text)?;
                let req = GenerationRequest {
                    prompt: prompt.text,
                    max_new_tokens: cfg.prompt.max_new_tokens,
                    temperature: cfg.prompt.temperature,
                };
                let out = infer(backend, &req, &policy).map_err(|source| CliError::Inference {
                    case_id: id.clone(),
                    source,
                })?;
                let parsed = parse_prediction(&out.text, kind.expects_explanation());
                Ok(PredictionRecord {
                    case_id: id.clone(),
                    predicted: parsed.predicted,
                    explanation: parsed.explanation,
                    raw_output: out.text,
                    prompt_digest: prompt.digest,
                    template: kind,
                    instruction_index: prompt.instruction_index,
                    seed: prompt.seed,
                    rule: Some(parsed.rule),
                })
            })
            .collect()
    });
    let mut records = results?;
    records.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    write_jsonl(&st.path(PREDICTIONS), &records)?;
    let no_decision = records.iter().filter(|r| r.predicted == Prediction::NoDecision).count();
    #[derive(Serialize)]
    struct Settings<'a> {
        template: &'a ljp_core::prompts::TemplateKind,
        truncation: &'a str,
        backend: &'a str,
        model_id: String,
        max_new_tokens: usize,
        temperature: f64,
        bucket: &'a str,
        exemplars: String,
    }
    st.finish(
        &Settings {
            template: &cfg.prompt.template,
            truncation: &cfg.prompt.truncation,
            backend: &cfg.prompt.backend,
            model_id: cfg.prompt.model_id(),
            max_new_tokens: cfg.prompt.max_new_tokens,
            temperature: cfg.prompt.temperature,
            bucket: &cfg.prompt.bucket,
            exemplars: ctx.exemplars.digest(),
        },
        cfg.seed,
        &[PREDICTIONS.into()],
    )?;
    Ok(format!(
        "predict: {} cases with {} via {}, {no_decision} NoDecision\n",
        records.len(),
        kind,
        backend.name()
    ))
}

/// Gold labels as `{case_id, label}` lines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoldRecord {
    pub case_id: String,
    pub label: u8,
}

/// Reads `{case_id, predicted}` (prediction records) or `{case_id, label}`.
fn read_predictions_loose(path: &Path) -> Result<HashMap<String, Prediction>, CliError> {
    let rows: Vec<serde_json::Value> = read_jsonl(path)?;
    let mut out = HashMap::new();
    for (i, v) in rows.into_iter().enumerate() {
        let bad = |m: &str| CliError::Record {
            path: path.display().to_string(),
            line: i + 1,
            message: m.to_string(),
        };
        let id = v
            .get("case_id")
            .and_then(|x| x.as_str())
            .ok_or_else(|| bad("missing case_id"))?;
        let raw = v
            .get("predicted")
            .or_else(|| v.get("label"))
            .ok_or_else(|| bad("missing predicted/label"))?;
        let p: Prediction = serde_json::from_value(raw.clone()).map_err(|e| bad(&e.to_string()))?;
        out.insert(id.to_string(), p);
    }
    Ok(out)
}

pub struct ClassifyInputs {
    pub gold: Option<PathBuf>,
    pub pred: Option<PathBuf>,
}

pub fn eval_classify(
    cfg: &RunConfig,
    force: bool,
    format: OutputFormat,
    inputs: &ClassifyInputs,
) -> Result<String, CliError> {
    let mut st = Stage::new("eval-classify", &cfg.paths.run_dir, force)?;
    let (gold, k): (Vec<GoldRecord>, usize) = match &inputs.gold {
        Some(p) => {
            st.external(p)?;
            let g: Vec<GoldRecord> = read_jsonl(p)?;
            let k = (g.iter().map(|r| r.label as usize).max().unwrap_or(0) + 1).max(cfg.split.task.num_classes());
            (g, k)
        }
        None => {
            let cases = load_labeled(&mut st)?;
            let split = load_split(&mut st)?;
            let by_id: HashMap<&str, &LabeledCase> = cases.iter().map(|c| (c.id(), c)).collect();
            let ids = split
                .bucket(&cfg.prompt.bucket)
                .ok_or_else(|| CliError::Config(format!("unknown bucket `{}`", cfg.prompt.bucket)))?;
            let g = ids
                .iter()
                .filter_map(|id| by_id.get(id.as_str()))
                .filter_map(|c| {
                    split.config.task_label(c.label).map(|label| GoldRecord {
                        case_id: c.id().to_string(),
                        label,
                    })
                })
                .collect();
            (g, split.config.task.num_classes())
        }
    };
    let pred_path = match &inputs.pred {
        Some(p) => {
            st.external(p)?;
            p.clone()
        }
        None => st.input("predict", PREDICTIONS)?,
    };
    st.check_lineage()?;
    let preds = read_predictions_loose(&pred_path)?;
    let gold_labels: Vec<u8> = gold.iter().map(|g| g.label).collect();
    let predicted: Vec<Prediction> = gold
        .iter()
        .map(|g| preds.get(&g.case_id).copied().unwrap_or(Prediction::NoDecision))
        .collect();
    let cm = confusion(&gold_labels, &predicted, k)?;
    let report = macro_report(&cm)?;
    let table = format!(
        "{}n={} abstained={}\n",
        report.to_table().render(),
        report.n,
        report.abstained
    );
    let records = records_text(&report.records());
    write_file(&st.path(EVAL_CLASSIFY_TXT), &table)?;
    write_file(&st.path(EVAL_CLASSIFY_JSONL), &records)?;
    st.finish(
        &serde_json::json!({ "classes": k }),
        cfg.seed,
        &[EVAL_CLASSIFY_TXT.into(), EVAL_CLASSIFY_JSONL.into()],
    )?;
    Ok(pick(format, table, records))
}

pub struct ExplainInputs {
    pub references: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
}

fn make_embedder(cfg: &RunConfig) -> Result<Option<Box<dyn EmbeddingProvider>>, CliError> {
    let m = &cfg.metrics;
    match m.embedder.as_str() {
        "none" => Ok(None),
        "hashing" => Ok(Some(Box::new(HashingEmbedder::default()))),
        "command" => {
            let cmd = m
                .embedder_command
                .as_ref()
                .ok_or_else(|| CliError::Config("embedder `command` needs metrics.embedder_command".into()))?;
            match CommandEmbedder::spawn(cmd, &m.embedder_args) {
                Ok(e) => Ok(Some(Box::new(e))),
                Err(e) => {
                    log::warn!("BERTScore omitted: {e}");
                    Ok(None)
                }
            }
        }
        o => Err(CliError::Config(format!(
            "unknown embedder `{o}` (hashing|none|command)"
        ))),
    }
}

pub fn parse_smoothing(s: &str) -> Result<BleuSmoothing, CliError> {
    match s {
        "none" => Ok(BleuSmoothing::None),
        _ => s
            .strip_prefix("epsilon:")
            .and_then(|e| e.parse::<f64>().ok())
            .filter(|e| *e > 0.0)
            .map(|epsilon| BleuSmoothing::AddEpsilon { epsilon })
            .ok_or_else(|| CliError::Config(format!("bad BLEU smoothing `{s}` (none|epsilon:E)"))),
    }
}

#[derive(Deserialize)]
struct RatingLine {
    model_id: String,
    score: LikertScore,
}

pub fn eval_explain(
    cfg: &RunConfig,
    force: bool,
    format: OutputFormat,
    inputs: &ExplainInputs,
) -> Result<String, CliError> {
    let mut st = Stage::new("eval-explain", &cfg.paths.run_dir, force)?;
    let pred_path = st.input("predict", PREDICTIONS)?;
    st.check_lineage()?;
    let refs_path = inputs
        .references
        .clone()
        .or_else(|| cfg.paths.references.clone())
        .ok_or_else(|| CliError::Config("no references file (set paths.references or pass --references)".into()))?;
    st.external(&refs_path)?;
    let refs: Vec<ReferenceRecord> = read_jsonl(&refs_path)?;
    let refs: HashMap<String, String> = refs.into_iter().map(|r| (r.case_id, r.explanation)).collect();
    let preds: Vec<PredictionRecord> = read_jsonl(&pred_path)?;
    let pairs: Vec<ExplanationPair> = preds
        .iter()
        .filter_map(|p| {
            let cand = p.explanation.as_ref()?;
            let reference = refs.get(&p.case_id)?;
            Some(ExplanationPair {
                case_id: p.case_id.clone(),
                candidate: cand.clone(),
                reference: reference.clone(),
            })
        })
        .collect();
    let ecfg = ExplanationConfig {
        bleu_max_n: cfg.metrics.bleu_max_n,
        bleu_smoothing: parse_smoothing(&cfg.metrics.bleu_smoothing)?,
        ..ExplanationConfig::default()
    };
    let embedder = make_embedder(cfg)?;
    let model = cfg.prompt.model_id();
    let mut report = evaluate_explanations(&model, &pairs, &ecfg, embedder.as_deref())?;
    if let Some(r) = &inputs.ratings {
        st.external(r)?;
        let lines: Vec<RatingLine> = read_jsonl(r)?;
        let scores: Vec<LikertScore> = lines.iter().filter(|l| l.model_id == model).map(|l| l.score).collect();
        if !scores.is_empty() {
            report.rating = Some(likert_aggregate(&scores)?.mean);
        }
    }
    let table = format!(
        "{}pairs={} smoothing={} embedder={}\n",
        explanation_table(std::slice::from_ref(&report)).render(),
        report.n,
        report.settings.bleu_smoothing,
        report.settings.embedder.as_deref().unwrap_or("-")
    );
    let records = records_text(&explanation_records(&report));
    write_file(&st.path(EVAL_EXPLAIN_TXT), &table)?;
    write_file(&st.path(EVAL_EXPLAIN_JSONL), &records)?;
    st.finish(
        &cfg.metrics,
        cfg.seed,
        &[EVAL_EXPLAIN_TXT.into(), EVAL_EXPLAIN_JSONL.into()],
    )?;
    Ok(pick(format, table, records))
}

fn store_dir(cfg: &RunConfig) -> PathBuf {
    cfg.annotate
        .store
        .clone()
        .unwrap_or_else(|| cfg.paths.run_dir.join(ANNOTATE_DIR))
}

/// Open the annotation store, creating it from the run's predictions on
/// first use.
pub fn open_or_create_store(cfg: &RunConfig, force: bool) -> Result<AnnotationStore, CliError> {
    let dir = store_dir(cfg);
    if dir.join("tasks.jsonl").exists() {
        return Ok(AnnotationStore::open(&dir)?);
    }
    let mut st = Stage::new("annotate-tasks", &cfg.paths.run_dir, force)?;
    let preds: Vec<PredictionRecord> = read_jsonl(&st.input("predict", PREDICTIONS)?)?;
    let cases = load_labeled(&mut st)?;
    st.check_lineage()?;
    let texts: HashMap<String, String> = cases.into_iter().map(|c| (c.case.id, c.case.body_text)).collect();
    let model = cfg.prompt.model_id();
    let tasks = create_tasks(
        &preds,
        &model,
        &texts,
        cfg.annotate.sample,
        cfg.seed,
        cfg.annotate.excerpt_words,
    )?;
    let meta = StoreMeta {
        run_id: model,
        seed: cfg.seed,
        sample: cfg.annotate.sample,
        excerpt_words: cfg.annotate.excerpt_words,
    };
    let store = AnnotationStore::create(&dir, meta, tasks)?;
    if let Ok(rel) = dir.join("tasks.jsonl").strip_prefix(&cfg.paths.run_dir) {
        let rel = rel.to_string_lossy().to_string();
        #[derive(Serialize)]
        struct Settings {
            sample: usize,
            excerpt_words: usize,
        }
        st.finish(
            &Settings {
                sample: cfg.annotate.sample,
                excerpt_words: cfg.annotate.excerpt_words,
            },
            cfg.seed,
            &[rel],
        )?;
    }
    Ok(store)
}

pub fn annotate_export(cfg: &RunConfig, force: bool, out: Option<PathBuf>) -> Result<String, CliError> {
    let dir = store_dir(cfg);
    if !dir.join("tasks.jsonl").exists() {
        return Err(CliError::MissingUpstream {
            stage: "annotate-serve".into(),
            artifact: dir.join("tasks.jsonl").display().to_string(),
        });
    }
    let store = AnnotationStore::open(&dir)?;
    let out = out.unwrap_or_else(|| dir.join("export"));
    let bundle = store.export();
    bundle.write(&out)?;
    if let Ok(rel) = out.strip_prefix(&cfg.paths.run_dir) {
        let st = Stage::new("annotate-export", &cfg.paths.run_dir, force)?;
        let rel = rel.to_string_lossy().to_string();
        let outputs: Vec<String> = ["ratings.jsonl", "distribution.json", "distribution.txt"]
            .iter()
            .map(|f| format!("{rel}/{f}"))
            .collect();
        st.finish(&serde_json::json!({ "run_id": bundle.run_id }), cfg.seed, &outputs)?;
    }
    Ok(format!(
        "annotate-export: {} ratings\n{}",
        bundle.ratings.len(),
        bundle.distribution_table().render()
    ))
}

pub fn verify(cfg: &RunConfig) -> Result<String, CliError> {
    let (manifests, issues) = verify_chain(&cfg.paths.run_dir)?;
    let mut msg = String::new();
    for m in &manifests {
        let bad = issues.iter().filter(|i| i.stage == m.stage).count();
        msg.push_str(&format!(
            "{:<16} {} outputs, {} inputs, {}\n",
            m.stage,
            m.outputs.len(),
            m.inputs.len(),
            if bad == 0 {
                "ok".to_string()
            } else {
                format!("{bad} problem(s)")
            }
        ));
    }
    for i in &issues {
        msg.push_str(&format!("  {}: {}: {}\n", i.stage, i.artifact, i.problem));
    }
    if issues.is_empty() {
        Ok(msg)
    } else {
        eprint!("{msg}");
        Err(CliError::ChainBroken(issues.len()))
    }
}

pub fn synth(out: &Path, n_docs: usize, seed: u64) -> Result<String, CliError> {
    let cases = synthetic::generate(&SyntheticConfig { n_docs, seed });
    write_file(&out.join("corpus.jsonl"), &synthetic::corpus_jsonl(&cases))?;
    write_file(&out.join("references.jsonl"), &synthetic::references_jsonl(&cases))?;
    Ok(format!(
        "synth: {} documents written to {}\n",
        cases.len(),
        out.display()
    ))
}
