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

//! Few-shot and instruction prompts, inference backends and the output
//! parser.

mod backend;
mod parse;

pub use backend::{
    infer, EchoStub, FlakyStub, GenerationRequest, GenerationResponse, InferError, InferOutcome, InferenceBackend,
    KeywordStub, PipeBackend, RetryPolicy, SocketBackend,
};
pub use parse::{parse_prediction, ParseRule, ParsedOutput, Prediction};

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{sha256_hex, whitespace_spans};

const TEMPLATES_TOML: &str = include_str!("../../config/templates.toml");
const INSTRUCTIONS_TOML: &str = include_str!("../../config/instructions.toml");
const EXEMPLARS_TOML: &str = include_str!("../../config/exemplars.toml");

pub const POOL_SIZE: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("config parse error: {0}")]
    Config(String),
    #[error("instruction pool `{pool}` has {got} entries, expected {POOL_SIZE}")]
    PoolSize { pool: String, got: usize },
    #[error("template `{0}` is not defined")]
    MissingTemplate(TemplateKind),
    #[error("template `{kind}` needs exactly 2 exemplars, got {got}")]
    Exemplars { kind: TemplateKind, got: usize },
    #[error("template `{0}` needs an instruction")]
    MissingInstruction(TemplateKind),
    #[error("case text is empty")]
    EmptyCase,
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    /// Template 1: two exemplars, list output `[prediction, explanation]`.
    FewshotPredExpl,
    /// Template 2: two exemplars, bare 0/1 output.
    FewshotPred,
    /// Template 3: instruction-tuned, prediction only.
    InstrPred,
    /// Template 4: instruction-tuned, prediction with explanation.
    InstrPredExpl,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 4] = [
        TemplateKind::FewshotPredExpl,
        TemplateKind::FewshotPred,
        TemplateKind::InstrPred,
        TemplateKind::InstrPredExpl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateKind::FewshotPredExpl => "fewshot_pred_expl",
            TemplateKind::FewshotPred => "fewshot_pred",
            TemplateKind::InstrPred => "instr_pred",
            TemplateKind::InstrPredExpl => "instr_pred_expl",
        }
    }

    pub fn is_fewshot(self) -> bool {
        matches!(self, TemplateKind::FewshotPredExpl | TemplateKind::FewshotPred)
    }

    pub fn expects_explanation(self) -> bool {
        matches!(self, TemplateKind::FewshotPredExpl | TemplateKind::InstrPredExpl)
    }

    /// Pool the instruction is drawn from, for instruction templates.
    pub fn pool(self) -> Option<PoolTask> {
        match self {
            TemplateKind::InstrPred => Some(PoolTask::Prediction),
            TemplateKind::InstrPredExpl => Some(PoolTask::PredictionExplanation),
            _ => None,
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fewshot_pred_expl" | "t1" | "1" => Ok(TemplateKind::FewshotPredExpl),
            "fewshot_pred" | "t2" | "2" => Ok(TemplateKind::FewshotPred),
            "instr_pred" | "t3" | "3" => Ok(TemplateKind::InstrPred),
            "instr_pred_expl" | "t4" | "4" => Ok(TemplateKind::InstrPredExpl),
            o => Err(format!("unknown template `{o}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
struct TemplateSource {
    body: String,
    #[serde(default)]
    exemplar: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
struct TemplateFile {
    version: u32,
    #[serde(flatten)]
    templates: HashMap<String, TemplateSource>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub kind: TemplateKind,
    pub body: String,
    /// Layout of one exemplar block (few-shot templates).
    pub exemplar: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub version: u32,
    templates: HashMap<TemplateKind, PromptTemplate>,
}

impl TemplateSet {
    pub fn parse(source: &str) -> Result<Self, PromptError> {
        let file: TemplateFile = toml::from_str(source).map_err(|e| PromptError::Config(e.to_string()))?;
        let mut templates = HashMap::new();
        for (name, src) in file.templates {
            let kind: TemplateKind = name.parse().map_err(PromptError::Config)?;
            if kind.is_fewshot() && src.exemplar.is_none() {
                return Err(PromptError::Config(format!(
                    "template `{kind}` lacks an exemplar layout"
                )));
            }
            templates.insert(
                kind,
                PromptTemplate {
                    kind,
                    body: src.body,
                    exemplar: src.exemplar,
                },
            );
        }
        for kind in TemplateKind::ALL {
            if !templates.contains_key(&kind) {
                return Err(PromptError::MissingTemplate(kind));
            }
        }
        Ok(TemplateSet {
            version: file.version,
            templates,
        })
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let s = std::fs::read_to_string(path).map_err(|e| PromptError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&s)
    }

    pub fn get(&self, kind: TemplateKind) -> &PromptTemplate {
        &self.templates[&kind]
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet::parse(TEMPLATES_TOML).expect("bundled templates are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolTask {
    Prediction,
    PredictionExplanation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstructionPool {
    pub task: PoolTask,
    instructions: Vec<String>,
}

impl InstructionPool {
    pub fn new(task: PoolTask, instructions: Vec<String>) -> Result<Self, PromptError> {
        if instructions.len() != POOL_SIZE {
            return Err(PromptError::PoolSize {
                pool: format!("{task:?}"),
                got: instructions.len(),
            });
        }
        Ok(InstructionPool { task, instructions })
    }

    pub fn instructions(&self) -> &[String] {
        &self.instructions
    }

    pub fn get(&self, index: usize) -> Option<&str> {
        self.instructions.get(index).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstructionPools {
    pub version: u32,
    pub prediction: InstructionPool,
    pub prediction_explanation: InstructionPool,
}

impl InstructionPools {
    pub fn parse(source: &str) -> Result<Self, PromptError> {
        #[derive(Deserialize)]
        struct File {
            version: u32,
            prediction: Vec<String>,
            prediction_explanation: Vec<String>,
        }
        let f: File = toml::from_str(source).map_err(|e| PromptError::Config(e.to_string()))?;
        Ok(InstructionPools {
            version: f.version,
            prediction: InstructionPool::new(PoolTask::Prediction, f.prediction)?,
            prediction_explanation: InstructionPool::new(PoolTask::PredictionExplanation, f.prediction_explanation)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let s = std::fs::read_to_string(path).map_err(|e| PromptError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&s)
    }

    pub fn pool(&self, task: PoolTask) -> &InstructionPool {
        match task {
            PoolTask::Prediction => &self.prediction,
            PoolTask::PredictionExplanation => &self.prediction_explanation,
        }
    }
}

impl Default for InstructionPools {
    fn default() -> Self {
        InstructionPools::parse(INSTRUCTIONS_TOML).expect("bundled instruction pools are valid")
    }
}

/// Uniform draw from the pool; the same seed always gives the same index.
pub fn sample_instruction(pool: &InstructionPool, seed: u64) -> (usize, &str) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let i = rng.random_range(0..pool.instructions.len());
    (i, &pool.instructions[i])
}

/// Per-case seed so each case gets its own draw under one run seed.
pub fn derive_seed(run_seed: u64, case_id: &str) -> u64 {
    let h = sha256_hex(format!("{run_seed}:{case_id}"));
    u64::from_str_radix(&h[..16], 16).expect("hex prefix")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub case_proceeding: String,
    pub prediction: u8,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExemplarSet {
    pub version: u32,
    #[serde(rename = "exemplar")]
    pub exemplars: Vec<Exemplar>,
}

impl ExemplarSet {
    pub fn parse(source: &str) -> Result<Self, PromptError> {
        toml::from_str(source).map_err(|e| PromptError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let s = std::fs::read_to_string(path).map_err(|e| PromptError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&s)
    }

    /// Digest of the canonical JSON form, recorded per run.
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("exemplars serialize"))
    }
}

impl Default for ExemplarSet {
    fn default() -> Self {
        ExemplarSet::parse(EXEMPLARS_TOML).expect("bundled exemplars are valid")
    }
}

/// Single-pass `{slot}` substitution. Substituted values are never
/// rescanned, so braces inside case text survive untouched.
fn fill_slots(body: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            slots
                .iter()
                .find(|(k, _)| *k == &after[..close])
                .map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn render_prompt(
    template: &PromptTemplate,
    case_text: &str,
    exemplars: Option<&[Exemplar]>,
    instruction: Option<&str>,
) -> Result<String, PromptError> {
    if case_text.trim().is_empty() {
        return Err(PromptError::EmptyCase);
    }
    let kind = template.kind;
    let mut exemplar_block = String::new();
    if kind.is_fewshot() {
        let ex = exemplars.unwrap_or(&[]);
        if ex.len() != 2 {
            return Err(PromptError::Exemplars { kind, got: ex.len() });
        }
        let layout = template.exemplar.as_deref().unwrap_or("");
        let blocks: Vec<String> = ex
            .iter()
            .map(|e| {
                let p = e.prediction.to_string();
                fill_slots(
                    layout,
                    &[
                        ("case_proceeding", &e.case_proceeding),
                        ("prediction", &p),
                        ("explanation", &e.explanation),
                    ],
                )
            })
            .collect();
        exemplar_block = blocks.join("\n");
    }
    let instruction = match (kind.pool(), instruction) {
        (Some(_), None) => return Err(PromptError::MissingInstruction(kind)),
        (_, i) => i.unwrap_or(""),
    };
    Ok(fill_slots(
        &template.body,
        &[
            ("exemplars", &exemplar_block),
            ("instruction", instruction),
            ("case_proceeding", case_text),
        ],
    ))
}

/// How an over-long case is cut before it is placed in a prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "words", rename_all = "snake_case")]
pub enum Truncation {
    None,
    Head(usize),
    Tail(usize),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Tail(crate::labeler::DEFAULT_WINDOW_WORDS)
    }
}

impl FromStr for Truncation {
    type Err = String;
    /// `none`, `head:N`, `tail:N`, or `head`/`tail` (750 words).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (mode, n) = match s.split_once(':') {
            Some((m, n)) => (
                m,
                Some(n.parse::<usize>().map_err(|e| format!("bad word count `{n}`: {e}"))?),
            ),
            None => (s, None),
        };
        let n = n.unwrap_or(crate::labeler::DEFAULT_WINDOW_WORDS);
        match mode {
            "none" => Ok(Truncation::None),
            "head" => Ok(Truncation::Head(n)),
            "tail" => Ok(Truncation::Tail(n)),
            o => Err(format!("unknown truncation `{o}` (none|head:N|tail:N)")),
        }
    }
}

pub fn truncate(text: &str, how: Truncation) -> &str {
    let spans = whitespace_spans(text);
    match how {
        Truncation::None => text,
        Truncation::Head(n) if spans.len() > n => &text[..spans[n - 1].1],
        Truncation::Tail(n) if spans.len() > n && n > 0 => &text[spans[spans.len() - n].0..],
        Truncation::Tail(0) | Truncation::Head(0) => "",
        _ => text,
    }
}

/// Everything needed to render prompts for a run.
#[derive(Debug, Clone)]
pub struct PromptContext {
    pub templates: TemplateSet,
    pub pools: InstructionPools,
    pub exemplars: ExemplarSet,
    pub truncation: Truncation,
    pub run_seed: u64,
}

impl Default for PromptContext {
    fn default() -> Self {
        PromptContext {
            templates: TemplateSet::default(),
            pools: InstructionPools::default(),
            exemplars: ExemplarSet::default(),
            truncation: Truncation::default(),
            run_seed: crate::datasets::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub text: String,
    pub digest: String,
    pub instruction_index: Option<usize>,
    pub seed: u64,
}

impl PromptContext {
    pub fn render(&self, kind: TemplateKind, case_id: &str, case_text: &str) -> Result<RenderedPrompt, PromptError> {
        let seed = derive_seed(self.run_seed, case_id);
        let drawn = kind.pool().map(|t| sample_instruction(self.pools.pool(t), seed));
        let text = render_prompt(
            self.templates.get(kind),
            truncate(case_text, self.truncation),
            Some(&self.exemplars.exemplars),
            drawn.map(|(_, s)| s),
        )?;
        Ok(RenderedPrompt {
            digest: sha256_hex(&text),
            text,
            instruction_index: drawn.map(|(i, _)| i),
            seed,
        })
    }
}

/// One line of the predictions JSONL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub case_id: String,
    pub predicted: Prediction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
    pub raw_output: String,
    pub prompt_digest: String,
    pub template: TemplateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction_index: Option<usize>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<ParseRule>,
}
