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

//! Run configuration: one TOML file, overridden by environment variables
//! and flags (flags win).

use std::fs;
use std::path::{Path, PathBuf};

use ljp_core::datasets::{DateRange, TierSet, DEFAULT_SEED};
use ljp_core::ingest::{CourtTier, DEFAULT_MAX_WORDS, DEFAULT_MIN_WORDS};
use ljp_core::labeler::{BinaryVariant, Task, DEFAULT_CONTEXT_RADIUS, DEFAULT_NEGATION_RADIUS, DEFAULT_WINDOW_WORDS};
use ljp_core::prompts::TemplateKind;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub ingest: IngestSettings,
    pub labeler: LabelerSettings,
    pub split: SplitSettings,
    pub chunker: ChunkSettings,
    pub prompt: PromptSettings,
    pub metrics: MetricsSettings,
    pub annotate: AnnotateSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SEED,
            paths: Paths::default(),
            ingest: IngestSettings::default(),
            labeler: LabelerSettings::default(),
            split: SplitSettings::default(),
            chunker: ChunkSettings::default(),
            prompt: PromptSettings::default(),
            metrics: MetricsSettings::default(),
            annotate: AnnotateSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let src = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&src).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub run_dir: PathBuf,
    pub references: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus: None,
            run_dir: PathBuf::from("run"),
            references: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSettings {
    /// `records` (JSON lines) or `text` (directory of .txt files).
    pub format: String,
    pub default_tier: CourtTier,
    pub min_words: usize,
    pub max_words: usize,
    pub keep_unmarked: bool,
    /// Replacement metadata rules file.
    pub rules: Option<PathBuf>,
}

impl Default for IngestSettings {
    fn default() -> Self {
        IngestSettings {
            format: "records".into(),
            default_tier: CourtTier::Sci,
            min_words: DEFAULT_MIN_WORDS,
            max_words: DEFAULT_MAX_WORDS,
            keep_unmarked: false,
            rules: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelerSettings {
    pub window_words: usize,
    pub context_radius: usize,
    pub negation_radius: usize,
    pub lexicons: Option<PathBuf>,
}

impl Default for LabelerSettings {
    fn default() -> Self {
        LabelerSettings {
            window_words: DEFAULT_WINDOW_WORDS,
            context_radius: DEFAULT_CONTEXT_RADIUS,
            negation_radius: DEFAULT_NEGATION_RADIUS,
            lexicons: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSettings {
    pub ratio: [u32; 3],
    pub task: Task,
    pub variant: BinaryVariant,
    pub tiers: TierSet,
    pub temporal_test: Option<DateRange>,
    pub stratify: bool,
}

impl Default for SplitSettings {
    fn default() -> Self {
        SplitSettings {
            ratio: [70, 10, 20],
            task: Task::Binary,
            variant: BinaryVariant::Single,
            tiers: TierSet::ALL,
            temporal_test: None,
            stratify: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkSettings {
    pub window: usize,
    pub overlap: usize,
    pub pad_final: bool,
}

impl Default for ChunkSettings {
    fn default() -> Self {
        ChunkSettings {
            window: ljp_core::chunker::DEFAULT_WINDOW,
            overlap: ljp_core::chunker::DEFAULT_OVERLAP,
            pad_final: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptSettings {
    pub template: TemplateKind,
    /// `none`, `head:N` or `tail:N` words of case text.
    pub truncation: String,
    /// `keyword`, `echo`, `pipe` or `socket`.
    pub backend: String,
    pub model_id: Option<String>,
    pub command: Option<String>,
    pub args: Vec<String>,
    pub addr: Option<String>,
    pub echo_reply: String,
    pub prompt_budget: usize,
    pub max_new_tokens: usize,
    pub temperature: f64,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub parallelism: usize,
    /// Split bucket to predict on.
    pub bucket: String,
    pub templates: Option<PathBuf>,
    pub instructions: Option<PathBuf>,
    pub exemplars: Option<PathBuf>,
}

impl Default for PromptSettings {
    fn default() -> Self {
        PromptSettings {
            template: TemplateKind::InstrPredExpl,
            truncation: "tail:750".into(),
            backend: "keyword".into(),
            model_id: None,
            command: None,
            args: Vec::new(),
            addr: None,
            echo_reply: "No clear decision generated.".into(),
            prompt_budget: 4096,
            max_new_tokens: 256,
            temperature: 0.0,
            timeout_ms: 30_000,
            max_retries: 3,
            parallelism: 4,
            bucket: "test".into(),
            templates: None,
            instructions: None,
            exemplars: None,
        }
    }
}

impl PromptSettings {
    pub fn model_id(&self) -> String {
        self.model_id
            .clone()
            .unwrap_or_else(|| format!("{}-stub", self.backend))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSettings {
    pub bleu_max_n: usize,
    /// `none` or `epsilon:E`.
    pub bleu_smoothing: String,
    /// `hashing`, `none` or `command`.
    pub embedder: String,
    pub embedder_command: Option<String>,
    pub embedder_args: Vec<String>,
}

impl Default for MetricsSettings {
    fn default() -> Self {
        MetricsSettings {
            bleu_max_n: 4,
            bleu_smoothing: "epsilon:0.1".into(),
            embedder: "hashing".into(),
            embedder_command: None,
            embedder_args: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotateSettings {
    pub sample: usize,
    pub excerpt_words: usize,
    /// Store directory; defaults to `<run_dir>/annotate`.
    pub store: Option<PathBuf>,
    pub bind: String,
    pub static_dir: Option<PathBuf>,
}

impl Default for AnnotateSettings {
    fn default() -> Self {
        AnnotateSettings {
            sample: 50,
            excerpt_words: ljp_core::annotate::DEFAULT_EXCERPT_WORDS,
            store: None,
            bind: "127.0.0.1:8080".into(),
            static_dir: None,
        }
    }
}
