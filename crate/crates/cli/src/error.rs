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

use std::io;
use std::path::Path;

use ljp_core::annotate::AnnotateError;
use ljp_core::chunker::ChunkError;
use ljp_core::datasets::DatasetError;
use ljp_core::ingest::IngestError;
use ljp_core::labeler::LexiconError;
use ljp_core::metrics::MetricError;
use ljp_core::prompts::{InferError, PromptError};
use ljp_core::provenance::ProvenanceError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("`{artifact}` not found; run `ljp {stage}` first")]
    MissingUpstream { stage: String, artifact: String },
    #[error("`{artifact}` changed since `ljp {stage}` wrote it; re-run `ljp {stage}` or pass --force")]
    StaleInput { stage: String, artifact: String },
    #[error("`ljp {stage}` used a different version of `{artifact}`; re-run `ljp {stage}` or pass --force")]
    Inconsistent { stage: String, artifact: String },
    #[error("inputs were produced with different `{stage}` settings ({left} vs {right}); re-run the pipeline from `ljp {stage}` or pass --force")]
    ConfigMismatch { stage: String, left: String, right: String },
    #[error("provenance chain has {0} problem(s)")]
    ChainBroken(usize),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path} line {line}: {message}")]
    Record { path: String, line: usize, message: String },
    #[error("inference failed for `{case_id}`: {source}")]
    Inference {
        case_id: String,
        #[source]
        source: InferError,
    },
    #[error("server: {0}")]
    Server(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Annotate(#[from] AnnotateError),
    #[error(transparent)]
    Provenance(#[from] ProvenanceError),
}

impl CliError {
    pub fn io(path: &Path, e: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    /// Short kind tag printed with the error summary.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::MissingUpstream { .. } => "missing-upstream",
            CliError::StaleInput { .. } => "stale-input",
            CliError::Inconsistent { .. } => "inconsistent-inputs",
            CliError::ConfigMismatch { .. } => "config-mismatch",
            CliError::ChainBroken(_) => "provenance",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Record { .. } => "record",
            CliError::Inference { .. } => "inference",
            CliError::Server(_) => "server",
            CliError::Ingest(_) => "ingest",
            CliError::Lexicon(_) => "labeler",
            CliError::Dataset(_) => "dataset",
            CliError::Chunk(_) => "chunker",
            CliError::Prompt(_) => "prompt",
            CliError::Metric(_) => "metrics",
            CliError::Annotate(_) => "annotate",
            CliError::Provenance(_) => "provenance",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::MissingUpstream { .. }
            | CliError::StaleInput { .. }
            | CliError::Inconsistent { .. }
            | CliError::ConfigMismatch { .. }
            | CliError::ChainBroken(_) => 3,
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}
