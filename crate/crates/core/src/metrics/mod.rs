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

//! Classification and explanation-quality metrics, plus Likert
//! aggregation for expert ratings.

pub mod bertscore;
pub mod classification;
pub mod lexical;

pub use bertscore::{bertscore, CommandEmbedder, EmbedError, EmbeddingProvider, HashingEmbedder};
pub use classification::{confusion, macro_report, ClassScores, ConfusionMatrix, EvaluationReport};
pub use lexical::{bleu, meteor, rouge_l, rouge_n, BleuScore, BleuSmoothing, MeteorParams, Prf};

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::Table;
use crate::text::word_spans;

pub const LEXICAL_TOKENIZER: &str = "lex-v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("nothing to score")]
    Empty,
    #[error("class {class} outside 0..{k}")]
    ClassOutOfRange { class: u8, k: usize },
    #[error("bad matrix: {0}")]
    Shape(String),
    #[error("Likert score {0} outside 1..=5")]
    LikertRange(i64),
}

/// Lowercased alphanumeric runs; punctuation and whitespace separate.
pub fn lexical_tokens(text: &str) -> Vec<String> {
    word_spans(text).into_iter().map(|w| w.text).collect()
}

/// A validated 1-5 rating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct LikertScore(u8);

impl LikertScore {
    pub fn new(v: i64) -> Result<Self, MetricError> {
        if (1..=5).contains(&v) {
            Ok(LikertScore(v as u8))
        } else {
            Err(MetricError::LikertRange(v))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl<'de> Deserialize<'de> for LikertScore {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        LikertScore::new(v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for LikertScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikertSummary {
    pub n: usize,
    /// Rounded to two decimals.
    pub mean: f64,
    /// Counts for scores 1 through 5.
    pub distribution: [u64; 5],
}

pub fn likert_aggregate(scores: &[LikertScore]) -> Result<LikertSummary, MetricError> {
    if scores.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut distribution = [0u64; 5];
    for s in scores {
        distribution[s.0 as usize - 1] += 1;
    }
    let sum: u64 = scores.iter().map(|s| s.0 as u64).sum();
    let mean = (sum as f64 / scores.len() as f64 * 100.0).round() / 100.0;
    Ok(LikertSummary {
        n: scores.len(),
        mean,
        distribution,
    })
}

/// A generated explanation and its reference, keyed by case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationPair {
    pub case_id: String,
    pub candidate: String,
    pub reference: String,
}

/// F-scores in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplanationScores {
    pub rouge1_f: f64,
    pub rouge2_f: f64,
    pub rouge_l_f: f64,
    pub bleu: f64,
    pub meteor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bertscore_f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSettings {
    pub tokenizer: String,
    pub bleu_max_n: usize,
    pub bleu_smoothing: String,
    pub meteor: MeteorParams,
    pub meteor_matching: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedder: Option<String>,
    pub bertscore_rescaled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub model: String,
    pub n: usize,
    pub scores: ExplanationScores,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<f64>,
    pub settings: MetricSettings,
}

#[derive(Debug, Clone)]
pub struct ExplanationConfig {
    pub bleu_max_n: usize,
    pub bleu_smoothing: BleuSmoothing,
    pub meteor: MeteorParams,
}

impl Default for ExplanationConfig {
    fn default() -> Self {
        ExplanationConfig {
            bleu_max_n: 4,
            bleu_smoothing: BleuSmoothing::default(),
            meteor: MeteorParams::default(),
        }
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// ROUGE, METEOR and BERTScore are averaged per pair; BLEU is corpus
/// level. BERTScore is left out when no provider is given or it fails.
pub fn evaluate_explanations(
    model: &str,
    pairs: &[ExplanationPair],
    cfg: &ExplanationConfig,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<ExplanationReport, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::Empty);
    }
    let tokens: Vec<(Vec<String>, Vec<String>)> = pairs
        .par_iter()
        .map(|p| (lexical_tokens(&p.candidate), lexical_tokens(&p.reference)))
        .collect();
    let per_pair: Vec<[f64; 4]> = tokens
        .par_iter()
        .map(|(c, r)| {
            [
                rouge_n(c, r, 1).f,
                rouge_n(c, r, 2).f,
                rouge_l(c, r).f,
                meteor(c, r, &cfg.meteor),
            ]
        })
        .collect();
    let (cands, refs): (Vec<Vec<String>>, Vec<Vec<String>>) = tokens.into_iter().unzip();
    let b = bleu(&cands, &refs, cfg.bleu_max_n, cfg.bleu_smoothing)?;
    let bert = embedder.and_then(|e| {
        let scores: Result<Vec<f64>, EmbedError> = cands
            .iter()
            .zip(&refs)
            .map(|(c, r)| bertscore(c, r, e).map(|p| p.f))
            .collect();
        match scores {
            Ok(s) => Some(mean(s.into_iter())),
            Err(err) => {
                log::warn!("BERTScore omitted: {err}");
                None
            }
        }
    });
    let col = |i: usize| mean(per_pair.iter().map(|s| s[i]));
    Ok(ExplanationReport {
        model: model.to_string(),
        n: pairs.len(),
        scores: ExplanationScores {
            rouge1_f: col(0),
            rouge2_f: col(1),
            rouge_l_f: col(2),
            bleu: b.score,
            meteor: col(3),
            bertscore_f: bert,
        },
        rating: None,
        settings: MetricSettings {
            tokenizer: LEXICAL_TOKENIZER.into(),
            bleu_max_n: cfg.bleu_max_n,
            bleu_smoothing: b.smoothing,
            meteor: cfg.meteor,
            meteor_matching: "exact".into(),
            embedder: bert.and(embedder.map(|e| e.name().to_string())),
            bertscore_rescaled: false,
        },
    })
}

pub const EXPLANATION_COLUMNS: [&str; 6] = ["Rouge-1", "Rouge-2", "Rouge-L", "BLEU", "METEOR", "BERTScore"];

/// Lexical and semantic columns as percentages; the rating column is shown
/// only when some report carries a rating.
pub fn explanation_table(reports: &[ExplanationReport]) -> Table {
    let with_rating = reports.iter().any(|r| r.rating.is_some());
    let mut header = vec!["Model".to_string()];
    header.extend(EXPLANATION_COLUMNS.iter().map(|s| s.to_string()));
    if with_rating {
        header.push("Rating Score".into());
    }
    let mut t = Table::new(header);
    let pct = |x: f64| format!("{:.2}", x * 100.0);
    for r in reports {
        let s = &r.scores;
        let mut row = vec![
            r.model.clone(),
            pct(s.rouge1_f),
            pct(s.rouge2_f),
            pct(s.rouge_l_f),
            pct(s.bleu),
            pct(s.meteor),
            s.bertscore_f.map(pct).unwrap_or_else(|| "-".into()),
        ];
        if with_rating {
            row.push(r.rating.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into()));
        }
        t.push(row);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub model: String,
    pub metric: String,
    pub value: Option<f64>,
}

pub fn explanation_records(r: &ExplanationReport) -> Vec<ExplanationRecord> {
    let s = &r.scores;
    let vals = [
        Some(s.rouge1_f),
        Some(s.rouge2_f),
        Some(s.rouge_l_f),
        Some(s.bleu),
        Some(s.meteor),
        s.bertscore_f,
    ];
    let mut out: Vec<ExplanationRecord> = EXPLANATION_COLUMNS
        .iter()
        .zip(vals)
        .map(|(m, v)| ExplanationRecord {
            model: r.model.clone(),
            metric: m.to_string(),
            value: v,
        })
        .collect();
    if let Some(rating) = r.rating {
        out.push(ExplanationRecord {
            model: r.model.clone(),
            metric: "Rating Score".into(),
            value: Some(rating),
        });
    }
    out
}
