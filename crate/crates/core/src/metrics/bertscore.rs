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

//! Embedding-based token matching (BERTScore without baseline rescaling).

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lexical::Prf;
use crate::text::sha256_hex;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmbedError {
    #[error("embedding provider unavailable: {0}")]
    Unavailable(String),
    #[error("provider returned {got} vectors for {expected} tokens")]
    Count { expected: usize, got: usize },
    #[error("vector {index} has dimension {got}, expected {expected}")]
    Dimension { index: usize, expected: usize, got: usize },
    #[error("vector {0} has zero or non-finite norm")]
    ZeroVector(usize),
}

/// `{tokens: [...]}` in, `{vectors: [[...], ...]}` out, one vector per token.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn embed(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>, EmbedError>;
}

/// Check the reply and scale every vector to unit length.
pub fn normalize_embeddings(tokens: usize, vectors: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, EmbedError> {
    if vectors.len() != tokens {
        return Err(EmbedError::Count {
            expected: tokens,
            got: vectors.len(),
        });
    }
    let dim = vectors.first().map(Vec::len).unwrap_or(0);
    vectors
        .into_iter()
        .enumerate()
        .map(|(index, mut v)| {
            if v.len() != dim {
                return Err(EmbedError::Dimension {
                    index,
                    expected: dim,
                    got: v.len(),
                });
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(EmbedError::ZeroVector(index));
            }
            v.iter_mut().for_each(|x| *x /= norm);
            Ok(v)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Greedy matching on unit vectors: precision averages each candidate
/// token's best similarity, recall each reference token's.
pub fn greedy_match(candidate: &[Vec<f64>], reference: &[Vec<f64>]) -> Prf {
    if candidate.is_empty() || reference.is_empty() {
        return Prf::default();
    }
    let sim: Vec<Vec<f64>> = candidate
        .iter()
        .map(|c| reference.iter().map(|r| dot(c, r)).collect())
        .collect();
    let precision = sim
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / candidate.len() as f64;
    let recall = (0..reference.len())
        .map(|j| sim.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / reference.len() as f64;
    let (precision, recall) = (precision.clamp(0.0, 1.0), recall.clamp(0.0, 1.0));
    let f = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Prf { precision, recall, f }
}

pub fn bertscore(
    candidate: &[String],
    reference: &[String],
    provider: &dyn EmbeddingProvider,
) -> Result<Prf, EmbedError> {
    if candidate.is_empty() || reference.is_empty() {
        return Ok(Prf::default());
    }
    let c = normalize_embeddings(candidate.len(), provider.embed(candidate)?)?;
    let r = normalize_embeddings(reference.len(), provider.embed(reference)?)?;
    Ok(greedy_match(&c, &r))
}

/// Deterministic offline embedder: character trigrams hashed into a fixed
/// number of buckets. Only useful for smoke runs and tests.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    pub dim: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder { dim: 64 }
    }
}

impl EmbeddingProvider for HashingEmbedder {
    fn name(&self) -> &str {
        "hashing-trigram"
    }
    fn embed(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(tokens
            .iter()
            .map(|t| {
                let mut v = vec![0.0; self.dim];
                let padded: Vec<char> = format!("<{t}>").chars().collect();
                for g in padded.windows(3.min(padded.len())) {
                    let s: String = g.iter().collect();
                    let h = sha256_hex(s);
                    let bucket = usize::from_str_radix(&h[..8], 16).unwrap() % self.dim;
                    v[bucket] += 1.0;
                }
                v
            })
            .collect())
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    tokens: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// A subprocess answering one JSON embedding request per line.
pub struct CommandEmbedder {
    name: String,
    io: Mutex<(Child, ChildStdin, BufReader<ChildStdout>)>,
}

impl CommandEmbedder {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, EmbedError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| EmbedError::Unavailable(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(CommandEmbedder {
            name: format!("command:{program}"),
            io: Mutex::new((child, stdin, stdout)),
        })
    }
}

impl Drop for CommandEmbedder {
    fn drop(&mut self) {
        if let Ok(io) = self.io.get_mut() {
            let _ = io.0.kill();
            let _ = io.0.wait();
        }
    }
}

impl EmbeddingProvider for CommandEmbedder {
    fn name(&self) -> &str {
        &self.name
    }
    fn embed(&self, tokens: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let unavailable = |e: String| EmbedError::Unavailable(e);
        let mut io = self.io.lock().map_err(|_| unavailable("lock poisoned".into()))?;
        let line = serde_json::to_string(&EmbedRequest { tokens }).expect("request serializes");
        writeln!(io.1, "{line}")
            .and_then(|_| io.1.flush())
            .map_err(|e| unavailable(e.to_string()))?;
        let mut reply = String::new();
        let n = io.2.read_line(&mut reply).map_err(|e| unavailable(e.to_string()))?;
        if n == 0 {
            return Err(unavailable("provider closed its output".into()));
        }
        let resp: EmbedResponse = serde_json::from_str(&reply).map_err(|e| unavailable(e.to_string()))?;
        Ok(resp.vectors)
    }
}
