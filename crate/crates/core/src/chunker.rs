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

//! Overlapping fixed-size token windows over long judgments, and the
//! aggregation of per-chunk class scores back to one document decision.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::whitespace_spans;

pub const DEFAULT_WINDOW: usize = 512;
pub const DEFAULT_OVERLAP: usize = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChunkError {
    #[error("window must be positive")]
    ZeroWindow,
    #[error("overlap {overlap} must be smaller than window {window}")]
    OverlapTooLarge { window: usize, overlap: usize },
    #[error("no chunk scores to aggregate")]
    Empty,
    #[error("chunk {index} has {got} class scores, expected {expected}")]
    Ragged { index: usize, got: usize, expected: usize },
    #[error("chunk {index} has a negative or non-finite score")]
    BadScore { index: usize },
}

/// Anything that splits text into a token sequence with byte spans.
pub trait Tokenize {
    fn name(&self) -> &str;
    fn spans(&self, text: &str) -> Vec<(usize, usize)>;
}

/// Whitespace-delimited words.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenize for WhitespaceTokenizer {
    fn name(&self) -> &str {
        "whitespace"
    }
    fn spans(&self, text: &str) -> Vec<(usize, usize)> {
        whitespace_spans(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkConfig {
    pub window: usize,
    pub overlap: usize,
    /// Pad the final chunk up to `window` tokens with the pad token.
    #[serde(default)]
    pub pad_final: bool,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        ChunkConfig {
            window: DEFAULT_WINDOW,
            overlap: DEFAULT_OVERLAP,
            pad_final: false,
        }
    }
}

impl ChunkConfig {
    pub fn new(window: usize, overlap: usize) -> Result<Self, ChunkError> {
        let c = ChunkConfig {
            window,
            overlap,
            pad_final: false,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ChunkError> {
        if self.window == 0 {
            return Err(ChunkError::ZeroWindow);
        }
        if self.overlap >= self.window {
            return Err(ChunkError::OverlapTooLarge {
                window: self.window,
                overlap: self.overlap,
            });
        }
        Ok(())
    }

    pub fn stride(&self) -> usize {
        self.window - self.overlap
    }
}

/// Half-open token range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkSpan {
    pub start: usize,
    pub end: usize,
}

impl ChunkSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }
    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Spans covering `n_tokens` tokens. Chunks start every `stride` tokens
/// and stop at the first chunk that reaches the end.
pub fn chunk_spans(n_tokens: usize, cfg: &ChunkConfig) -> Result<Vec<ChunkSpan>, ChunkError> {
    cfg.validate()?;
    let stride = cfg.stride();
    let mut spans = Vec::new();
    let mut start = 0;
    while start < n_tokens {
        let end = (start + cfg.window).min(n_tokens);
        spans.push(ChunkSpan { start, end });
        if end == n_tokens {
            break;
        }
        start += stride;
    }
    Ok(spans)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub index: usize,
    pub span: ChunkSpan,
    pub tokens: Vec<String>,
}

pub const PAD_TOKEN: &str = "[PAD]";

pub fn chunk_tokens<S: AsRef<str>>(tokens: &[S], cfg: &ChunkConfig) -> Result<Vec<Chunk>, ChunkError> {
    let spans = chunk_spans(tokens.len(), cfg)?;
    let last = spans.len().saturating_sub(1);
    Ok(spans
        .into_iter()
        .enumerate()
        .map(|(index, span)| {
            let mut toks: Vec<String> = tokens[span.start..span.end]
                .iter()
                .map(|t| t.as_ref().to_string())
                .collect();
            if cfg.pad_final && index == last {
                toks.resize(cfg.window, PAD_TOKEN.to_string());
            }
            Chunk {
                index,
                span,
                tokens: toks,
            }
        })
        .collect())
}

pub fn chunk_text(text: &str, tokenizer: &dyn Tokenize, cfg: &ChunkConfig) -> Result<Vec<Chunk>, ChunkError> {
    let tokens: Vec<&str> = tokenizer.spans(text).into_iter().map(|(a, b)| &text[a..b]).collect();
    chunk_tokens(&tokens, cfg)
}

/// Inverse of chunking: drop the overlapping prefix of every chunk after
/// the first and concatenate. Padding is removed.
pub fn reconstruct(chunks: &[Chunk]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for c in chunks {
        let real = &c.tokens[..c.span.len()];
        let skip = out.len().saturating_sub(c.span.start);
        out.extend(real[skip..].iter().cloned());
    }
    out
}

/// One line of the chunk JSONL output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub case_id: String,
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub text: String,
    /// Document label broadcast to every chunk, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
}

/// Class scores for one chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkScores(pub Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    MeanProb,
    MajorityVote,
    MaxConfidence,
}

impl std::str::FromStr for Aggregation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean_prob" | "mean" => Ok(Aggregation::MeanProb),
            "majority_vote" | "majority" => Ok(Aggregation::MajorityVote),
            "max_confidence" | "max" => Ok(Aggregation::MaxConfidence),
            o => Err(format!("unknown aggregation `{o}`")),
        }
    }
}

fn validate_scores(scores: &[ChunkScores]) -> Result<usize, ChunkError> {
    let k = scores.first().ok_or(ChunkError::Empty)?.0.len();
    for (index, s) in scores.iter().enumerate() {
        if s.0.len() != k || k == 0 {
            return Err(ChunkError::Ragged {
                index,
                got: s.0.len(),
                expected: k,
            });
        }
        if s.0.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(ChunkError::BadScore { index });
        }
    }
    Ok(k)
}

/// Index of the largest value; the lowest index wins ties.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn mean_scores(scores: &[ChunkScores], k: usize) -> Vec<f64> {
    let mut m = vec![0.0; k];
    for s in scores {
        for (acc, x) in m.iter_mut().zip(&s.0) {
            *acc += x;
        }
    }
    let n = scores.len() as f64;
    m.iter_mut().for_each(|x| *x /= n);
    m
}

pub fn aggregate(scores: &[ChunkScores], how: Aggregation) -> Result<usize, ChunkError> {
    let k = validate_scores(scores)?;
    let mean = mean_scores(scores, k);
    Ok(match how {
        Aggregation::MeanProb => argmax(&mean),
        Aggregation::MajorityVote => {
            let mut votes = vec![0usize; k];
            for s in scores {
                votes[argmax(&s.0)] += 1;
            }
            let top = *votes.iter().max().unwrap();
            // Among the most-voted classes, the highest mean wins.
            (0..k)
                .filter(|&c| votes[c] == top)
                .fold(None::<usize>, |best, c| match best {
                    Some(b) if mean[b] >= mean[c] => Some(b),
                    _ => Some(c),
                })
                .unwrap()
        }
        Aggregation::MaxConfidence => {
            let mut best = (0usize, argmax(&scores[0].0));
            for (i, s) in scores.iter().enumerate().skip(1) {
                let c = argmax(&s.0);
                if s.0[c] > scores[best.0].0[best.1] {
                    best = (i, c);
                }
            }
            best.1
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_for_1024_tokens() {
        let s = chunk_spans(1024, &ChunkConfig::default()).unwrap();
        let pairs: Vec<(usize, usize)> = s.iter().map(|c| (c.start, c.end)).collect();
        assert_eq!(pairs, [(0, 512), (412, 924), (824, 1024)]);
    }

    #[test]
    fn edge_sizes() {
        let cfg = ChunkConfig::default();
        assert!(chunk_spans(0, &cfg).unwrap().is_empty());
        assert_eq!(chunk_spans(1, &cfg).unwrap(), [ChunkSpan { start: 0, end: 1 }]);
        assert_eq!(chunk_spans(512, &cfg).unwrap().len(), 1);
        assert_eq!(chunk_spans(513, &cfg).unwrap().len(), 2);
        assert_eq!(
            ChunkConfig::new(100, 100),
            Err(ChunkError::OverlapTooLarge {
                window: 100,
                overlap: 100
            })
        );
        assert_eq!(ChunkConfig::new(0, 0), Err(ChunkError::ZeroWindow));
    }

    #[test]
    fn padding_and_reconstruction() {
        let toks: Vec<String> = (0..30).map(|i| format!("w{i}")).collect();
        let cfg = ChunkConfig {
            window: 8,
            overlap: 3,
            pad_final: true,
        };
        let chunks = chunk_tokens(&toks, &cfg).unwrap();
        assert!(chunks.iter().all(|c| c.tokens.len() == 8));
        assert_eq!(chunks.last().unwrap().tokens.last().unwrap(), PAD_TOKEN);
        assert_eq!(reconstruct(&chunks), toks);
    }

    #[test]
    fn text_chunking_uses_tokenizer() {
        let c = chunk_text("a b  c\nd e", &WhitespaceTokenizer, &ChunkConfig::new(3, 1).unwrap()).unwrap();
        let t: Vec<Vec<String>> = c.into_iter().map(|c| c.tokens).collect();
        assert_eq!(t, [vec!["a", "b", "c"], vec!["c", "d", "e"]]);
    }

    fn sc(v: &[&[f64]]) -> Vec<ChunkScores> {
        v.iter().map(|r| ChunkScores(r.to_vec())).collect()
    }

    #[test]
    fn aggregation_rules() {
        let s = sc(&[&[0.6, 0.4], &[0.6, 0.4], &[0.0, 1.0]]);
        assert_eq!(aggregate(&s, Aggregation::MeanProb).unwrap(), 1);
        assert_eq!(aggregate(&s, Aggregation::MajorityVote).unwrap(), 0);
        assert_eq!(aggregate(&s, Aggregation::MaxConfidence).unwrap(), 1);
        // Vote tie 1-1 broken by the mean.
        let t = sc(&[&[0.9, 0.1], &[0.4, 0.6]]);
        assert_eq!(aggregate(&t, Aggregation::MajorityVote).unwrap(), 0);
        // Exact ties fall to the lowest class / earliest chunk.
        let e = sc(&[&[0.5, 0.5]]);
        assert_eq!(aggregate(&e, Aggregation::MeanProb).unwrap(), 0);
        let m = sc(&[&[0.2, 0.8], &[0.8, 0.2]]);
        assert_eq!(aggregate(&m, Aggregation::MaxConfidence).unwrap(), 1);
    }

    #[test]
    fn aggregation_errors() {
        assert_eq!(aggregate(&[], Aggregation::MeanProb), Err(ChunkError::Empty));
        let r = sc(&[&[0.5, 0.5], &[1.0]]);
        assert!(matches!(
            aggregate(&r, Aggregation::MeanProb),
            Err(ChunkError::Ragged { index: 1, .. })
        ));
        let n = sc(&[&[-0.1, 1.1]]);
        assert_eq!(
            aggregate(&n, Aggregation::MeanProb),
            Err(ChunkError::BadScore { index: 0 })
        );
    }
}
