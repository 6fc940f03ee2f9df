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

//! ROUGE, corpus BLEU and exact-match METEOR over lexical tokens.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl Prf {
    fn from_counts(overlap: usize, cand: usize, reference: usize) -> Prf {
        let precision = if cand == 0 { 0.0 } else { overlap as f64 / cand as f64 };
        let recall = if reference == 0 {
            0.0
        } else {
            overlap as f64 / reference as f64
        };
        let f = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf { precision, recall, f }
    }
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut m = HashMap::new();
    if n == 0 || tokens.len() < n {
        return m;
    }
    for w in tokens.windows(n) {
        *m.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
    }
    m
}

/// Matches with each candidate n-gram clipped at its reference count.
fn clipped_overlap<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> (usize, usize, usize) {
    let c = ngram_counts(candidate, n);
    let r = ngram_counts(reference, n);
    let overlap = c.iter().map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0))).sum();
    (
        overlap,
        candidate.len().saturating_sub(n - 1),
        reference.len().saturating_sub(n - 1),
    )
}

pub fn rouge_n<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> Prf {
    assert!(n >= 1, "rouge_n needs n >= 1");
    if reference.len() < n {
        log::warn!("ROUGE-{n} with an empty reference scores 0");
        return Prf::default();
    }
    let (overlap, c, r) = clipped_overlap(candidate, reference, n);
    Prf::from_counts(overlap, c, r)
}

pub fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> Prf {
    if reference.is_empty() {
        log::warn!("ROUGE-L with an empty reference scores 0");
        return Prf::default();
    }
    Prf::from_counts(lcs_len(candidate, reference), candidate.len(), reference.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum BleuSmoothing {
    None,
    /// Orders with zero matches use `epsilon / candidate_ngrams`.
    AddEpsilon {
        epsilon: f64,
    },
}

impl Default for BleuSmoothing {
    fn default() -> Self {
        BleuSmoothing::AddEpsilon { epsilon: 0.1 }
    }
}

impl BleuSmoothing {
    pub fn name(&self) -> String {
        match self {
            BleuSmoothing::None => "none".into(),
            BleuSmoothing::AddEpsilon { epsilon } => format!("add-epsilon({epsilon})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub score: f64,
    /// Modified precision per order; `None` when the corpus has no
    /// candidate n-grams of that order (the order is then skipped).
    pub precisions: Vec<Option<f64>>,
    pub brevity_penalty: f64,
    pub candidate_len: usize,
    pub reference_len: usize,
    pub smoothing: String,
}

/// Corpus BLEU: clipped counts pooled over all pairs, geometric mean over
/// the orders that have candidate n-grams, times the brevity penalty.
pub fn bleu<S: AsRef<str>>(
    candidates: &[Vec<S>],
    references: &[Vec<S>],
    max_n: usize,
    smoothing: BleuSmoothing,
) -> Result<BleuScore, MetricError> {
    if candidates.len() != references.len() {
        return Err(MetricError::LengthMismatch {
            left: candidates.len(),
            right: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut matches = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let (mut c_len, mut r_len) = (0, 0);
    for (c, r) in candidates.iter().zip(references) {
        c_len += c.len();
        r_len += r.len();
        for n in 1..=max_n {
            let (m, t, _) = clipped_overlap(c, r, n);
            matches[n - 1] += m;
            totals[n - 1] += t;
        }
    }
    let precisions: Vec<Option<f64>> = (0..max_n)
        .map(|i| (totals[i] > 0).then(|| matches[i] as f64 / totals[i] as f64))
        .collect();
    let brevity_penalty = if c_len == 0 {
        0.0
    } else if c_len > r_len {
        1.0
    } else {
        (1.0 - r_len as f64 / c_len as f64).exp()
    };
    let mut log_sum = 0.0;
    let mut orders = 0;
    let mut zero = false;
    for i in 0..max_n {
        if totals[i] == 0 {
            continue;
        }
        orders += 1;
        let p = if matches[i] > 0 {
            matches[i] as f64 / totals[i] as f64
        } else {
            match smoothing {
                BleuSmoothing::None => {
                    zero = true;
                    break;
                }
                BleuSmoothing::AddEpsilon { epsilon } => epsilon / totals[i] as f64,
            }
        };
        log_sum += p.ln();
    }
    let score = if zero || orders == 0 {
        0.0
    } else {
        brevity_penalty * (log_sum / orders as f64).exp()
    };
    Ok(BleuScore {
        score: score.clamp(0.0, 1.0),
        precisions,
        brevity_penalty,
        candidate_len: c_len,
        reference_len: r_len,
        smoothing: smoothing.name(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        MeteorParams {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
        }
    }
}

/// Exact-match unigram alignment as (candidate index, reference index),
/// sorted by candidate index. Each candidate token takes the reference
/// position right after the previous match when it can, else the first
/// unused one.
pub fn meteor_alignment<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> Vec<(usize, usize)> {
    let mut positions: HashMap<&str, Vec<usize>> = HashMap::new();
    for (j, r) in reference.iter().enumerate() {
        positions.entry(r.as_ref()).or_default().push(j);
    }
    let mut used = vec![false; reference.len()];
    let mut pairs = Vec::new();
    let mut prev: Option<usize> = None;
    for (i, c) in candidate.iter().enumerate() {
        let Some(cands) = positions.get(c.as_ref()) else {
            prev = None;
            continue;
        };
        let next = prev.map(|p| p + 1);
        let pick = cands
            .iter()
            .copied()
            .find(|&j| Some(j) == next && !used[j])
            .or_else(|| cands.iter().copied().find(|&j| !used[j]));
        match pick {
            Some(j) => {
                used[j] = true;
                pairs.push((i, j));
                prev = Some(j);
            }
            None => prev = None,
        }
    }
    pairs
}

pub fn count_chunks(alignment: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    let mut last: Option<(usize, usize)> = None;
    for &(i, j) in alignment {
        match last {
            Some((pi, pj)) if i == pi + 1 && j == pj + 1 => {}
            _ => chunks += 1,
        }
        last = Some((i, j));
    }
    chunks
}

/// F-mean weighted toward recall, discounted by fragmentation. A single
/// contiguous chunk carries no penalty.
pub fn meteor<S: AsRef<str>>(candidate: &[S], reference: &[S], params: &MeteorParams) -> f64 {
    let alignment = meteor_alignment(candidate, reference);
    let m = alignment.len();
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let fmean = p * r / (params.alpha * p + (1.0 - params.alpha) * r);
    let chunks = count_chunks(&alignment);
    let penalty = if chunks <= 1 {
        0.0
    } else {
        params.gamma * (chunks as f64 / m as f64).powf(params.beta)
    };
    (fmean * (1.0 - penalty)).clamp(0.0, 1.0)
}
