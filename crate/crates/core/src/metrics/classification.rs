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

//! Confusion matrices and macro-averaged classification reports.

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::prompts::Prediction;
use crate::report::Table;

/// `k` gold rows by `k + 1` predicted columns; the last column counts
/// abstentions (no decision parsed).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix {
            k,
            counts: vec![vec![0; k + 1]; k],
        }
    }

    /// Build from a square matrix without abstentions.
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self, MetricError> {
        let k = rows.len();
        let mut cm = ConfusionMatrix::new(k);
        for (g, row) in rows.iter().enumerate() {
            if row.len() != k && row.len() != k + 1 {
                return Err(MetricError::Shape(format!(
                    "row {g} has {} entries for {k} classes",
                    row.len()
                )));
            }
            cm.counts[g][..row.len()].copy_from_slice(row);
        }
        Ok(cm)
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, gold: usize, predicted: usize) -> u64 {
        self.counts[gold][predicted]
    }

    pub fn abstained(&self, gold: usize) -> u64 {
        self.counts[gold][self.k]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|i| self.counts[i][i]).sum()
    }

    pub fn record(&mut self, gold: u8, predicted: Prediction) -> Result<(), MetricError> {
        let g = gold as usize;
        if g >= self.k {
            return Err(MetricError::ClassOutOfRange { class: gold, k: self.k });
        }
        let col = match predicted {
            Prediction::Class(p) if (p as usize) < self.k => p as usize,
            Prediction::Class(p) => return Err(MetricError::ClassOutOfRange { class: p, k: self.k }),
            Prediction::NoDecision => self.k,
        };
        self.counts[g][col] += 1;
        Ok(())
    }
}

pub fn confusion(gold: &[u8], predicted: &[Prediction], k: usize) -> Result<ConfusionMatrix, MetricError> {
    if gold.len() != predicted.len() {
        return Err(MetricError::LengthMismatch {
            left: gold.len(),
            right: predicted.len(),
        });
    }
    let mut cm = ConfusionMatrix::new(k);
    for (&g, &p) in gold.iter().zip(predicted) {
        cm.record(g, p)?;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n: u64,
    pub abstained: u64,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub per_class: Vec<ClassScores>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Precision ignores the abstain column; recall counts abstentions as
/// misses of the gold class. Zero denominators give 0.
pub fn macro_report(cm: &ConfusionMatrix) -> Result<EvaluationReport, MetricError> {
    let n = cm.total();
    if n == 0 {
        return Err(MetricError::Empty);
    }
    let k = cm.k;
    let per_class: Vec<ClassScores> = (0..k)
        .map(|c| {
            let tp = cm.get(c, c);
            let predicted: u64 = (0..k).map(|g| cm.get(g, c)).sum();
            let support: u64 = cm.counts[c].iter().sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            ClassScores {
                precision,
                recall,
                f1: harmonic(precision, recall),
                support,
            }
        })
        .collect();
    let mean = |f: fn(&ClassScores) -> f64| per_class.iter().map(f).sum::<f64>() / k as f64;
    let abstained: u64 = (0..k).map(|g| cm.abstained(g)).sum();
    let trace = cm.trace();
    let micro_p = ratio(trace, n - abstained);
    let micro_r = ratio(trace, n);
    Ok(EvaluationReport {
        n,
        abstained,
        accuracy: ratio(trace, n),
        macro_precision: mean(|c| c.precision),
        macro_recall: mean(|c| c.recall),
        macro_f1: mean(|c| c.f1),
        micro_f1: harmonic(micro_p, micro_r),
        per_class,
    })
}

/// One cell of the classification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub metric: String,
    pub scope: String,
    pub value: f64,
}

impl EvaluationReport {
    pub fn to_table(&self) -> Table {
        let mut header = vec!["Metric".to_string(), "Overall".to_string()];
        header.extend((0..self.per_class.len()).map(|c| format!("Class {c}")));
        let mut t = Table::new(header);
        type Row = (&'static str, f64, fn(&ClassScores) -> f64);
        let rows: [Row; 3] = [
            ("Macro Precision", self.macro_precision, |c| c.precision),
            ("Macro Recall", self.macro_recall, |c| c.recall),
            ("Macro F1", self.macro_f1, |c| c.f1),
        ];
        for (name, overall, f) in rows {
            let mut row = vec![name.to_string(), format!("{overall:.2}")];
            row.extend(self.per_class.iter().map(|c| format!("{:.2}", f(c))));
            t.push(row);
        }
        t.push(["Accuracy".to_string(), format!("{:.2}", self.accuracy)]);
        t
    }

    pub fn records(&self) -> Vec<ClassificationRecord> {
        let mut out = Vec::new();
        let mut push = |metric: &str, scope: String, value: f64| {
            out.push(ClassificationRecord {
                metric: metric.into(),
                scope,
                value,
            })
        };
        push("Macro Precision", "Overall".into(), self.macro_precision);
        push("Macro Recall", "Overall".into(), self.macro_recall);
        push("Macro F1", "Overall".into(), self.macro_f1);
        push("Accuracy", "Overall".into(), self.accuracy);
        for (i, c) in self.per_class.iter().enumerate() {
            push("Macro Precision", format!("Class {i}"), c.precision);
            push("Macro Recall", format!("Class {i}"), c.recall);
            push("Macro F1", format!("Class {i}"), c.f1);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Prediction::*;

    #[test]
    fn perfect_and_abstain() {
        let cm = confusion(&[1, 0], &[Class(1), Class(0)], 2).unwrap();
        let r = macro_report(&cm).unwrap();
        assert_eq!((r.accuracy, r.macro_f1), (1.0, 1.0));
        let cm = confusion(&[1], &[NoDecision], 2).unwrap();
        let r = macro_report(&cm).unwrap();
        assert_eq!(r.accuracy, 0.0);
        assert_eq!(r.abstained, 1);
        assert_eq!(r.per_class[1].recall, 0.0);
    }

    #[test]
    fn hand_computed_two_class() {
        let cm = ConfusionMatrix::from_rows(&[vec![5, 5], vec![0, 10]]).unwrap();
        let r = macro_report(&cm).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-4;
        assert!(close(r.per_class[0].precision, 1.0));
        assert!(close(r.per_class[0].recall, 0.5));
        assert!(close(r.per_class[0].f1, 0.6667));
        assert!(close(r.per_class[1].precision, 0.6667));
        assert!(close(r.per_class[1].f1, 0.8));
        assert!(close(r.macro_f1, 0.7333));
        assert!(close(r.accuracy, 0.75));
    }

    #[test]
    fn empty_predicted_class_gets_zero_precision() {
        let cm = ConfusionMatrix::from_rows(&[vec![3, 0, 0], vec![0, 2, 0], vec![1, 1, 0]]).unwrap();
        let r = macro_report(&cm).unwrap();
        assert_eq!(r.per_class[2].precision, 0.0);
        assert_eq!(r.per_class[2].f1, 0.0);
        assert_eq!(r.n, 7);
    }

    #[test]
    fn abstentions_do_not_touch_precision() {
        let cm = confusion(&[0, 0, 1, 1], &[Class(0), NoDecision, Class(1), Class(1)], 2).unwrap();
        let r = macro_report(&cm).unwrap();
        assert_eq!(r.per_class[0].precision, 1.0);
        assert_eq!(r.per_class[0].recall, 0.5);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            confusion(&[0], &[], 2),
            Err(MetricError::LengthMismatch { .. })
        ));
        assert!(matches!(
            confusion(&[2], &[Class(0)], 2),
            Err(MetricError::ClassOutOfRange { .. })
        ));
        assert!(matches!(
            macro_report(&ConfusionMatrix::new(2)),
            Err(MetricError::Empty)
        ));
    }

    #[test]
    fn table_layout() {
        let cm = ConfusionMatrix::from_rows(&[vec![5, 5, 0], vec![0, 10, 0], vec![1, 0, 3]]).unwrap();
        let r = macro_report(&cm).unwrap();
        let t = r.to_table();
        assert_eq!(t.header, ["Metric", "Overall", "Class 0", "Class 1", "Class 2"]);
        let names: Vec<_> = t.rows.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(names, ["Macro Precision", "Macro Recall", "Macro F1", "Accuracy"]);
        assert_eq!(r.records().len(), 4 + 9);
    }
}
