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

//! Expert rating of generated explanations: task creation, a rater queue,
//! an append-only rating ledger and deterministic exports.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{likert_aggregate, LikertScore, LikertSummary};
use crate::prompts::{Prediction, PredictionRecord};
use crate::report::Table;
use crate::text::whitespace_spans;

const RUBRIC_TOML: &str = include_str!("../config/rubric.toml");
pub const DEFAULT_EXCERPT_WORDS: usize = 300;

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("sample of {sample} exceeds the {available} records with explanations")]
    SampleTooLarge { sample: usize, available: usize },
    #[error("run has no records with explanations")]
    EmptyRun,
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("unknown rater `{0}`")]
    UnknownRater(String),
    #[error("invalid rater id `{0}`")]
    BadRaterId(String),
    #[error("score {0} is outside 1..=5")]
    ScoreOutOfRange(i64),
    #[error("rater `{rater_id}` already rated task `{task_id}`")]
    Duplicate { task_id: String, rater_id: String },
    #[error("rubric must have 5 levels, got {0}")]
    Rubric(usize),
    #[error("store {path}: {message}")]
    Store { path: String, message: String },
}

fn store_err(path: &Path, e: impl std::fmt::Display) -> AnnotateError {
    AnnotateError::Store {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rubric {
    pub version: u32,
    pub levels: Vec<String>,
}

impl Rubric {
    pub fn parse(source: &str) -> Result<Self, AnnotateError> {
        let r: Rubric = toml::from_str(source).map_err(|e| store_err(Path::new("rubric"), e))?;
        if r.levels.len() != 5 {
            return Err(AnnotateError::Rubric(r.levels.len()));
        }
        Ok(r)
    }
}

impl Default for Rubric {
    fn default() -> Self {
        Rubric::parse(RUBRIC_TOML).expect("bundled rubric is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Open,
    Rated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub case_id: String,
    pub model_id: String,
    pub case_excerpt: String,
    pub predicted_label: Prediction,
    pub explanation: String,
    pub status: TaskStatus,
}

/// First `words` whitespace words of the case text.
pub fn excerpt(text: &str, words: usize) -> String {
    let spans = whitespace_spans(text);
    match spans.get(words.saturating_sub(1)) {
        Some(&(_, end)) if spans.len() > words && words > 0 => format!("{} ...", &text[..end]),
        _ if words == 0 => String::new(),
        _ => text.trim().to_string(),
    }
}

/// Seeded sample of `sample` records that carry an explanation. Tasks come
/// back sorted by id.
pub fn create_tasks(
    run: &[PredictionRecord],
    model_id: &str,
    case_texts: &HashMap<String, String>,
    sample: usize,
    seed: u64,
    excerpt_words: usize,
) -> Result<Vec<AnnotationTask>, AnnotateError> {
    let mut eligible: Vec<&PredictionRecord> = run
        .iter()
        .filter(|r| r.explanation.as_deref().is_some_and(|e| !e.trim().is_empty()))
        .collect();
    eligible.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    eligible.dedup_by(|a, b| a.case_id == b.case_id);
    if eligible.is_empty() {
        return Err(AnnotateError::EmptyRun);
    }
    if sample > eligible.len() {
        return Err(AnnotateError::SampleTooLarge {
            sample,
            available: eligible.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    eligible.shuffle(&mut rng);
    let mut tasks: Vec<AnnotationTask> = eligible[..sample]
        .iter()
        .map(|r| AnnotationTask {
            task_id: format!("{model_id}:{}", r.case_id),
            case_id: r.case_id.clone(),
            model_id: model_id.to_string(),
            case_excerpt: case_texts
                .get(&r.case_id)
                .map(|t| excerpt(t, excerpt_words))
                .unwrap_or_default(),
            predicted_label: r.predicted,
            explanation: r.explanation.clone().unwrap_or_default(),
            status: TaskStatus::Open,
        })
        .collect();
    tasks.sort_by(|a, b| a.task_id.cmp(&b.task_id));
    Ok(tasks)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingSubmission {
    pub task_id: String,
    pub rater_id: String,
    pub score: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

/// One persisted rating (a ledger line and an export line).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertRating {
    pub task_id: String,
    pub rater_id: String,
    pub case_id: String,
    pub model_id: String,
    pub score: LikertScore,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub timestamp: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub rated: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskView {
    pub task: AnnotationTask,
    pub rubric: Vec<String>,
    pub progress: Progress,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum NextTask {
    Task(Box<TaskView>),
    Done { progress: Progress },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreMeta {
    pub run_id: String,
    pub seed: u64,
    pub sample: usize,
    pub excerpt_words: usize,
}

#[derive(Debug, Default)]
struct Ledger {
    raters: BTreeSet<String>,
    ratings: Vec<LikertRating>,
    rated: HashSet<(String, String)>,
    rated_tasks: HashSet<String>,
}

type Clock = Box<dyn Fn() -> String + Send + Sync>;

/// Tasks are fixed at creation; raters and ratings are appended to
/// line-delimited files under one lock so check-and-append is atomic.
pub struct AnnotationStore {
    dir: PathBuf,
    meta: StoreMeta,
    rubric: Rubric,
    tasks: Vec<AnnotationTask>,
    by_id: HashMap<String, usize>,
    ledger: Mutex<Ledger>,
    clock: Clock,
}

const TASKS_FILE: &str = "tasks.jsonl";
const RATERS_FILE: &str = "raters.txt";
const RATINGS_FILE: &str = "ratings.jsonl";
const META_FILE: &str = "store.json";

fn valid_rater_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.@".contains(c))
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, AnnotateError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let f = File::open(path).map_err(|e| store_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| store_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| store_err(path, format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

fn append_line(path: &Path, line: &str) -> Result<(), AnnotateError> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| store_err(path, e))?;
    f.write_all(format!("{line}\n").as_bytes())
        .map_err(|e| store_err(path, e))?;
    f.sync_data().map_err(|e| store_err(path, e))
}

impl AnnotationStore {
    /// Write a fresh store. Fails if `dir` already holds tasks.
    pub fn create(dir: &Path, meta: StoreMeta, tasks: Vec<AnnotationTask>) -> Result<Self, AnnotateError> {
        fs::create_dir_all(dir).map_err(|e| store_err(dir, e))?;
        let tasks_path = dir.join(TASKS_FILE);
        if tasks_path.exists() {
            return Err(store_err(&tasks_path, "store already exists"));
        }
        let mut body = String::new();
        for t in &tasks {
            body.push_str(&serde_json::to_string(t).expect("task serializes"));
            body.push('\n');
        }
        fs::write(&tasks_path, body).map_err(|e| store_err(&tasks_path, e))?;
        let meta_path = dir.join(META_FILE);
        fs::write(&meta_path, serde_json::to_string_pretty(&meta).unwrap() + "\n")
            .map_err(|e| store_err(&meta_path, e))?;
        Self::open(dir)
    }

    pub fn open(dir: &Path) -> Result<Self, AnnotateError> {
        let meta_path = dir.join(META_FILE);
        let meta: StoreMeta =
            serde_json::from_str(&fs::read_to_string(&meta_path).map_err(|e| store_err(&meta_path, e))?)
                .map_err(|e| store_err(&meta_path, e))?;
        let mut tasks: Vec<AnnotationTask> = read_jsonl(&dir.join(TASKS_FILE))?;
        tasks.sort_by(|a, b| a.task_id.cmp(&b.task_id));
        let by_id = tasks.iter().enumerate().map(|(i, t)| (t.task_id.clone(), i)).collect();
        let mut ledger = Ledger::default();
        let raters_path = dir.join(RATERS_FILE);
        if raters_path.exists() {
            let s = fs::read_to_string(&raters_path).map_err(|e| store_err(&raters_path, e))?;
            ledger
                .raters
                .extend(s.lines().filter(|l| !l.is_empty()).map(str::to_string));
        }
        for r in read_jsonl::<LikertRating>(&dir.join(RATINGS_FILE))? {
            ledger.rated.insert((r.task_id.clone(), r.rater_id.clone()));
            ledger.rated_tasks.insert(r.task_id.clone());
            ledger.ratings.push(r);
        }
        Ok(AnnotationStore {
            dir: dir.to_path_buf(),
            meta,
            rubric: Rubric::default(),
            tasks,
            by_id,
            ledger: Mutex::new(ledger),
            clock: Box::new(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        })
    }

    pub fn with_clock(mut self, clock: impl Fn() -> String + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn meta(&self) -> &StoreMeta {
        &self.meta
    }

    pub fn rubric(&self) -> &Rubric {
        &self.rubric
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Ledger> {
        self.ledger.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Tasks with their current status.
    pub fn tasks(&self) -> Vec<AnnotationTask> {
        let l = self.lock();
        self.tasks
            .iter()
            .map(|t| {
                let mut t = t.clone();
                if l.rated_tasks.contains(&t.task_id) {
                    t.status = TaskStatus::Rated;
                }
                t
            })
            .collect()
    }

    /// Idempotent; returns true when the rater is new.
    pub fn register_rater(&self, rater_id: &str) -> Result<bool, AnnotateError> {
        if !valid_rater_id(rater_id) {
            return Err(AnnotateError::BadRaterId(rater_id.to_string()));
        }
        let mut l = self.lock();
        if l.raters.contains(rater_id) {
            return Ok(false);
        }
        append_line(&self.dir.join(RATERS_FILE), rater_id)?;
        l.raters.insert(rater_id.to_string());
        Ok(true)
    }

    fn progress_locked(&self, l: &Ledger, rater_id: &str) -> Progress {
        let rated = self
            .tasks
            .iter()
            .filter(|t| l.rated.contains(&(t.task_id.clone(), rater_id.to_string())))
            .count();
        Progress {
            rated,
            total: self.tasks.len(),
        }
    }

    pub fn progress(&self, rater_id: &str) -> Result<Progress, AnnotateError> {
        let l = self.lock();
        if !l.raters.contains(rater_id) {
            return Err(AnnotateError::UnknownRater(rater_id.to_string()));
        }
        Ok(self.progress_locked(&l, rater_id))
    }

    /// The first task, in id order, this rater has not rated yet.
    pub fn next_task(&self, rater_id: &str) -> Result<NextTask, AnnotateError> {
        let l = self.lock();
        if !l.raters.contains(rater_id) {
            return Err(AnnotateError::UnknownRater(rater_id.to_string()));
        }
        let progress = self.progress_locked(&l, rater_id);
        let next = self
            .tasks
            .iter()
            .find(|t| !l.rated.contains(&(t.task_id.clone(), rater_id.to_string())));
        Ok(match next {
            Some(t) => {
                let mut task = t.clone();
                if l.rated_tasks.contains(&task.task_id) {
                    task.status = TaskStatus::Rated;
                }
                NextTask::Task(Box::new(TaskView {
                    task,
                    rubric: self.rubric.levels.clone(),
                    progress,
                }))
            }
            None => NextTask::Done { progress },
        })
    }

    pub fn submit(&self, sub: &RatingSubmission) -> Result<LikertRating, AnnotateError> {
        let score = LikertScore::new(sub.score).map_err(|_| AnnotateError::ScoreOutOfRange(sub.score))?;
        let idx = *self
            .by_id
            .get(&sub.task_id)
            .ok_or_else(|| AnnotateError::UnknownTask(sub.task_id.clone()))?;
        let task = &self.tasks[idx];
        let mut l = self.lock();
        if !l.raters.contains(&sub.rater_id) {
            return Err(AnnotateError::UnknownRater(sub.rater_id.clone()));
        }
        let key = (sub.task_id.clone(), sub.rater_id.clone());
        if l.rated.contains(&key) {
            return Err(AnnotateError::Duplicate {
                task_id: sub.task_id.clone(),
                rater_id: sub.rater_id.clone(),
            });
        }
        let rating = LikertRating {
            task_id: task.task_id.clone(),
            rater_id: sub.rater_id.clone(),
            case_id: task.case_id.clone(),
            model_id: task.model_id.clone(),
            score,
            comment: sub.comment.clone().filter(|c| !c.trim().is_empty()),
            timestamp: (self.clock)(),
        };
        append_line(
            &self.dir.join(RATINGS_FILE),
            &serde_json::to_string(&rating).expect("rating serializes"),
        )?;
        l.rated.insert(key);
        l.rated_tasks.insert(rating.task_id.clone());
        l.ratings.push(rating.clone());
        Ok(rating)
    }

    pub fn export(&self) -> ExportBundle {
        let mut ratings = self.lock().ratings.clone();
        ratings.sort_by(|a, b| (&a.model_id, &a.case_id, &a.rater_id).cmp(&(&b.model_id, &b.case_id, &b.rater_id)));
        let mut by_model: BTreeMap<String, Vec<LikertScore>> = BTreeMap::new();
        for r in &ratings {
            by_model.entry(r.model_id.clone()).or_default().push(r.score);
        }
        let models = by_model
            .into_iter()
            .map(|(model_id, scores)| ModelDistribution {
                model_id,
                summary: likert_aggregate(&scores).expect("non-empty per model"),
            })
            .collect();
        ExportBundle {
            run_id: self.meta.run_id.clone(),
            ratings,
            models,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDistribution {
    pub model_id: String,
    #[serde(flatten)]
    pub summary: LikertSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportBundle {
    pub run_id: String,
    pub ratings: Vec<LikertRating>,
    pub models: Vec<ModelDistribution>,
}

impl ExportBundle {
    pub fn ratings_jsonl(&self) -> String {
        let mut s = String::new();
        for r in &self.ratings {
            s.push_str(&serde_json::to_string(r).expect("rating serializes"));
            s.push('\n');
        }
        s
    }

    pub fn distribution_table(&self) -> Table {
        let mut t = Table::new(["Model", "1", "2", "3", "4", "5", "Mean"]);
        for m in &self.models {
            let mut row = vec![m.model_id.clone()];
            row.extend(m.summary.distribution.iter().map(u64::to_string));
            row.push(format!("{:.2}", m.summary.mean));
            t.push(row);
        }
        t
    }

    /// `ratings.jsonl`, `distribution.json` and `distribution.txt`.
    pub fn write(&self, dir: &Path) -> Result<(), AnnotateError> {
        fs::create_dir_all(dir).map_err(|e| store_err(dir, e))?;
        let files = [
            ("ratings.jsonl", self.ratings_jsonl()),
            (
                "distribution.json",
                serde_json::to_string_pretty(&serde_json::json!({ "run_id": self.run_id, "models": self.models }))
                    .unwrap()
                    + "\n",
            ),
            ("distribution.txt", self.distribution_table().render()),
        ];
        for (name, body) in files {
            let p = dir.join(name);
            fs::write(&p, body).map_err(|e| store_err(&p, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, expl: Option<&str>) -> PredictionRecord {
        PredictionRecord {
            case_id: id.into(),
            predicted: Prediction::Class(1),
            explanation: expl.map(str::to_string),
            raw_output: String::new(),
            prompt_digest: String::new(),
            template: crate::prompts::TemplateKind::InstrPredExpl,
            instruction_index: Some(0),
            seed: 0,
            rule: None,
        }
    }

    fn run(n: usize) -> Vec<PredictionRecord> {
        (0..n).map(|i| record(&format!("c{i:04}"), Some("because"))).collect()
    }

    fn store(n: usize, dir: &Path) -> AnnotationStore {
        let tasks = create_tasks(&run(n), "m", &HashMap::new(), n, 1, 10).unwrap();
        let meta = StoreMeta {
            run_id: "r".into(),
            seed: 1,
            sample: n,
            excerpt_words: 10,
        };
        AnnotationStore::create(dir, meta, tasks)
            .unwrap()
            .with_clock(|| "2026-01-01T00:00:00Z".into())
    }

    #[test]
    fn rubric_has_five_levels() {
        let r = Rubric::default();
        assert_eq!(r.levels.len(), 5);
        assert!(r.levels[0].contains("entirely incorrect or fails to provide"));
    }

    #[test]
    fn sampling() {
        let recs = run(200);
        let a = create_tasks(&recs, "m", &HashMap::new(), 50, 7, 10).unwrap();
        let b = create_tasks(&recs, "m", &HashMap::new(), 50, 7, 10).unwrap();
        assert_eq!(a.len(), 50);
        assert_eq!(a, b);
        let c = create_tasks(&recs, "m", &HashMap::new(), 50, 8, 10).unwrap();
        assert_ne!(a, c);
        assert_eq!(
            create_tasks(&recs, "m", &HashMap::new(), 200, 7, 10).unwrap().len(),
            200
        );
        assert!(matches!(
            create_tasks(&recs, "m", &HashMap::new(), 201, 7, 10),
            Err(AnnotateError::SampleTooLarge { .. })
        ));
        let no_expl = vec![record("a", None), record("b", Some("  "))];
        assert!(matches!(
            create_tasks(&no_expl, "m", &HashMap::new(), 1, 7, 10),
            Err(AnnotateError::EmptyRun)
        ));
    }

    #[test]
    fn excerpts() {
        assert_eq!(excerpt("a b c d", 2), "a b ...");
        assert_eq!(excerpt("a b", 5), "a b");
    }

    #[test]
    fn queue_and_submission_rules() {
        let dir = tempfile::tempdir().unwrap();
        let s = store(3, dir.path());
        assert!(matches!(s.next_task("x"), Err(AnnotateError::UnknownRater(_))));
        assert!(s.register_rater("alice").unwrap());
        assert!(!s.register_rater("alice").unwrap());
        assert!(s.register_rater("bad id").is_err());
        let NextTask::Task(v) = s.next_task("alice").unwrap() else {
            panic!()
        };
        assert_eq!(v.task.task_id, "m:c0000");
        assert_eq!(v.progress, Progress { rated: 0, total: 3 });
        let sub = |t: &str, score| RatingSubmission {
            task_id: t.into(),
            rater_id: "alice".into(),
            score,
            comment: None,
        };
        assert!(matches!(
            s.submit(&sub("m:c0000", 0)),
            Err(AnnotateError::ScoreOutOfRange(0))
        ));
        assert!(matches!(s.submit(&sub("nope", 3)), Err(AnnotateError::UnknownTask(_))));
        s.submit(&sub("m:c0000", 5)).unwrap();
        assert!(matches!(
            s.submit(&sub("m:c0000", 4)),
            Err(AnnotateError::Duplicate { .. })
        ));
        assert_eq!(s.tasks()[0].status, TaskStatus::Rated);
        assert_eq!(s.tasks()[1].status, TaskStatus::Open);
        s.submit(&sub("m:c0001", 3)).unwrap();
        s.submit(&sub("m:c0002", 3)).unwrap();
        assert!(matches!(
            s.next_task("alice").unwrap(),
            NextTask::Done {
                progress: Progress { rated: 3, total: 3 }
            }
        ));
    }

    #[test]
    fn ledger_survives_reopen_and_export_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        {
            let s = store(2, dir.path());
            s.register_rater("r1").unwrap();
            for t in ["m:c0000", "m:c0001"] {
                s.submit(&RatingSubmission {
                    task_id: t.into(),
                    rater_id: "r1".into(),
                    score: 3,
                    comment: Some("ok".into()),
                })
                .unwrap();
            }
        }
        let s = AnnotationStore::open(dir.path()).unwrap();
        assert!(matches!(s.next_task("r1").unwrap(), NextTask::Done { .. }));
        let e = s.export();
        assert_eq!(e.models[0].summary.distribution, [0, 0, 2, 0, 0]);
        assert_eq!(e.models[0].summary.mean, 3.0);
        let (a, b) = (dir.path().join("e1"), dir.path().join("e2"));
        e.write(&a).unwrap();
        s.export().write(&b).unwrap();
        for f in ["ratings.jsonl", "distribution.json", "distribution.txt"] {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        }
    }
}
