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

//! Seeded train/validation/test splits, court-tier subsets, temporal test
//! sets and the corpus statistics tables.
//!
//! Splits are persisted as id manifests, never as copies of the text.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{CleanJudgment, CourtTier};
use crate::labeler::{to_task_label, BinaryVariant, DecisionLabel, LabelKind, LabeledCase, Task};
use crate::report::{fmt_opt, Table};
use crate::text::{indian_grouping, sha256_hex};

pub const MIN_SPLIT_CASES: usize = 10;
pub const DEFAULT_SEED: u64 = 13;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("split ratio must sum to 100, got {0:?}")]
    BadRatio([u32; 3]),
    #[error("need at least {MIN_SPLIT_CASES} cases to split, got {0}")]
    TooFewCases(usize),
    #[error("tier set `{0}` is not a prefix of SCI+HC+Tribunal+DailyOrderDistrict")]
    BadTiers(String),
    #[error("invalid date range: {0}")]
    BadRange(String),
    #[error("manifest {path}: {message}")]
    Manifest { path: String, message: String },
    #[error("id `{0}` in manifest is not in the labeled corpus")]
    UnknownId(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// A cumulative prefix of the court ladder, e.g. `SCI+HC`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TierSet {
    depth: usize,
}

impl TierSet {
    pub const ALL: TierSet = TierSet { depth: 4 };

    pub fn prefix(depth: usize) -> Option<TierSet> {
        (1..=4).contains(&depth).then_some(TierSet { depth })
    }

    pub fn tiers(&self) -> &'static [CourtTier] {
        &CourtTier::LADDER[..self.depth]
    }

    pub fn contains(&self, tier: CourtTier) -> bool {
        tier.ladder_position() < self.depth
    }

    /// Section heading used in the statistics tables, e.g. `SCI + HCs`.
    pub fn section_title(&self) -> String {
        self.tiers()
            .iter()
            .map(|t| t.display_name())
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

impl fmt::Display for TierSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.tiers().iter().map(|t| t.as_str()).collect();
        f.write_str(&names.join("+"))
    }
}

impl FromStr for TierSet {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(TierSet::ALL);
        }
        let parts: Vec<&str> = s.split('+').map(str::trim).filter(|p| !p.is_empty()).collect();
        let bad = || DatasetError::BadTiers(s.to_string());
        if parts.is_empty() || parts.len() > 4 {
            return Err(bad());
        }
        for (i, p) in parts.iter().enumerate() {
            let tier: CourtTier = p.parse().map_err(|_| bad())?;
            if tier != CourtTier::LADDER[i] {
                return Err(bad());
            }
        }
        Ok(TierSet { depth: parts.len() })
    }
}

impl Serialize for TierSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TierSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive calendar range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, DatasetError> {
        if start > end {
            return Err(DatasetError::BadRange(format!("{start} is after {end}")));
        }
        Ok(DateRange { start, end })
    }

    /// January 2020 through April 2024, month boundaries inclusive.
    pub fn temporal_default() -> Self {
        DateRange {
            start: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(2024, 4, 30).unwrap(),
        }
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }
}

impl FromStr for DateRange {
    type Err = DatasetError;
    /// `YYYY-MM-DD..YYYY-MM-DD`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| DatasetError::BadRange(s.to_string()))?;
        let p = |x: &str| {
            NaiveDate::parse_from_str(x.trim(), "%Y-%m-%d").map_err(|e| DatasetError::BadRange(format!("{x}: {e}")))
        };
        DateRange::new(p(a)?, p(b)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Train, validation, test percentages.
    pub ratio: [u32; 3],
    pub seed: u64,
    pub task: Task,
    pub variant: BinaryVariant,
    pub tiers: TierSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal_test: Option<DateRange>,
    #[serde(default)]
    pub stratify: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratio: [70, 10, 20],
            seed: DEFAULT_SEED,
            task: Task::Binary,
            variant: BinaryVariant::Single,
            tiers: TierSet::ALL,
            temporal_test: None,
            stratify: false,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.ratio.iter().sum::<u32>() != 100 {
            return Err(DatasetError::BadRatio(self.ratio));
        }
        Ok(())
    }

    pub fn task_label(&self, label: DecisionLabel) -> Option<u8> {
        to_task_label(label, self.task, self.variant)
    }
}

pub const BUCKETS: [&str; 3] = ["train", "val", "test"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub config: SplitConfig,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    pub manifest_hash: String,
}

impl DatasetSplit {
    pub fn buckets(&self) -> [(&'static str, &[String]); 3] {
        [("train", &self.train), ("val", &self.val), ("test", &self.test)]
    }

    pub fn bucket(&self, name: &str) -> Option<&[String]> {
        self.buckets().into_iter().find(|(n, _)| *n == name).map(|(_, ids)| ids)
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.val.len(), self.test.len()]
    }

    pub fn compute_hash(config: &SplitConfig, train: &[String], val: &[String], test: &[String]) -> String {
        let mut buf = serde_json::to_string(config).expect("config serializes");
        for (name, ids) in [("train", train), ("val", val), ("test", test)] {
            buf.push('\n');
            buf.push_str(name);
            for id in ids {
                buf.push('\n');
                buf.push_str(id);
            }
        }
        sha256_hex(buf)
    }

    /// Write `split.json` plus one `<bucket>.manifest` per bucket into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), DatasetError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let meta = serde_json::json!({
            "config": self.config,
            "manifest_hash": self.manifest_hash,
            "sizes": { "train": self.train.len(), "val": self.val.len(), "test": self.test.len() },
        });
        let path = dir.join("split.json");
        fs::write(&path, serde_json::to_string_pretty(&meta).unwrap() + "\n").map_err(io_err(&path))?;
        for (name, ids) in self.buckets() {
            let path = dir.join(format!("{name}.manifest"));
            let mut s = format!(
                "# ljp-manifest v1 digest={} bucket={name} n={}\n",
                self.manifest_hash,
                ids.len()
            );
            for id in ids {
                s.push_str(id);
                s.push('\n');
            }
            fs::write(&path, s).map_err(io_err(&path))?;
        }
        Ok(())
    }

    /// Read a split written by [`DatasetSplit::write`], checking every
    /// manifest header against the recomputed digest.
    pub fn read(dir: &Path) -> Result<Self, DatasetError> {
        let path = dir.join("split.json");
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        #[derive(Deserialize)]
        struct Meta {
            config: SplitConfig,
            manifest_hash: String,
        }
        let meta: Meta = serde_json::from_str(&text).map_err(|e| DatasetError::Manifest {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut lists: Vec<Vec<String>> = Vec::new();
        for name in BUCKETS {
            let path = dir.join(format!("{name}.manifest"));
            let m = read_manifest(&path)?;
            if m.digest != meta.manifest_hash || m.bucket != name {
                return Err(DatasetError::Manifest {
                    path: path.display().to_string(),
                    message: "header does not match split.json".into(),
                });
            }
            lists.push(m.ids);
        }
        let test = lists.pop().unwrap();
        let val = lists.pop().unwrap();
        let train = lists.pop().unwrap();
        let hash = Self::compute_hash(&meta.config, &train, &val, &test);
        if hash != meta.manifest_hash {
            return Err(DatasetError::Manifest {
                path: dir.display().to_string(),
                message: "manifest digest mismatch; the id lists were edited".into(),
            });
        }
        Ok(DatasetSplit {
            config: meta.config,
            train,
            val,
            test,
            manifest_hash: meta.manifest_hash,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub digest: String,
    pub bucket: String,
    pub ids: Vec<String>,
}

pub fn read_manifest(path: &Path) -> Result<Manifest, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |message: &str| DatasetError::Manifest {
        path: path.display().to_string(),
        message: message.to_string(),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty manifest"))?;
    let rest = header
        .strip_prefix("# ljp-manifest v1 ")
        .ok_or_else(|| bad("missing manifest header"))?;
    let mut fields = HashMap::new();
    for kv in rest.split_whitespace() {
        if let Some((k, v)) = kv.split_once('=') {
            fields.insert(k, v);
        }
    }
    let digest = fields
        .get("digest")
        .ok_or_else(|| bad("header has no digest"))?
        .to_string();
    let bucket = fields
        .get("bucket")
        .ok_or_else(|| bad("header has no bucket"))?
        .to_string();
    let ids: Vec<String> = lines.filter(|l| !l.is_empty()).map(str::to_string).collect();
    if let Some(n) = fields.get("n") {
        if n.parse::<usize>().ok() != Some(ids.len()) {
            return Err(bad("id count does not match header"));
        }
    }
    Ok(Manifest { digest, bucket, ids })
}

/// Bucket sizes by largest remainder; ties go to the earlier bucket
/// (train, then validation).
pub fn apportion(n: usize, ratio: [u32; 3]) -> [usize; 3] {
    let total: u64 = ratio.iter().map(|&r| r as u64).sum();
    let mut sizes = [0usize; 3];
    let mut rems = [0u64; 3];
    for i in 0..3 {
        let q = n as u64 * ratio[i] as u64;
        sizes[i] = (q / total) as usize;
        rems[i] = q % total;
    }
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| rems[b].cmp(&rems[a]).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Cases matching the config's tier set and task/variant, minus `exclude`.
pub fn eligible_cases<'a>(
    cases: &'a [LabeledCase],
    cfg: &SplitConfig,
    exclude: &HashSet<String>,
) -> Vec<&'a LabeledCase> {
    cases
        .iter()
        .filter(|c| cfg.tiers.contains(c.case.court_tier))
        .filter(|c| cfg.task_label(c.label).is_some())
        .filter(|c| !exclude.contains(&c.case.id))
        .collect()
}

/// Seeded shuffle followed by a contiguous cut at the configured ratio.
/// Input order does not matter: ids are sorted before shuffling.
pub fn make_split(cases: &[&LabeledCase], cfg: &SplitConfig) -> Result<DatasetSplit, DatasetError> {
    cfg.validate()?;
    if cases.len() < MIN_SPLIT_CASES {
        return Err(DatasetError::TooFewCases(cases.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let order: Vec<String> = if cfg.stratify {
        stratified_order(cases, cfg, &mut rng)
    } else {
        let mut ids: Vec<String> = cases.iter().map(|c| c.case.id.clone()).collect();
        ids.sort();
        ids.shuffle(&mut rng);
        ids
    };
    let [a, b, _] = apportion(order.len(), cfg.ratio);
    let train = order[..a].to_vec();
    let val = order[a..a + b].to_vec();
    let test = order[a + b..].to_vec();
    let manifest_hash = DatasetSplit::compute_hash(cfg, &train, &val, &test);
    Ok(DatasetSplit {
        config: cfg.clone(),
        train,
        val,
        test,
        manifest_hash,
    })
}

/// Shuffle each label group, then interleave groups by fractional rank so
/// any contiguous cut holds roughly the global label proportions.
fn stratified_order(cases: &[&LabeledCase], cfg: &SplitConfig, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut groups: BTreeMap<u8, Vec<String>> = BTreeMap::new();
    for c in cases {
        let label = cfg.task_label(c.label).unwrap_or(u8::MAX);
        groups.entry(label).or_default().push(c.case.id.clone());
    }
    let mut keyed: Vec<(f64, u8, String)> = Vec::with_capacity(cases.len());
    for (label, mut ids) in groups {
        ids.sort();
        ids.shuffle(rng);
        let n = ids.len() as f64;
        for (rank, id) in ids.into_iter().enumerate() {
            keyed.push(((rank as f64 + 0.5) / n, label, id));
        }
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, _, id)| id).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalTest {
    pub range: DateRange,
    pub ids: Vec<String>,
    /// Cases without a date; they are never in the temporal list.
    pub undated: usize,
}

impl TemporalTest {
    pub fn id_set(&self) -> HashSet<String> {
        self.ids.iter().cloned().collect()
    }
}

pub fn make_temporal_test<'a, I>(cases: I, range: DateRange) -> TemporalTest
where
    I: IntoIterator<Item = &'a CleanJudgment>,
{
    let mut ids = Vec::new();
    let mut undated = 0;
    for c in cases {
        match c.date {
            Some(d) if range.contains(d) => ids.push(c.id.clone()),
            Some(_) => {}
            None => undated += 1,
        }
    }
    if undated > 0 {
        log::warn!("{undated} undated cases excluded from the temporal test set");
    }
    ids.sort();
    TemporalTest { range, ids, undated }
}

pub fn tier_subset(cases: &[LabeledCase], tiers: TierSet) -> Vec<&LabeledCase> {
    cases.iter().filter(|c| tiers.contains(c.case.court_tier)).collect()
}

/// Temporal ids (when configured) are removed from the eligible set before
/// the split is cut, so they never reach train or validation.
pub fn build_split(
    cases: &[LabeledCase],
    cfg: &SplitConfig,
) -> Result<(DatasetSplit, Option<TemporalTest>), DatasetError> {
    let temporal = cfg.temporal_test.map(|range| {
        make_temporal_test(
            cases
                .iter()
                .filter(|c| cfg.tiers.contains(c.case.court_tier))
                .map(|c| &c.case),
            range,
        )
    });
    let exclude = temporal.as_ref().map(TemporalTest::id_set).unwrap_or_default();
    let eligible = eligible_cases(cases, cfg, &exclude);
    let split = make_split(&eligible, cfg)?;
    Ok((split, temporal))
}

pub const BINARY_ROWS: [&str; 3] = ["#Documents", "Avg #words", "Acceptance(%)"];
pub const TERNARY_ROWS: [&str; 4] = [
    "#Documents",
    "Avg #words",
    "Clear acceptance(%)",
    "Partial acceptance (%)",
];

/// Statistics for one column (bucket) of a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketStats {
    pub column: String,
    pub n_documents: usize,
    pub avg_words: Option<u64>,
    pub acceptance_pct: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    pub section: String,
    pub task: Task,
    pub columns: Vec<BucketStats>,
}

/// One machine-readable cell; `metric` is the exact row label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub section: String,
    pub column: String,
    pub metric: String,
    pub value: Option<f64>,
}

fn pct(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 * 100.0 / den as f64)
}

/// Stats over labels already mapped to the task's class indices.
fn bucket_stats(column: &str, items: &[(usize, u8)], task: Task) -> BucketStats {
    let n = items.len();
    let words: usize = items.iter().map(|(w, _)| w).sum();
    let count = |l: u8| items.iter().filter(|(_, x)| *x == l).count();
    BucketStats {
        column: column.to_string(),
        n_documents: n,
        avg_words: (n > 0).then(|| (words as f64 / n as f64).round() as u64),
        acceptance_pct: pct(count(1), n),
        partial_pct: match task {
            Task::Ternary => pct(count(2), n),
            Task::Binary => None,
        },
    }
}

impl StatsTable {
    pub fn row_labels(&self) -> &'static [&'static str] {
        match self.task {
            Task::Binary => &BINARY_ROWS,
            Task::Ternary => &TERNARY_ROWS,
        }
    }

    fn cell(&self, col: &BucketStats, row: usize) -> Option<f64> {
        match row {
            0 => Some(col.n_documents as f64),
            1 => col.avg_words.map(|w| w as f64),
            2 => col.acceptance_pct,
            _ => col.partial_pct,
        }
    }

    pub fn to_table(&self) -> Table {
        let mut t =
            Table::new(std::iter::once("Metric".to_string()).chain(self.columns.iter().map(|c| c.column.clone())))
                .with_title(self.section.clone());
        for (i, label) in self.row_labels().iter().enumerate() {
            let mut row = vec![label.to_string()];
            for c in &self.columns {
                row.push(match i {
                    0 => indian_grouping(c.n_documents as u64),
                    1 => c.avg_words.map(indian_grouping).unwrap_or_else(|| "-".into()),
                    _ => fmt_opt(self.cell(c, i), 2),
                });
            }
            t.push(row);
        }
        t
    }

    pub fn render(&self) -> String {
        self.to_table().render()
    }

    pub fn records(&self) -> Vec<StatsRecord> {
        let mut out = Vec::new();
        for c in &self.columns {
            for (i, label) in self.row_labels().iter().enumerate() {
                out.push(StatsRecord {
                    section: self.section.clone(),
                    column: c.column.clone(),
                    metric: label.to_string(),
                    value: self.cell(c, i),
                });
            }
        }
        out
    }
}

/// Binary tables have the columns Train multi / Train single / Validation /
/// Test. `Train multi` maps partial cases to accepted; `Train single` keeps
/// only single-outcome training cases. Ternary tables have Train /
/// Validation / Test.
pub fn compute_stats(split: &DatasetSplit, cases: &HashMap<&str, &LabeledCase>) -> Result<StatsTable, DatasetError> {
    let cfg = &split.config;
    let resolve = |ids: &[String]| -> Result<Vec<&LabeledCase>, DatasetError> {
        ids.iter()
            .map(|id| {
                cases
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| DatasetError::UnknownId(id.clone()))
            })
            .collect()
    };
    let mapped = |cs: &[&LabeledCase], task: Task, variant: BinaryVariant| -> Vec<(usize, u8)> {
        cs.iter()
            .filter_map(|c| to_task_label(c.label, task, variant).map(|l| (c.case.word_count, l)))
            .collect()
    };
    let train = resolve(&split.train)?;
    let val = resolve(&split.val)?;
    let test = resolve(&split.test)?;
    let columns = match cfg.task {
        Task::Binary => {
            let single: Vec<&LabeledCase> = train
                .iter()
                .copied()
                .filter(|c| c.label_kind == LabelKind::Single)
                .collect();
            vec![
                bucket_stats(
                    "Train multi",
                    &mapped(&train, Task::Binary, BinaryVariant::Multi),
                    Task::Binary,
                ),
                bucket_stats(
                    "Train single",
                    &mapped(&single, Task::Binary, BinaryVariant::Single),
                    Task::Binary,
                ),
                bucket_stats("Validation", &mapped(&val, Task::Binary, cfg.variant), Task::Binary),
                bucket_stats("Test", &mapped(&test, Task::Binary, cfg.variant), Task::Binary),
            ]
        }
        Task::Ternary => vec![
            bucket_stats("Train", &mapped(&train, Task::Ternary, cfg.variant), Task::Ternary),
            bucket_stats("Validation", &mapped(&val, Task::Ternary, cfg.variant), Task::Ternary),
            bucket_stats("Test", &mapped(&test, Task::Ternary, cfg.variant), Task::Ternary),
        ],
    };
    Ok(StatsTable {
        section: cfg.tiers.section_title(),
        task: cfg.task,
        columns,
    })
}

/// Per-tier statistics of a temporal test set (binary schema).
pub fn temporal_stats(cases: &[&LabeledCase], variant: BinaryVariant) -> StatsTable {
    let columns = CourtTier::LADDER
        .iter()
        .map(|&tier| {
            let items: Vec<(usize, u8)> = cases
                .iter()
                .filter(|c| c.case.court_tier == tier)
                .filter_map(|c| to_task_label(c.label, Task::Binary, variant).map(|l| (c.case.word_count, l)))
                .collect();
            bucket_stats(tier.display_name(), &items, Task::Binary)
        })
        .collect();
    StatsTable {
        section: "Temporal test".into(),
        task: Task::Binary,
        columns,
    }
}

/// Document counts per tier through the corpus-building stages.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunnelRow {
    pub raw: usize,
    pub after_preprocessing: usize,
    pub after_labeling: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFunnel {
    pub rows: BTreeMap<CourtTier, FunnelRow>,
}

impl CorpusFunnel {
    pub fn add_raw(&mut self, tier: CourtTier) {
        self.rows.entry(tier).or_default().raw += 1;
    }
    pub fn add_preprocessed(&mut self, tier: CourtTier) {
        self.rows.entry(tier).or_default().after_preprocessing += 1;
    }
    pub fn add_labeled(&mut self, tier: CourtTier) {
        self.rows.entry(tier).or_default().after_labeling += 1;
    }

    pub fn total(&self) -> FunnelRow {
        self.rows.values().fold(FunnelRow::default(), |acc, r| FunnelRow {
            raw: acc.raw + r.raw,
            after_preprocessing: acc.after_preprocessing + r.after_preprocessing,
            after_labeling: acc.after_labeling + r.after_labeling,
        })
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new([
            "Court-wise",
            "Raw files",
            "Files After Preprocessing",
            "Files After Labeling",
        ]);
        let g = |n: usize| indian_grouping(n as u64);
        for tier in CourtTier::LADDER {
            let r = self.rows.get(&tier).cloned().unwrap_or_default();
            t.push([
                tier.display_name().to_string(),
                g(r.raw),
                g(r.after_preprocessing),
                g(r.after_labeling),
            ]);
        }
        let tot = self.total();
        t.push([
            "Total".to_string(),
            g(tot.raw),
            g(tot.after_preprocessing),
            g(tot.after_labeling),
        ]);
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeler::Evidence;
    use crate::labeler::Polarity;

    fn case(id: &str, tier: CourtTier, label: DecisionLabel, words: usize) -> LabeledCase {
        LabeledCase {
            case: CleanJudgment {
                id: id.into(),
                court_tier: tier,
                date: None,
                body_text: String::new(),
                word_count: words,
            },
            label,
            label_kind: if label == DecisionLabel::Partial {
                LabelKind::Multi
            } else {
                LabelKind::Single
            },
            evidence: vec![Evidence {
                key_term: "appeal".into(),
                keyword: "allowed".into(),
                span: (0, 0),
                polarity: Polarity::Positive,
                negated: false,
                partial_marker: None,
            }],
        }
    }

    fn corpus(n: usize) -> Vec<LabeledCase> {
        (0..n)
            .map(|i| {
                case(
                    &format!("c{i:05}"),
                    CourtTier::LADDER[i % 4],
                    DecisionLabel::from_value((i % 3) as u8).unwrap(),
                    100 + i,
                )
            })
            .collect()
    }

    #[test]
    fn apportion_examples() {
        assert_eq!(apportion(100, [70, 10, 20]), [70, 10, 20]);
        assert_eq!(apportion(101, [70, 10, 20]), [71, 10, 20]);
        assert_eq!(apportion(10, [70, 10, 20]), [7, 1, 2]);
        // 0.5 remainders on train and test; tie goes to train.
        assert_eq!(apportion(5, [50, 0, 50]), [3, 0, 2]);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let cs = corpus(100);
        let refs: Vec<&LabeledCase> = cs.iter().collect();
        let cfg = SplitConfig {
            seed: 7,
            ..SplitConfig::default()
        };
        let a = make_split(&refs, &cfg).unwrap();
        let b = make_split(&refs, &cfg).unwrap();
        assert_eq!(a.sizes(), [70, 10, 20]);
        assert_eq!(a, b);
        let mut rev = refs.clone();
        rev.reverse();
        assert_eq!(make_split(&rev, &cfg).unwrap(), a);
    }

    #[test]
    fn too_few_and_bad_ratio() {
        let cs = corpus(9);
        let refs: Vec<&LabeledCase> = cs.iter().collect();
        assert!(matches!(
            make_split(&refs, &SplitConfig::default()),
            Err(DatasetError::TooFewCases(9))
        ));
        let cfg = SplitConfig {
            ratio: [70, 10, 10],
            ..SplitConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(DatasetError::BadRatio(_))));
    }

    #[test]
    fn tier_sets() {
        assert_eq!(
            "SCI+HC".parse::<TierSet>().unwrap().tiers(),
            &[CourtTier::Sci, CourtTier::Hc]
        );
        assert!("HC".parse::<TierSet>().is_err());
        assert!("SCI+Tribunal".parse::<TierSet>().is_err());
        assert_eq!("all".parse::<TierSet>().unwrap(), TierSet::ALL);
        assert_eq!(TierSet::prefix(3).unwrap().section_title(), "SCI + HCs + Tribunals");
        let cs = corpus(40);
        let sci = tier_subset(&cs, TierSet::prefix(1).unwrap());
        assert!(sci.iter().all(|c| c.case.court_tier == CourtTier::Sci));
        assert_eq!(tier_subset(&cs, TierSet::ALL).len(), cs.len());
    }

    #[test]
    fn temporal_boundaries() {
        let range = DateRange::temporal_default();
        let d = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
        assert!(range.contains(d("2021-06-01")));
        assert!(range.contains(d("2020-01-01")));
        assert!(range.contains(d("2024-04-30")));
        assert!(!range.contains(d("2019-12-31")));
        assert!(!range.contains(d("2024-05-01")));
        assert_eq!("2020-01-01..2024-04-30".parse::<DateRange>().unwrap(), range);
        assert!("2024-01-01..2020-01-01".parse::<DateRange>().is_err());
    }

    #[test]
    fn ternary_stats_counts() {
        use DecisionLabel::*;
        let cs = [
            case("a", CourtTier::Sci, Accepted, 10),
            case("b", CourtTier::Sci, Accepted, 20),
            case("c", CourtTier::Sci, Rejected, 30),
            case("d", CourtTier::Sci, Partial, 41),
        ];
        let items: Vec<(usize, u8)> = cs.iter().map(|c| (c.case.word_count, c.label.value())).collect();
        let s = bucket_stats("Test", &items, Task::Ternary);
        assert_eq!(s.acceptance_pct, Some(50.0));
        assert_eq!(s.partial_pct, Some(25.0));
        assert_eq!(s.avg_words, Some(25));
        let empty = bucket_stats("Validation", &[], Task::Ternary);
        assert_eq!(empty.n_documents, 0);
        assert_eq!(empty.acceptance_pct, None);
    }

    #[test]
    fn binary_table_schema() {
        let cs: Vec<LabeledCase> = corpus(30)
            .into_iter()
            .filter(|c| c.label != DecisionLabel::Partial)
            .collect();
        let refs: Vec<&LabeledCase> = cs.iter().collect();
        let split = make_split(&refs, &SplitConfig::default()).unwrap();
        let by_id: HashMap<&str, &LabeledCase> = cs.iter().map(|c| (c.id(), c)).collect();
        let table = compute_stats(&split, &by_id).unwrap();
        assert_eq!(table.row_labels(), &["#Documents", "Avg #words", "Acceptance(%)"]);
        let cols: Vec<_> = table.columns.iter().map(|c| c.column.as_str()).collect();
        assert_eq!(cols, ["Train multi", "Train single", "Validation", "Test"]);
        assert_eq!(table.columns[0].n_documents, split.train.len());
        assert_eq!(table.columns[3].n_documents, split.test.len());
        let text = table.render();
        assert!(text.contains("Acceptance(%)"));
        assert_eq!(table.records().len(), 12);
    }

    #[test]
    fn manifest_round_trip_and_tamper_detection() {
        let cs = corpus(50);
        let refs: Vec<&LabeledCase> = cs.iter().collect();
        let split = make_split(&refs, &SplitConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        split.write(dir.path()).unwrap();
        assert_eq!(DatasetSplit::read(dir.path()).unwrap(), split);
        let p = dir.path().join("val.manifest");
        let text = fs::read_to_string(&p).unwrap();
        fs::write(&p, text.replace(&split.val[0], "intruder")).unwrap();
        assert!(DatasetSplit::read(dir.path()).is_err());
    }

    #[test]
    fn stratified_split_keeps_sizes() {
        let cs = corpus(200);
        let refs: Vec<&LabeledCase> = cs.iter().collect();
        let cfg = SplitConfig {
            task: Task::Ternary,
            stratify: true,
            ..SplitConfig::default()
        };
        let s = make_split(&refs, &cfg).unwrap();
        assert_eq!(s.sizes(), [140, 20, 40]);
        let by_id: HashMap<&str, &LabeledCase> = cs.iter().map(|c| (c.id(), c)).collect();
        let test_partial = s
            .test
            .iter()
            .filter(|id| by_id[id.as_str()].label == DecisionLabel::Partial)
            .count();
        // 66 of 200 are partial; a stratified test bucket of 40 holds 13 or 14.
        assert!((12..=14).contains(&test_partial), "{test_partial}");
    }

    #[test]
    fn funnel_totals() {
        let mut f = CorpusFunnel::default();
        f.add_raw(CourtTier::Sci);
        f.add_raw(CourtTier::Hc);
        f.add_preprocessed(CourtTier::Hc);
        f.add_labeled(CourtTier::Hc);
        assert_eq!(
            f.total(),
            FunnelRow {
                raw: 2,
                after_preprocessing: 1,
                after_labeling: 1
            }
        );
        assert!(f.to_table().render().contains("Total"));
    }
}
