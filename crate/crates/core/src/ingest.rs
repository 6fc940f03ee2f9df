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

//! Raw judgment loading, metadata stripping, body extraction and the
//! length / noise filters applied before labeling.
//!
//! The per-document pipeline is
//! `strip_metadata -> extract_body -> clean_tokens -> apply_filters`.
//! Token cleaning runs after metadata stripping so that header values
//! (which often contain runs such as `000`) are removed as whole lines.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::LazyLock;

use chrono::NaiveDate;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::text::has_char_run;

pub const DEFAULT_MIN_WORDS: usize = 50;
pub const DEFAULT_MAX_WORDS: usize = 32_000;

const DEFAULT_RULES: &str = include_str!("../config/metadata_rules.txt");

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid metadata rule {index} `{pattern}`: {source}")]
    InvalidRule {
        index: usize,
        pattern: String,
        #[source]
        source: regex::Error,
    },
    #[error("unknown court tier `{0}`")]
    UnknownTier(String),
}

/// Court tiers, in the order of the cumulative experiment ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CourtTier {
    #[serde(rename = "SCI")]
    Sci,
    #[serde(rename = "HC")]
    Hc,
    Tribunal,
    DailyOrderDistrict,
}

impl CourtTier {
    pub const LADDER: [CourtTier; 4] = [
        CourtTier::Sci,
        CourtTier::Hc,
        CourtTier::Tribunal,
        CourtTier::DailyOrderDistrict,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CourtTier::Sci => "SCI",
            CourtTier::Hc => "HC",
            CourtTier::Tribunal => "Tribunal",
            CourtTier::DailyOrderDistrict => "DailyOrderDistrict",
        }
    }

    /// Heading used in statistics tables.
    pub fn display_name(self) -> &'static str {
        match self {
            CourtTier::Sci => "SCI",
            CourtTier::Hc => "HCs",
            CourtTier::Tribunal => "Tribunals",
            CourtTier::DailyOrderDistrict => "Daily Orders and District Courts",
        }
    }

    pub fn ladder_position(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CourtTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CourtTier {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "sci" | "sc" | "supremecourt" => Ok(CourtTier::Sci),
            "hc" | "hcs" | "highcourt" | "highcourts" => Ok(CourtTier::Hc),
            "tribunal" | "tribunals" | "tribunalcourt" => Ok(CourtTier::Tribunal),
            "dailyorderdistrict"
            | "dailyordersdistrict"
            | "dailyorders"
            | "district"
            | "districtcourts"
            | "dailyordersanddistrictcourts" => Ok(CourtTier::DailyOrderDistrict),
            _ => Err(IngestError::UnknownTier(s.to_string())),
        }
    }
}

/// One unprocessed court document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawJudgment {
    pub id: String,
    pub court_tier: CourtTier,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    pub raw_text: String,
}

/// A judgment body that passed every filter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanJudgment {
    pub id: String,
    pub court_tier: CourtTier,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    pub body_text: String,
    pub word_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// Directory of `.txt` files (or a single file); the file stem is the id.
    PlainText,
    /// JSON lines with `id`, `court_tier`, optional `date`, `raw_text`.
    Records,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" | "plain_text" | "txt" => Ok(InputFormat::PlainText),
            "jsonl" | "records" | "line_delimited_records" => Ok(InputFormat::Records),
            other => Err(format!("unknown input format `{other}`")),
        }
    }
}

/// A per-record problem; loading continues past it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordError {
    pub source: PathBuf,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}: {} at line {}", self.source.display(), self.message, line),
            None => write!(f, "{}: {}", self.source.display(), self.message),
        }
    }
}

#[derive(Debug, Default)]
pub struct Loaded {
    /// Sorted by id.
    pub judgments: Vec<RawJudgment>,
    pub errors: Vec<RecordError>,
}

/// Load raw judgments from `path`. Plain-text inputs carry no tier, so
/// `default_tier` is applied to them.
pub fn load_raw(path: &Path, format: InputFormat, default_tier: CourtTier) -> Result<Loaded, IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let meta = fs::metadata(path).map_err(io_err)?;
    let files = if meta.is_dir() {
        let wanted: &[&str] = match format {
            InputFormat::PlainText => &["txt"],
            InputFormat::Records => &["jsonl", "ndjson"],
        };
        let mut files = Vec::new();
        for entry in fs::read_dir(path).map_err(io_err)? {
            let p = entry.map_err(io_err)?.path();
            let ext_ok = p
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| wanted.contains(&e));
            if p.is_file() && ext_ok {
                files.push(p);
            }
        }
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };

    let mut out = Loaded::default();
    let mut seen = HashSet::new();
    for file in files {
        let text = fs::read_to_string(&file).map_err(|source| IngestError::Io {
            path: file.clone(),
            source,
        })?;
        match format {
            InputFormat::PlainText => {
                let id = file
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default()
                    .to_string();
                if id.is_empty() {
                    out.errors.push(RecordError {
                        source: file,
                        line: None,
                        message: "empty file name".into(),
                    });
                    continue;
                }
                if !seen.insert(id.clone()) {
                    out.errors.push(RecordError {
                        source: file,
                        line: None,
                        message: format!("duplicate id {id}"),
                    });
                    continue;
                }
                out.judgments.push(RawJudgment {
                    id,
                    court_tier: default_tier,
                    date: None,
                    raw_text: text,
                });
            }
            InputFormat::Records => {
                for (i, line) in text.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let lineno = i + 1;
                    match parse_record(line) {
                        Ok(rec) => {
                            if seen.insert(rec.id.clone()) {
                                out.judgments.push(rec);
                            } else {
                                out.errors.push(RecordError {
                                    source: file.clone(),
                                    line: Some(lineno),
                                    message: format!("duplicate id {}", rec.id),
                                });
                            }
                        }
                        Err(message) => out.errors.push(RecordError {
                            source: file.clone(),
                            line: Some(lineno),
                            message,
                        }),
                    }
                }
            }
        }
    }
    out.judgments.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

fn parse_record(line: &str) -> Result<RawJudgment, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid record ({e})"))?;
    let obj = value.as_object().ok_or("record is not an object")?;
    let field = |name: &str| -> Result<&str, String> {
        match obj.get(name) {
            Some(Value::String(s)) => Ok(s.as_str()),
            Some(Value::Null) | None => Err(format!("missing field {name}")),
            Some(_) => Err(format!("field {name} is not a string")),
        }
    };
    let id = field("id")?;
    if id.is_empty() {
        return Err("missing field id".into());
    }
    let raw_text = field("raw_text")?;
    let court_tier: CourtTier = field("court_tier")?.parse().map_err(|e: IngestError| e.to_string())?;
    let date = match obj.get("date") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if s.is_empty() => None,
        Some(Value::String(s)) => Some(parse_date(s).ok_or_else(|| format!("invalid date {s}"))?),
        Some(_) => return Err("field date is not a string".into()),
    };
    Ok(RawJudgment {
        id: id.to_string(),
        court_tier,
        date,
        raw_text: raw_text.to_string(),
    })
}

/// Accepts `YYYY-MM-DD` or an ISO-8601 timestamp (the date part is kept).
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    let head = s.get(..10).unwrap_or(s);
    NaiveDate::parse_from_str(head, "%Y-%m-%d").ok()
}

/// Ordered metadata removal patterns.
#[derive(Debug, Clone)]
pub struct MetadataRules {
    patterns: Vec<Regex>,
}

impl MetadataRules {
    pub fn from_patterns<S: AsRef<str>>(patterns: &[S]) -> Result<Self, IngestError> {
        let patterns = patterns
            .iter()
            .enumerate()
            .map(|(index, p)| {
                Regex::new(p.as_ref()).map_err(|source| IngestError::InvalidRule {
                    index,
                    pattern: p.as_ref().to_string(),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MetadataRules { patterns })
    }

    /// Parse a rule file: one pattern per line, `#` comments and blank lines ignored.
    pub fn parse(source: &str) -> Result<Self, IngestError> {
        let lines: Vec<&str> = source
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .collect();
        Self::from_patterns(&lines)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let source = fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&source)
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> impl Iterator<Item = &str> {
        self.patterns.iter().map(Regex::as_str)
    }

    /// Delete every match of every rule. Rules are re-applied until the text
    /// is stable, so the result is a fixpoint and the operation idempotent.
    pub fn strip_metadata(&self, raw_text: &str) -> String {
        let mut current = raw_text.to_string();
        loop {
            let mut changed = false;
            for re in &self.patterns {
                if let std::borrow::Cow::Owned(next) = re.replace_all(&current, "") {
                    if next != current {
                        current = next;
                        changed = true;
                    }
                }
            }
            if !changed {
                return current;
            }
        }
    }
}

impl Default for MetadataRules {
    fn default() -> Self {
        // The bundled rule file is compiled in tests.
        Self::parse(DEFAULT_RULES).expect("bundled metadata rules are valid")
    }
}

pub fn strip_metadata(raw_text: &str, rules: &MetadataRules) -> String {
    rules.strip_metadata(raw_text)
}

static BODY_MARKER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(?:ORDER|JUDGMENT|JUDGEMENT)\b").unwrap());

/// Text after the first uppercase `ORDER`, `JUDGMENT` or `JUDGEMENT` marker,
/// with the separator that follows the marker (`:`, dashes, dots, whitespace)
/// trimmed. `None` when no marker is present.
pub fn extract_body(text: &str) -> Option<&str> {
    let m = BODY_MARKER.find(text)?;
    Some(
        text[m.end()..]
            .trim_start_matches(|c: char| c.is_whitespace() || matches!(c, ':' | '-' | '.' | '\u{2013}' | '\u{2014}')),
    )
}

/// Drop every whitespace token containing a character repeated three or more
/// times in a row; survivors are re-joined with single spaces.
pub fn clean_tokens(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for tok in text.split_whitespace() {
        if has_char_run(tok, 3) {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DropReason {
    TooShort,
    TooLong,
    NoBody,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::TooShort => "TooShort",
            DropReason::TooLong => "TooLong",
            DropReason::NoBody => "NoBody",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_words: usize,
    pub max_words: usize,
    /// Keep the whole stripped text when no body marker is found.
    pub keep_unmarked: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_words: DEFAULT_MIN_WORDS,
            max_words: DEFAULT_MAX_WORDS,
            keep_unmarked: false,
        }
    }
}

/// A document after body extraction and token cleaning, before filtering.
/// `body` is `None` when no marker was found and no fallback applied.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub id: String,
    pub court_tier: CourtTier,
    pub date: Option<NaiveDate>,
    pub body: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterOutcome {
    Keep(CleanJudgment),
    Drop {
        id: String,
        reason: DropReason,
        word_count: usize,
    },
}

pub fn apply_filters(candidate: Candidate, cfg: &FilterConfig) -> FilterOutcome {
    let Some(body) = candidate.body else {
        return FilterOutcome::Drop {
            id: candidate.id,
            reason: DropReason::NoBody,
            word_count: 0,
        };
    };
    let word_count = body.split_whitespace().count();
    let reason = if word_count < cfg.min_words {
        Some(DropReason::TooShort)
    } else if word_count > cfg.max_words {
        Some(DropReason::TooLong)
    } else {
        None
    };
    match reason {
        Some(reason) => FilterOutcome::Drop {
            id: candidate.id,
            reason,
            word_count,
        },
        None => FilterOutcome::Keep(CleanJudgment {
            id: candidate.id,
            court_tier: candidate.court_tier,
            date: candidate.date,
            body_text: body,
            word_count,
        }),
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestConfig {
    pub rules: MetadataRules,
    pub filters: FilterConfig,
}

pub fn preprocess(raw: &RawJudgment, cfg: &IngestConfig) -> FilterOutcome {
    let stripped = cfg.rules.strip_metadata(&raw.raw_text);
    let body = match extract_body(&stripped) {
        Some(body) => Some(clean_tokens(body)),
        None if cfg.filters.keep_unmarked => Some(clean_tokens(&stripped)),
        None => None,
    };
    apply_filters(
        Candidate {
            id: raw.id.clone(),
            court_tier: raw.court_tier,
            date: raw.date,
            body,
        },
        &cfg.filters,
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropRecord {
    pub id: String,
    pub reason: DropReason,
    pub word_count: usize,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutput {
    pub kept: Vec<CleanJudgment>,
    pub dropped: Vec<DropRecord>,
}

/// Run the per-document pipeline in parallel; both outputs are sorted by id.
pub fn run(raws: &[RawJudgment], cfg: &IngestConfig) -> IngestOutput {
    let outcomes: Vec<FilterOutcome> = raws.par_iter().map(|r| preprocess(r, cfg)).collect();
    let mut out = IngestOutput::default();
    for o in outcomes {
        match o {
            FilterOutcome::Keep(c) => out.kept.push(c),
            FilterOutcome::Drop { id, reason, word_count } => out.dropped.push(DropRecord { id, reason, word_count }),
        }
    }
    out.kept.sort_by(|a, b| a.id.cmp(&b.id));
    out.dropped.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{}", i % 7)).collect::<Vec<_>>().join(" ")
    }

    fn candidate(body: Option<String>) -> Candidate {
        Candidate {
            id: "c".into(),
            court_tier: CourtTier::Sci,
            date: None,
            body,
        }
    }

    #[test]
    fn bundled_rules_compile() {
        assert!(MetadataRules::default().len() >= 4);
    }

    #[test]
    fn strips_header_block() {
        let text = "CASE NO:\nCIVIL APPEAL NOS. 3088-3089 OF 2020\nBENCH:\nDipankar Datta\n<body>";
        assert_eq!(MetadataRules::default().strip_metadata(text), "<body>");
    }

    #[test]
    fn strips_labelled_fields_with_inline_values() {
        let text =
            "APPELLANTS: BHARTI AIRTEL LIMITED\nRESPONDENT: X AND OTHERS\nDATE OF JUDGMENT:\n03/01/2024\nThe appeal.";
        assert_eq!(MetadataRules::default().strip_metadata(text), "The appeal.");
    }

    #[test]
    fn no_match_is_identity() {
        let text = "The appellant contends that the order was bad in law.";
        assert_eq!(MetadataRules::default().strip_metadata(text), text);
    }

    #[test]
    fn invalid_rule_is_config_error() {
        let err = MetadataRules::from_patterns(&["ok", "(unclosed"]).unwrap_err();
        assert!(matches!(err, IngestError::InvalidRule { index: 1, .. }));
    }

    #[test]
    fn fixpoint_makes_stripping_idempotent() {
        // Deleting "ab" exposes a new "ab".
        let rules = MetadataRules::from_patterns(&["ab"]).unwrap();
        let once = rules.strip_metadata("aabb");
        assert_eq!(once, "");
        assert_eq!(rules.strip_metadata(&once), once);
    }

    #[test]
    fn body_after_marker() {
        assert_eq!(
            extract_body("HEADNOTE ... JUDGMENT: The appeal arises ..."),
            Some("The appeal arises ...")
        );
    }

    #[test]
    fn body_uses_first_marker() {
        let text = "x ORDER first part JUDGMENT second part";
        assert_eq!(extract_body(text), Some("first part JUDGMENT second part"));
    }

    #[test]
    fn body_marker_is_case_sensitive_and_word_bounded() {
        assert_eq!(extract_body("order of the court was..."), None);
        assert_eq!(extract_body("ORDERS were passed; DISORDER"), None);
        assert_eq!(extract_body("JUDGEMENT\nText"), Some("Text"));
    }

    #[test]
    fn clean_tokens_examples() {
        assert_eq!(clean_tokens("the wwww appeal"), "the appeal");
        assert_eq!(clean_tokens("Mississippi success"), "Mississippi success");
        assert_eq!(clean_tokens("a\n\tb   c"), "a b c");
        assert_eq!(clean_tokens("Rs.1000 paid"), "paid");
        assert_eq!(clean_tokens(""), "");
    }

    #[test]
    fn filter_boundaries() {
        let cfg = FilterConfig::default();
        let reason = |n: usize| match apply_filters(candidate(Some(words(n))), &cfg) {
            FilterOutcome::Keep(_) => None,
            FilterOutcome::Drop { reason, .. } => Some(reason),
        };
        assert_eq!(reason(49), Some(DropReason::TooShort));
        assert_eq!(reason(50), None);
        assert_eq!(reason(32_000), None);
        assert_eq!(reason(32_001), Some(DropReason::TooLong));
        assert!(matches!(
            apply_filters(candidate(None), &cfg),
            FilterOutcome::Drop {
                reason: DropReason::NoBody,
                ..
            }
        ));
    }

    #[test]
    fn unmarked_documents_follow_flag() {
        let raw = RawJudgment {
            id: "a".into(),
            court_tier: CourtTier::Hc,
            date: None,
            raw_text: words(60),
        };
        let mut cfg = IngestConfig::default();
        assert!(matches!(
            preprocess(&raw, &cfg),
            FilterOutcome::Drop {
                reason: DropReason::NoBody,
                ..
            }
        ));
        cfg.filters.keep_unmarked = true;
        assert!(matches!(preprocess(&raw, &cfg), FilterOutcome::Keep(_)));
    }

    #[test]
    fn tier_parsing() {
        assert_eq!("HCs".parse::<CourtTier>().unwrap(), CourtTier::Hc);
        assert_eq!(
            "Daily Orders".parse::<CourtTier>().unwrap(),
            CourtTier::DailyOrderDistrict
        );
        assert!("county".parse::<CourtTier>().is_err());
        assert_eq!(serde_json::to_string(&CourtTier::Sci).unwrap(), "\"SCI\"");
    }

    #[test]
    fn record_loading_reports_bad_lines_and_continues() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(
            &path,
            concat!(
                r#"{"id":"b","court_tier":"SCI","raw_text":"x"}"#,
                "\n",
                r#"{"id":"c","court_tier":"HC","date":"2021-06-01"}"#,
                "\n",
                "\n",
                r#"{"id":"a","court_tier":"Tribunal","date":"2020-01-01","raw_text":"y"}"#,
                "\n",
                r#"{"court_tier":"SCI","raw_text":"z"}"#,
                "\n",
            ),
        )
        .unwrap();
        let loaded = load_raw(&path, InputFormat::Records, CourtTier::Sci).unwrap();
        let ids: Vec<_> = loaded.judgments.iter().map(|j| j.id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert_eq!(loaded.errors.len(), 2);
        assert_eq!(loaded.errors[0].message, "missing field raw_text");
        assert_eq!(loaded.errors[0].line, Some(2));
        assert!(loaded.errors[0]
            .to_string()
            .ends_with("missing field raw_text at line 2"));
        assert_eq!(loaded.errors[1].line, Some(5));
    }

    #[test]
    fn empty_directory_is_empty_stream() {
        let dir = tempfile::tempdir().unwrap();
        let loaded = load_raw(dir.path(), InputFormat::PlainText, CourtTier::Sci).unwrap();
        assert!(loaded.judgments.is_empty());
        assert!(loaded.errors.is_empty());
    }

    #[test]
    fn plain_text_directory_uses_stem_as_id() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("z9.txt"), "b").unwrap();
        std::fs::write(dir.path().join("a1.txt"), "a").unwrap();
        std::fs::write(dir.path().join("notes.md"), "skip").unwrap();
        let loaded = load_raw(dir.path(), InputFormat::PlainText, CourtTier::Hc).unwrap();
        let ids: Vec<_> = loaded.judgments.iter().map(|j| j.id.as_str()).collect();
        assert_eq!(ids, ["a1", "z9"]);
        assert!(loaded.judgments.iter().all(|j| j.court_tier == CourtTier::Hc));
    }

    #[test]
    fn unreadable_path_is_an_error() {
        let err = load_raw(Path::new("/no/such/path"), InputFormat::Records, CourtTier::Sci);
        assert!(matches!(err, Err(IngestError::Io { .. })));
    }
}
