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

//! Weak decision labels from the closing part of a judgment.
//!
//! Only the last `window_words` whitespace words are inspected. Around every
//! key term (`appeal`, `petition`, `case`) a context of `context_radius`
//! words on each side is scanned for outcome keywords. The keyword nearest
//! the key term decides the context; its polarity is flipped when a negator
//! occurs within `negation_radius` words before it, and a partial marker
//! anywhere in the context turns the verdict into partial acceptance.
//! Double negation is not special-cased: any number of negators flips once.
//!
//! Key terms and outcome keywords match on a light inflection base
//! (`allowed`, `allows`, `allow` all match `allowed`); negators and partial
//! markers match exactly. Matching is case-insensitive.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ingest::CleanJudgment;
use crate::text::{whitespace_spans, word_spans, Word};

pub const DEFAULT_WINDOW_WORDS: usize = 750;
pub const DEFAULT_CONTEXT_RADIUS: usize = 10;
pub const DEFAULT_NEGATION_RADIUS: usize = 3;

pub const DEFAULT_POSITIVE: &[&str] = &["approved", "allowed", "granted", "accepted", "upheld"];
pub const DEFAULT_NEGATIVE: &[&str] = &["rejected", "disapproved", "dismissed", "denied"];
pub const DEFAULT_PARTIAL: &[&str] = &["partly", "partially"];
pub const DEFAULT_NEGATORS: &[&str] = &["no", "not"];
pub const DEFAULT_KEY_TERMS: &[&str] = &["appeal", "petition", "case"];

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid lexicon file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("`{word}` appears in both {first} and {second}")]
    Overlap {
        word: String,
        first: &'static str,
        second: &'static str,
    },
    #[error("lexicon words must be a single alphanumeric word, got `{0}`")]
    BadWord(String),
}

/// Case decision. Serialized as the integers 0, 1, 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DecisionLabel {
    Rejected = 0,
    Accepted = 1,
    Partial = 2,
}

impl DecisionLabel {
    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn from_value(v: u8) -> Option<Self> {
        match v {
            0 => Some(DecisionLabel::Rejected),
            1 => Some(DecisionLabel::Accepted),
            2 => Some(DecisionLabel::Partial),
            _ => None,
        }
    }

    /// Accepted <-> Rejected; Partial is its own complement.
    pub fn flipped(self) -> Self {
        match self {
            DecisionLabel::Rejected => DecisionLabel::Accepted,
            DecisionLabel::Accepted => DecisionLabel::Rejected,
            DecisionLabel::Partial => DecisionLabel::Partial,
        }
    }
}

impl Serialize for DecisionLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.value())
    }
}

impl<'de> Deserialize<'de> for DecisionLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = u8::deserialize(d)?;
        DecisionLabel::from_value(v).ok_or_else(|| serde::de::Error::custom(format!("invalid label {v}")))
    }
}

impl fmt::Display for DecisionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Single,
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

/// Reduce a word to the base used for key-term and outcome matching.
/// Input is expected lowercased.
pub fn inflection_base(word: &str) -> &str {
    let n = word.len();
    let mut base = if n > 5 && word.ends_with("ing") {
        &word[..n - 3]
    } else if n > 4 && (word.ends_with("ed") || word.ends_with("es")) {
        &word[..n - 2]
    } else if n > 3 && word.ends_with('s') && !word.ends_with("ss") {
        &word[..n - 1]
    } else {
        word
    };
    if base.len() > 3 && base.ends_with('e') {
        base = &base[..base.len() - 1];
    }
    base
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconFile {
    #[serde(default)]
    #[allow(dead_code)]
    version: Option<u32>,
    #[serde(default)]
    positive: Vec<String>,
    #[serde(default)]
    negative: Vec<String>,
    #[serde(default)]
    partial_markers: Vec<String>,
    #[serde(default)]
    negators: Vec<String>,
    #[serde(default)]
    key_terms: Vec<String>,
}

/// Keyword sets. Built-in words are always present; a lexicon file can only
/// add to them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicons {
    positive: BTreeSet<String>,
    negative: BTreeSet<String>,
    partial_markers: BTreeSet<String>,
    negators: BTreeSet<String>,
    key_terms: BTreeSet<String>,
    positive_bases: BTreeSet<String>,
    negative_bases: BTreeSet<String>,
    key_bases: BTreeSet<String>,
}

fn to_set(defaults: &[&str], extra: &[String]) -> Result<BTreeSet<String>, LexiconError> {
    let mut set = BTreeSet::new();
    for w in defaults.iter().copied().chain(extra.iter().map(String::as_str)) {
        let lw = w.trim().to_lowercase();
        if lw.is_empty() || !lw.chars().all(char::is_alphanumeric) {
            return Err(LexiconError::BadWord(w.to_string()));
        }
        set.insert(lw);
    }
    Ok(set)
}

fn bases(set: &BTreeSet<String>) -> BTreeSet<String> {
    set.iter().map(|w| inflection_base(w).to_string()).collect()
}

impl Lexicons {
    fn build(file: &LexiconFile) -> Result<Self, LexiconError> {
        let positive = to_set(DEFAULT_POSITIVE, &file.positive)?;
        let negative = to_set(DEFAULT_NEGATIVE, &file.negative)?;
        let partial_markers = to_set(DEFAULT_PARTIAL, &file.partial_markers)?;
        let negators = to_set(DEFAULT_NEGATORS, &file.negators)?;
        let key_terms = to_set(DEFAULT_KEY_TERMS, &file.key_terms)?;
        let lex = Lexicons {
            positive_bases: bases(&positive),
            negative_bases: bases(&negative),
            key_bases: bases(&key_terms),
            positive,
            negative,
            partial_markers,
            negators,
            key_terms,
        };
        lex.check_disjoint()?;
        Ok(lex)
    }

    /// Extend the defaults with a TOML lexicon file.
    pub fn from_toml(source: &str) -> Result<Self, LexiconError> {
        let file: LexiconFile = toml::from_str(source)?;
        Self::build(&file)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let source = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&source)
    }

    fn check_disjoint(&self) -> Result<(), LexiconError> {
        // Matched sets are compared on their bases, exact sets on surface words.
        let named: [(&'static str, BTreeSet<String>); 5] = [
            ("positive", self.positive_bases.clone()),
            ("negative", self.negative_bases.clone()),
            ("key_terms", self.key_bases.clone()),
            ("partial_markers", self.partial_markers.clone()),
            ("negators", self.negators.clone()),
        ];
        for i in 0..named.len() {
            for j in i + 1..named.len() {
                if let Some(w) = named[i].1.intersection(&named[j].1).next() {
                    return Err(LexiconError::Overlap {
                        word: w.clone(),
                        first: named[i].0,
                        second: named[j].0,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn positive(&self) -> &BTreeSet<String> {
        &self.positive
    }
    pub fn negative(&self) -> &BTreeSet<String> {
        &self.negative
    }
    pub fn partial_markers(&self) -> &BTreeSet<String> {
        &self.partial_markers
    }
    pub fn negators(&self) -> &BTreeSet<String> {
        &self.negators
    }
    pub fn key_terms(&self) -> &BTreeSet<String> {
        &self.key_terms
    }

    pub fn is_key_term(&self, word: &str) -> bool {
        self.key_bases.contains(inflection_base(word))
    }

    pub fn outcome_polarity(&self, word: &str) -> Option<Polarity> {
        let base = inflection_base(word);
        if self.positive_bases.contains(base) {
            Some(Polarity::Positive)
        } else if self.negative_bases.contains(base) {
            Some(Polarity::Negative)
        } else {
            None
        }
    }

    pub fn is_negator(&self, word: &str) -> bool {
        self.negators.contains(word)
    }

    pub fn is_partial_marker(&self, word: &str) -> bool {
        self.partial_markers.contains(word)
    }
}

impl Default for Lexicons {
    fn default() -> Self {
        Self::build(&LexiconFile::default()).expect("default lexicons are disjoint")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelerConfig {
    pub window_words: usize,
    pub context_radius: usize,
    pub negation_radius: usize,
}

impl Default for LabelerConfig {
    fn default() -> Self {
        LabelerConfig {
            window_words: DEFAULT_WINDOW_WORDS,
            context_radius: DEFAULT_CONTEXT_RADIUS,
            negation_radius: DEFAULT_NEGATION_RADIUS,
        }
    }
}

/// The closing words of a body and the byte offset where they start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TailWindow<'a> {
    pub text: &'a str,
    pub offset: usize,
}

/// Last `n_words` whitespace words of `body_text`, spacing preserved.
/// `text` is always `&body_text[offset..]`.
pub fn tail_window(body_text: &str, n_words: usize) -> TailWindow<'_> {
    let spans = whitespace_spans(body_text);
    if spans.len() <= n_words {
        return TailWindow {
            text: body_text,
            offset: 0,
        };
    }
    if n_words == 0 {
        return TailWindow {
            text: "",
            offset: body_text.len(),
        };
    }
    let offset = spans[spans.len() - n_words].0;
    TailWindow {
        text: &body_text[offset..],
        offset,
    }
}

/// Words around one key-term occurrence. Spans are byte offsets into the
/// text that was searched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    pub key_term: String,
    /// Position of the key term within `words`.
    pub key_position: usize,
    pub words: Vec<Word>,
    pub span: (usize, usize),
}

pub fn find_contexts(window: &str, lexicons: &Lexicons, radius_words: usize) -> Vec<Context> {
    let radius = radius_words.max(1);
    let words = word_spans(window);
    let mut out = Vec::new();
    for (i, w) in words.iter().enumerate() {
        if !lexicons.is_key_term(&w.text) {
            continue;
        }
        let lo = i.saturating_sub(radius);
        let hi = (i + radius).min(words.len() - 1);
        let slice = words[lo..=hi].to_vec();
        out.push(Context {
            key_term: w.text.clone(),
            key_position: i - lo,
            span: (words[lo].start, words[hi].end),
            words: slice,
        });
    }
    out
}

/// The keyword that decided one context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub key_term: String,
    pub keyword: String,
    /// Byte span of the keyword (in the body once attached to a case).
    pub span: (usize, usize),
    pub polarity: Polarity,
    pub negated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial_marker: Option<String>,
}

impl Evidence {
    pub fn verdict(&self) -> DecisionLabel {
        if self.partial_marker.is_some() {
            return DecisionLabel::Partial;
        }
        let base = match self.polarity {
            Polarity::Positive => DecisionLabel::Accepted,
            Polarity::Negative => DecisionLabel::Rejected,
        };
        if self.negated {
            base.flipped()
        } else {
            base
        }
    }
}

/// Decide one context; `None` when it holds no outcome keyword.
pub fn classify_context(ctx: &Context, lexicons: &Lexicons, negation_radius: usize) -> Option<Evidence> {
    let mut best: Option<(usize, usize, Polarity)> = None;
    for (pos, w) in ctx.words.iter().enumerate() {
        let Some(polarity) = lexicons.outcome_polarity(&w.text) else {
            continue;
        };
        let dist = pos.abs_diff(ctx.key_position);
        // `<=` so that on equal distance the later keyword wins.
        if best.is_none_or(|(d, _, _)| dist <= d) {
            best = Some((dist, pos, polarity));
        }
    }
    let (_, pos, polarity) = best?;
    let lo = pos.saturating_sub(negation_radius);
    let negated = ctx.words[lo..pos].iter().any(|w| lexicons.is_negator(&w.text));
    let partial_marker = ctx
        .words
        .iter()
        .find(|w| lexicons.is_partial_marker(&w.text))
        .map(|w| w.text.clone());
    let kw = &ctx.words[pos];
    Some(Evidence {
        key_term: ctx.key_term.clone(),
        keyword: kw.text.clone(),
        span: (kw.start, kw.end),
        polarity,
        negated,
        partial_marker,
    })
}

/// Combine per-context verdicts into a case label.
pub fn combine_verdicts<I: IntoIterator<Item = DecisionLabel>>(verdicts: I) -> Option<(DecisionLabel, LabelKind)> {
    let mut accepted = false;
    let mut rejected = false;
    let mut partial = false;
    let mut any = false;
    for v in verdicts {
        any = true;
        match v {
            DecisionLabel::Accepted => accepted = true,
            DecisionLabel::Rejected => rejected = true,
            DecisionLabel::Partial => partial = true,
        }
    }
    if !any {
        None
    } else if partial || (accepted && rejected) {
        Some((DecisionLabel::Partial, LabelKind::Multi))
    } else if accepted {
        Some((DecisionLabel::Accepted, LabelKind::Single))
    } else {
        Some((DecisionLabel::Rejected, LabelKind::Single))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledCase {
    #[serde(flatten)]
    pub case: CleanJudgment,
    pub label: DecisionLabel,
    pub label_kind: LabelKind,
    pub evidence: Vec<Evidence>,
}

impl LabeledCase {
    pub fn id(&self) -> &str {
        &self.case.id
    }

    /// Re-derive the label from the stored evidence.
    pub fn audit(&self) -> bool {
        combine_verdicts(self.evidence.iter().map(Evidence::verdict)) == Some((self.label, self.label_kind))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelOutcome {
    Labeled(LabeledCase),
    Unlabelable { id: String },
}

pub fn label_case(case: CleanJudgment, lexicons: &Lexicons, cfg: &LabelerConfig) -> LabelOutcome {
    let window = tail_window(&case.body_text, cfg.window_words);
    let evidence: Vec<Evidence> = find_contexts(window.text, lexicons, cfg.context_radius)
        .iter()
        .filter_map(|ctx| classify_context(ctx, lexicons, cfg.negation_radius))
        .map(|mut e| {
            e.span = (e.span.0 + window.offset, e.span.1 + window.offset);
            e
        })
        .collect();
    match combine_verdicts(evidence.iter().map(Evidence::verdict)) {
        Some((label, label_kind)) => LabelOutcome::Labeled(LabeledCase {
            case,
            label,
            label_kind,
            evidence,
        }),
        None => LabelOutcome::Unlabelable { id: case.id },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Binary,
    Ternary,
}

impl FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "binary" => Ok(Task::Binary),
            "ternary" => Ok(Task::Ternary),
            o => Err(format!("unknown task `{o}` (binary|ternary)")),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Binary => "binary",
            Task::Ternary => "ternary",
        })
    }
}

impl Task {
    pub fn num_classes(self) -> usize {
        match self {
            Task::Binary => 2,
            Task::Ternary => 3,
        }
    }
}

/// Which binary dataset variant: `single` drops partial cases, `multi`
/// counts them as accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryVariant {
    Single,
    Multi,
}

impl FromStr for BinaryVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(BinaryVariant::Single),
            "multi" => Ok(BinaryVariant::Multi),
            o => Err(format!("unknown variant `{o}` (single|multi)")),
        }
    }
}

impl fmt::Display for BinaryVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinaryVariant::Single => "single",
            BinaryVariant::Multi => "multi",
        })
    }
}

/// Class index of a label under `task`; `None` means the case is excluded.
pub fn to_task_label(label: DecisionLabel, task: Task, variant: BinaryVariant) -> Option<u8> {
    match (task, label) {
        (Task::Ternary, l) => Some(l.value()),
        (Task::Binary, DecisionLabel::Partial) => match variant {
            BinaryVariant::Single => None,
            BinaryVariant::Multi => Some(DecisionLabel::Accepted.value()),
        },
        (Task::Binary, l) => Some(l.value()),
    }
}
