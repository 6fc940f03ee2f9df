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

//! Decision and explanation extraction from free-form generations.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::text::word_spans;

const POSITIVE: &[&str] = &["accepted", "allowed"];
const NEGATIVE: &[&str] = &["rejected", "dismissed"];
const LINE_LABELS: &[&str] = &["case decision", "prediction", "decision", "label", "answer", "output"];

/// Parsed decision. Serialized as `0`, `1` or `"NoDecision"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prediction {
    Class(u8),
    NoDecision,
}

impl Prediction {
    pub fn class(self) -> Option<u8> {
        match self {
            Prediction::Class(c) => Some(c),
            Prediction::NoDecision => None,
        }
    }
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prediction::Class(c) => write!(f, "{c}"),
            Prediction::NoDecision => f.write_str("NoDecision"),
        }
    }
}

impl Serialize for Prediction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Prediction::Class(c) => s.serialize_u8(*c),
            Prediction::NoDecision => s.serialize_str("NoDecision"),
        }
    }
}

impl<'de> Deserialize<'de> for Prediction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u8),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(Prediction::Class(n)),
            Raw::S(s) if s == "NoDecision" => Ok(Prediction::NoDecision),
            Raw::S(s) => s
                .parse::<u8>()
                .map(Prediction::Class)
                .map_err(|_| serde::de::Error::custom(format!("bad prediction `{s}`"))),
        }
    }
}

/// Which rung of the parsing ladder produced the decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseRule {
    List,
    LeadingDigit,
    Keyword,
    NoDecision,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedOutput {
    pub predicted: Prediction,
    pub explanation: Option<String>,
    pub rule: ParseRule,
}

fn strip_quotes(s: &str) -> &str {
    s.trim().trim_matches(|c| c == '"' || c == '\'').trim()
}

fn strip_explanation_label(s: &str) -> &str {
    let t = s.trim_start_matches(|c: char| c.is_whitespace() || ",;:-".contains(c));
    let lower = t.to_ascii_lowercase();
    for label in ["explanation:", "explanation -", "explanation"] {
        if lower.starts_with(label) {
            return t[label.len()..].trim();
        }
    }
    t.trim()
}

fn non_empty(s: &str) -> Option<String> {
    let s = s.trim();
    (!s.is_empty()).then(|| s.to_string())
}

/// `[d, explanation]` with `d` in {0, 1}, optionally quoted.
fn parse_list(raw: &str) -> Option<(u8, String)> {
    for (open, _) in raw.match_indices('[') {
        let inner = &raw[open + 1..];
        let t = inner.trim_start().trim_start_matches(['"', '\'']);
        let digit = match t.chars().next() {
            Some('0') => 0,
            Some('1') => 1,
            _ => continue,
        };
        let after = t[1..].trim_start_matches(['"', '\'']).trim_start();
        if let Some(rest) = after.strip_prefix(',') {
            let expl = match rest.rfind(']') {
                Some(close) => &rest[..close],
                None => rest,
            };
            return Some((digit, strip_quotes(expl).to_string()));
        }
        if after.starts_with(']') {
            return Some((digit, String::new()));
        }
    }
    None
}

/// Standalone 0/1 opening the first non-empty line, behind an optional
/// `Prediction:`-style label.
fn parse_leading(raw: &str) -> Option<(u8, &str)> {
    let body = raw.trim_start();
    let line_end = body.find('\n').unwrap_or(body.len());
    let line = &body[..line_end];
    let lower = line.to_ascii_lowercase();
    let mut start = 0;
    for label in LINE_LABELS {
        if lower.starts_with(label) {
            let rest = &line[label.len()..];
            let trimmed = rest.trim_start();
            if let Some(r) = trimmed.strip_prefix([':', '-', '=']) {
                start = line.len() - r.len();
            }
            break;
        }
    }
    let head = line[start..].trim_start();
    let tok_len = head.find(char::is_whitespace).unwrap_or(head.len());
    let token = head[..tok_len]
        .trim_start_matches('(')
        .trim_end_matches(|c: char| ".,;:)!".contains(c));
    let digit = match token {
        "0" => 0,
        "1" => 1,
        _ => return None,
    };
    let rest = if head[tok_len..].trim().is_empty() {
        &body[line_end..]
    } else {
        &head[tok_len..]
    };
    Some((digit, rest))
}

/// Byte index just past the first sentence.
fn first_sentence_end(text: &str) -> usize {
    let bytes = text.as_bytes();
    for (i, c) in text.char_indices() {
        if c == '\n' && !text[..i].trim().is_empty() {
            return i;
        }
        if matches!(c, '.' | '!' | '?') {
            let next = bytes.get(i + 1).copied();
            if next.is_none_or(|b| b.is_ascii_whitespace()) && !text[..i].trim().is_empty() {
                return i + 1;
            }
        }
    }
    text.len()
}

fn parse_keyword(raw: &str) -> Option<(u8, usize)> {
    let body_start = raw.len() - raw.trim_start().len();
    let end = body_start + first_sentence_end(&raw[body_start..]);
    let sentence = &raw[body_start..end];
    let words = word_spans(sentence);
    let pos = words.iter().any(|w| POSITIVE.contains(&w.text.as_str()));
    let neg = words.iter().any(|w| NEGATIVE.contains(&w.text.as_str()));
    match (pos, neg) {
        (true, false) => Some((1, end)),
        (false, true) => Some((0, end)),
        _ => None,
    }
}

/// Ladder: bracketed list, then a leading 0/1, then an outcome keyword in
/// the first sentence, else no decision. Never fails.
pub fn parse_prediction(raw_output: &str, expects_explanation: bool) -> ParsedOutput {
    let explain = |s: &str| {
        if expects_explanation {
            non_empty(strip_explanation_label(s))
        } else {
            None
        }
    };
    if let Some((d, expl)) = parse_list(raw_output) {
        return ParsedOutput {
            predicted: Prediction::Class(d),
            explanation: explain(&expl),
            rule: ParseRule::List,
        };
    }
    if let Some((d, rest)) = parse_leading(raw_output) {
        return ParsedOutput {
            predicted: Prediction::Class(d),
            explanation: explain(rest),
            rule: ParseRule::LeadingDigit,
        };
    }
    if let Some((d, end)) = parse_keyword(raw_output) {
        let after = &raw_output[end..];
        let expl = if after.trim().is_empty() { raw_output } else { after };
        return ParsedOutput {
            predicted: Prediction::Class(d),
            explanation: explain(expl),
            rule: ParseRule::Keyword,
        };
    }
    ParsedOutput {
        predicted: Prediction::NoDecision,
        explanation: None,
        rule: ParseRule::NoDecision,
    }
}
