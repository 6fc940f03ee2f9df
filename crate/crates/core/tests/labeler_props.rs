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

use ljp_core::ingest::{CleanJudgment, CourtTier};
use ljp_core::labeler::{label_case, DecisionLabel, LabelOutcome, LabelerConfig, Lexicons};
use proptest::prelude::*;

const FILLER: &[&str] = &[
    "the", "court", "held", "that", "evidence", "was", "recorded", "by", "witness", "order",
];
const POSITIVE: &[&str] = &["allowed", "granted", "accepted", "upheld", "approved"];
const NEGATIVE: &[&str] = &["dismissed", "rejected", "denied", "disapproved"];

fn label_of(body: &str) -> Option<DecisionLabel> {
    let case = CleanJudgment {
        id: "x".into(),
        court_tier: CourtTier::Sci,
        date: None,
        word_count: body.split_whitespace().count(),
        body_text: body.to_string(),
    };
    match label_case(case, &Lexicons::default(), &LabelerConfig::default()) {
        LabelOutcome::Labeled(l) => Some(l.label),
        LabelOutcome::Unlabelable { .. } => None,
    }
}

fn filler(n: usize, salt: usize) -> String {
    (0..n)
        .map(|i| FILLER[(i * 7 + salt) % FILLER.len()])
        .collect::<Vec<_>>()
        .join(" ")
}

fn outcome_word() -> impl Strategy<Value = (&'static str, DecisionLabel)> {
    prop_oneof![
        proptest::sample::select(POSITIVE).prop_map(|w| (w, DecisionLabel::Accepted)),
        proptest::sample::select(NEGATIVE).prop_map(|w| (w, DecisionLabel::Rejected)),
    ]
}

#[test]
fn flip_is_an_involution() {
    for l in [DecisionLabel::Rejected, DecisionLabel::Accepted, DecisionLabel::Partial] {
        assert_eq!(l.flipped().flipped(), l);
    }
}

proptest! {
    #[test]
    fn negation_flips_the_verdict(
        (word, label) in outcome_word(),
        term in proptest::sample::select(&["appeal", "petition", "case"][..]),
        lead in 0usize..40,
    ) {
        let plain = format!("{} The {term} is {word}.", filler(lead, 1));
        let negated = format!("{} The {term} is not {word}.", filler(lead, 1));
        prop_assert_eq!(label_of(&plain), Some(label));
        prop_assert_eq!(label_of(&negated), Some(label.flipped()));
    }

    #[test]
    fn text_before_the_tail_window_is_ignored(
        (word, label) in outcome_word(),
        (noise_word, _) in outcome_word(),
        prefix_len in 1usize..200,
    ) {
        let tail = format!("{} The appeal is {word}.", filler(760, 3));
        let prefix = format!("The petition is {noise_word} and the appeal is partly {noise_word}. {}", filler(prefix_len, 5));
        prop_assert_eq!(label_of(&tail), Some(label));
        prop_assert_eq!(label_of(&format!("{prefix} {tail}")), Some(label));
    }

    #[test]
    fn labels_ignore_letter_case(
        (word, _) in outcome_word(),
        mask in proptest::collection::vec(any::<bool>(), 64),
        partial in any::<bool>(),
    ) {
        let marker = if partial { "partly " } else { "" };
        let body = format!("{} The appeal is {marker}{word} accordingly.", filler(30, 2));
        let mixed: String = body
            .chars()
            .enumerate()
            .map(|(i, c)| if mask[i % mask.len()] { c.to_ascii_uppercase() } else { c.to_ascii_lowercase() })
            .collect();
        prop_assert_eq!(label_of(&mixed), label_of(&body));
    }
}

#[test]
fn no_keyword_means_unlabelable() {
    assert_eq!(label_of(&filler(300, 0)), None);
}
