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

//! Deterministic synthetic judgment corpus for end-to-end runs and tests.
//!
//! Every generated document carries a metadata header, a body marker and a
//! closing decision sentence, so it survives preprocessing and labeling.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::{CourtTier, RawJudgment};
use crate::labeler::DecisionLabel;

const FILLER: &[&str] = &[
    "The learned counsel for the respondent submitted that the notification was issued under section 12 of the Act.",
    "It was contended that the tribunal had misread the evidence placed on record by the parties.",
    "The High Court examined the documents and recorded its findings on each of the issues framed.",
    "We have heard the learned counsel for the parties at length and perused the material on record.",
    "The question that arises for consideration is whether the limitation period began on the date of the award.",
    "The trial court framed five issues and recorded the evidence of three witnesses on behalf of the plaintiff.",
    "Reliance was placed on the decision of this Court in the matter concerning the acquisition of land.",
    "The witness stated in cross examination that he was present at the spot on the night of the incident.",
    "The authority issued a show cause notice and thereafter passed the impugned order without hearing the party.",
    "Learned senior counsel drew our attention to the relevant clauses of the agreement executed between the parties.",
    "The statutory scheme requires the assessing officer to record reasons before reopening the assessment.",
    "There is a marked difference between a mere irregularity and an illegality that goes to the root of the matter.",
    "The employer contended that the workman had abandoned his service and was therefore at fault.",
    "The medical evidence shows that the injuries were caused by a blunt object and were grievous in nature.",
    "The lease deed was registered in the year 1994 and the rent was revised twice thereafter.",
    "The first appellate court reversed the findings of fact on the question of possession.",
    "Section 34 of the Act provides a limited scope of interference with an arbitral award.",
    "The prosecution examined eleven witnesses and exhibited the seizure memo and the forensic report.",
    "The respondent authority failed to consider the representation submitted by the employees within time.",
    "The principles of natural justice require that a person be heard before an adverse decision is taken.",
    "The deceased was last seen in the company of the accused on the evening before the body was recovered.",
    "The valuation report relied upon by the collector was prepared without inspecting the property.",
    "The tenant deposited the arrears of rent in court within the time fixed by the statute.",
    "The bank contended that the borrower had committed default in repayment of the loan instalments.",
    "The recruitment rules prescribe the minimum qualification and the mode of selection for the post.",
    "The controversy relates to the interpretation of the exemption notification relied on by the assessee.",
    "The documents produced at the stage of the second hearing were rightly excluded from consideration.",
    "The finding recorded by the inquiry officer is based on the statements of the complainant alone.",
    "The land was notified for a public purpose and the compensation was determined by the reference court.",
    "The contract required the supplier to furnish a performance guarantee before the work commenced.",
];

const ACCEPTED: &[&str] = &[
    "In the result, the appeal is allowed and the impugned order is set aside.",
    "Accordingly, the petition is granted and the respondents are directed to reconsider the claim.",
    "For the reasons recorded above, the appeal is accepted and the matter is remitted for fresh consideration.",
];

const REJECTED: &[&str] = &[
    "In the result, the appeal is dismissed.",
    "We find that the petition is devoid of merit and it is accordingly rejected.",
    "Having regard to the findings recorded above, the appeal is not allowed.",
];

const PARTIAL: &[&str] = &[
    "The appeal is partly allowed to the extent indicated above.",
    "Accordingly, the petition is partially granted in terms of the directions issued.",
    "The appeal filed by the first accused is allowed. Insofar as the second accused is concerned, his appeal stands dismissed.",
];

const NOISE: &[&str] = &["__________", "..........", "xxxxx", "*****", "-----"];
const NAMES: &[&str] = &[
    "Ram Prasad",
    "Sunita Devi",
    "State of Gujarat",
    "Union of India",
    "Mohd. Yusuf",
    "K. Ramaswamy",
    "Lakshmi Textiles Ltd.",
    "Municipal Corporation",
    "Harbans Singh",
    "Meena Kumari",
];
const JUDGES: &[&str] = &[
    "A. K. Mehta",
    "R. Banerjee",
    "S. Iyer",
    "P. Kulkarni",
    "J. Thomas",
    "N. Reddy",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticCase {
    pub raw: RawJudgment,
    pub label: DecisionLabel,
    /// Reference explanation: one reasoning sentence plus the decision.
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub case_id: String,
    pub explanation: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub n_docs: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig { n_docs: 1000, seed: 13 }
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs[rng.random_range(0..xs.len())]
}

fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

fn target_words(rng: &mut ChaCha8Rng) -> usize {
    match rng.random_range(0..100) {
        0..70 => rng.random_range(60..700),
        70..95 => rng.random_range(700..1200),
        _ => rng.random_range(1200..1600),
    }
}

fn random_date(rng: &mut ChaCha8Rng) -> Option<NaiveDate> {
    if rng.random_range(0..100) < 4 {
        return None;
    }
    let base = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
    // 2010-01-01 .. 2024-04-30 spans 5233 days.
    base.checked_add_days(chrono::Days::new(rng.random_range(0..5234)))
}

pub fn generate(cfg: &SyntheticConfig) -> Vec<SyntheticCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.n_docs).map(|i| generate_one(&mut rng, i)).collect()
}

fn generate_one(rng: &mut ChaCha8Rng, i: usize) -> SyntheticCase {
    let court_tier = match rng.random_range(0..100) {
        0..25 => CourtTier::Sci,
        25..60 => CourtTier::Hc,
        60..80 => CourtTier::Tribunal,
        _ => CourtTier::DailyOrderDistrict,
    };
    let label = match rng.random_range(0..100) {
        0..45 => DecisionLabel::Accepted,
        45..85 => DecisionLabel::Rejected,
        _ => DecisionLabel::Partial,
    };
    let decision = match label {
        DecisionLabel::Accepted => pick(rng, ACCEPTED),
        DecisionLabel::Rejected => pick(rng, REJECTED),
        DecisionLabel::Partial => pick(rng, PARTIAL),
    };
    let date = random_date(rng);
    let judge = pick(rng, JUDGES);
    let target = target_words(rng);
    let noisy = rng.random_range(0..10) == 0;

    let mut body = format!("{judge}, J.\n");
    let mut words = 2 + word_count(decision);
    let mut last_reason = FILLER[0];
    let mut sentences_in_para = 0;
    while words < target {
        let s = pick(rng, FILLER);
        body.push_str(s);
        last_reason = s;
        words += word_count(s);
        sentences_in_para += 1;
        if noisy && rng.random_range(0..8) == 0 {
            body.push(' ');
            body.push_str(pick(rng, NOISE));
        }
        if sentences_in_para >= 6 && rng.random_range(0..3) == 0 {
            body.push_str("\n\n");
            sentences_in_para = 0;
        } else {
            body.push(' ');
        }
    }
    body.push_str(decision);
    body.push('\n');

    let date_line = date
        .map(|d| d.format("%d/%m/%Y").to_string())
        .unwrap_or_else(|| "unknown".into());
    let year = date
        .map(|d| d.format("%Y").to_string())
        .unwrap_or_else(|| "2015".into());
    let raw_text = format!(
        "CASE NO.: Civil Appeal No. {} of {year}\nAPPELLANT: {}\nRESPONDENT: {}\nDATE OF JUDGMENT: {date_line}\nBENCH: {judge}\n\nJUDGMENT\n\n{body}",
        100 + i,
        pick(rng, NAMES),
        pick(rng, NAMES),
    );
    SyntheticCase {
        raw: RawJudgment {
            id: format!("syn-{:04}", i + 1),
            court_tier,
            date,
            raw_text,
        },
        label,
        reference: format!("{last_reason} {decision}"),
    }
}

/// `corpus.jsonl` lines in the raw-record input format.
pub fn corpus_jsonl(cases: &[SyntheticCase]) -> String {
    let mut s = String::new();
    for c in cases {
        let v = serde_json::json!({
            "id": c.raw.id,
            "court_tier": c.raw.court_tier.as_str(),
            "date": c.raw.date.map(|d| d.to_string()),
            "raw_text": c.raw.raw_text,
        });
        s.push_str(&v.to_string());
        s.push('\n');
    }
    s
}

pub fn references_jsonl(cases: &[SyntheticCase]) -> String {
    let mut s = String::new();
    for c in cases {
        let r = ReferenceRecord {
            case_id: c.raw.id.clone(),
            explanation: c.reference.clone(),
        };
        s.push_str(&serde_json::to_string(&r).expect("reference serializes"));
        s.push('\n');
    }
    s
}
