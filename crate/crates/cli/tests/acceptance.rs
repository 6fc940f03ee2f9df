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

//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{Days, NaiveDate};
use clap::Parser;
use ljp_cli::{run, Cli};
use ljp_core::annotate::{AnnotationStore, ExportBundle, NextTask};
use ljp_core::chunker::{chunk_spans, ChunkConfig};
use ljp_core::datasets::{apportion, build_split, make_split, DateRange, SplitConfig};
use ljp_core::ingest::{clean_tokens, preprocess, CleanJudgment, CourtTier, FilterOutcome, IngestConfig, RawJudgment};
use ljp_core::labeler::{label_case, DecisionLabel, LabelKind, LabelOutcome, LabeledCase, LabelerConfig, Lexicons};
use ljp_core::metrics::{
    bleu, lexical_tokens, likert_aggregate, macro_report, rouge_l, rouge_n, BleuSmoothing, ConfusionMatrix, LikertScore,
};
use ljp_core::prompts::{
    derive_seed, parse_prediction, sample_instruction, InstructionPools, Prediction, PromptContext, TemplateKind,
    POOL_SIZE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($msg)+)),
        }
    };
}

fn labeler_golden() -> Outcome {
    let lex = Lexicons::default();
    let cfg = LabelerConfig::default();
    let cases = [
        ("The appeal is granted.", DecisionLabel::Accepted),
        (
            "The appeal has no proper evidence and hence we reject it.",
            DecisionLabel::Rejected,
        ),
        ("No appeal is allowed.", DecisionLabel::Rejected),
        ("The appeal is partly allowed.", DecisionLabel::Partial),
    ];
    for (text, want) in cases {
        let case = CleanJudgment {
            id: "golden".into(),
            court_tier: CourtTier::Sci,
            date: None,
            body_text: text.into(),
            word_count: text.split_whitespace().count(),
        };
        match label_case(case, &lex, &cfg) {
            LabelOutcome::Labeled(l) => ensure!(l.label == want, "`{text}` labeled {:?}", l.label),
            LabelOutcome::Unlabelable { .. } => return Err(format!("`{text}` was unlabelable")),
        }
    }
    Ok(())
}

fn words(n: usize) -> String {
    const SYL: [&str; 8] = ["ka", "lo", "mi", "nu", "pe", "ri", "so", "tu"];
    (0..n)
        .map(|i| format!("{}{}", SYL[i % 8], SYL[i / 8 % 8]))
        .collect::<Vec<_>>()
        .join(" ")
}

fn keeps_run(token: &str) -> bool {
    let c: Vec<char> = token.chars().collect();
    !c.windows(3).any(|w| w[0] == w[1] && w[1] == w[2])
}

fn ingest_filters() -> Outcome {
    let cfg = IngestConfig::default();
    for (n, keep) in [(49, false), (50, true), (32_000, true), (32_001, false)] {
        let raw = RawJudgment {
            id: format!("len-{n}"),
            court_tier: CourtTier::Sci,
            date: None,
            raw_text: format!("JUDGMENT\n{}", words(n)),
        };
        let kept = matches!(preprocess(&raw, &cfg), FilterOutcome::Keep(_));
        ensure!(kept == keep, "{n} words: kept={kept}");
    }
    let alphabet = ['a', 'b', '.', '-', 'é'];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tokens: Vec<String> = (0..10_000)
        .map(|_| {
            (0..rng.random_range(1..=6))
                .map(|_| alphabet[rng.random_range(0..alphabet.len())])
                .collect()
        })
        .collect();
    let expected: Vec<&str> = tokens.iter().map(String::as_str).filter(|t| keeps_run(t)).collect();
    let cleaned = clean_tokens(&tokens.join(" "));
    let got: Vec<&str> = cleaned.split(' ').filter(|t| !t.is_empty()).collect();
    let disagreements = expected.len().abs_diff(got.len()) + expected.iter().zip(&got).filter(|(a, b)| a != b).count();
    ensure!(disagreements == 0, "{disagreements} disagreements on the fuzz corpus");
    Ok(())
}

fn chunker() -> Outcome {
    let cfg = ChunkConfig::default();
    for n in 1..=5000usize {
        let spans = chunk_spans(n, &cfg).map_err(|e| e.to_string())?;
        let count = if n <= 512 { 1 } else { (n - 512).div_ceil(412) + 1 };
        ensure!(spans.len() == count, "n={n}: {} chunks, expected {count}", spans.len());
        for (i, s) in spans.iter().enumerate() {
            ensure!(
                s.start == i * 412 && s.end == (i * 412 + 512).min(n),
                "n={n}: chunk {i} is {s:?}"
            );
        }
        ensure!(spans.last().unwrap().end == n, "n={n}: tail not covered");
        for w in spans.windows(2) {
            ensure!(w[0].end - w[1].start == 100, "n={n}: overlap {}", w[0].end - w[1].start);
            ensure!(w[1].end > w[0].end, "n={n}: dead chunk");
        }
    }
    let got: Vec<(usize, usize)> = chunk_spans(1024, &cfg)
        .unwrap()
        .iter()
        .map(|s| (s.start, s.end))
        .collect();
    ensure!(got == [(0, 512), (412, 924), (824, 1024)], "N=1024 gave {got:?}");
    Ok(())
}

fn labeled(i: usize, date: Option<NaiveDate>) -> LabeledCase {
    LabeledCase {
        case: CleanJudgment {
            id: format!("c{i:05}"),
            court_tier: CourtTier::Sci,
            date,
            body_text: String::new(),
            word_count: 100,
        },
        label: if i.is_multiple_of(2) {
            DecisionLabel::Accepted
        } else {
            DecisionLabel::Rejected
        },
        label_kind: LabelKind::Single,
        evidence: vec![],
    }
}

fn splits() -> Outcome {
    for n in 10..=10_000usize {
        let sizes = apportion(n, [70, 10, 20]);
        let ideal = [n as f64 * 0.7, n as f64 * 0.1, n as f64 * 0.2];
        ensure!(
            sizes.iter().zip(ideal).all(|(s, t)| (*s as f64 - t).abs() <= 1.0),
            "n={n}: {sizes:?}"
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pool: Vec<LabeledCase> = (0..10_000).map(|i| labeled(i, None)).collect();
    for _ in 0..40 {
        let n = rng.random_range(10..=10_000);
        let refs: Vec<&LabeledCase> = pool[..n].iter().collect();
        let a = make_split(&refs, &SplitConfig::default()).map_err(|e| e.to_string())?;
        let b = make_split(&refs, &SplitConfig::default()).map_err(|e| e.to_string())?;
        ensure!(a == b, "n={n}: two runs differ");
        let ids: HashSet<&String> = a.train.iter().chain(&a.val).chain(&a.test).collect();
        ensure!(ids.len() == n, "n={n}: not a partition");
        ensure!(a.sizes() == apportion(n, [70, 10, 20]), "n={n}: sizes {:?}", a.sizes());
    }
    let start = NaiveDate::from_ymd_opt(2015, 6, 1).unwrap();
    let dated: Vec<LabeledCase> = (0..4000)
        .map(|i| labeled(i, start.checked_add_days(Days::new(i as u64))))
        .collect();
    let cfg = SplitConfig {
        temporal_test: Some(DateRange::temporal_default()),
        ..SplitConfig::default()
    };
    let (_, temporal) = build_split(&dated, &cfg).map_err(|e| e.to_string())?;
    let lo = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let hi = NaiveDate::from_ymd_opt(2024, 4, 30).unwrap();
    let want: Vec<String> = dated
        .iter()
        .filter(|c| c.case.date.is_some_and(|d| d >= lo && d <= hi))
        .map(|c| c.case.id.clone())
        .collect();
    let got = temporal.map(|t| t.ids).unwrap_or_default();
    ensure!(
        got == want,
        "temporal subset has {} ids, expected {}",
        got.len(),
        want.len()
    );
    Ok(())
}

fn classification() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    while checked < 1000 {
        let k = rng.random_range(2..=3);
        let rows: Vec<Vec<u64>> = (0..k)
            .map(|_| (0..k).map(|_| rng.random_range(0..30)).collect())
            .collect();
        let Ok(report) = macro_report(&ConfusionMatrix::from_rows(&rows).unwrap()) else {
            continue;
        };
        let mut pairs = Vec::new();
        for (g, row) in rows.iter().enumerate() {
            for (p, &c) in row.iter().enumerate() {
                pairs.extend(std::iter::repeat_n((g, p), c as usize));
            }
        }
        let mut f1_sum = 0.0;
        for c in 0..k {
            let tp = pairs.iter().filter(|&&(g, p)| g == c && p == c).count() as f64;
            let fp = pairs.iter().filter(|&&(g, p)| g != c && p == c).count() as f64;
            let fn_ = pairs.iter().filter(|&&(g, p)| g == c && p != c).count() as f64;
            let d = 2.0 * tp + fp + fn_;
            f1_sum += if d == 0.0 { 0.0 } else { 2.0 * tp / d };
        }
        let want = f1_sum / k as f64;
        ensure!(
            (report.macro_f1 - want).abs() < 1e-12,
            "{rows:?}: {} vs {want}",
            report.macro_f1
        );
        checked += 1;
    }
    let r = macro_report(&ConfusionMatrix::from_rows(&[vec![5, 5], vec![0, 10]]).unwrap()).unwrap();
    ensure!(
        format!("{:.4}", r.macro_f1) == "0.7333",
        "worked matrix gave {}",
        r.macro_f1
    );
    Ok(())
}

fn lexical() -> Outcome {
    let t = lexical_tokens;
    let same = t("the appeal is allowed with costs");
    ensure!(
        rouge_n(&same, &same, 1).f == 1.0 && rouge_n(&same, &same, 2).f == 1.0,
        "ROUGE-N identity"
    );
    ensure!(rouge_l(&same, &same).f == 1.0, "ROUGE-L identity");
    let b = bleu(
        std::slice::from_ref(&same),
        std::slice::from_ref(&same),
        4,
        BleuSmoothing::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure!((b.score - 1.0).abs() < 1e-9, "BLEU identity {}", b.score);
    let r1 = rouge_n(&t("the cat sat"), &t("the cat ran"), 1).f;
    ensure!((r1 - 2.0 / 3.0).abs() < 1e-9, "ROUGE-1 toy {r1}");
    let rl = rouge_l(&t("a b c d"), &t("a c b d")).f;
    ensure!((rl - 0.75).abs() < 1e-9, "ROUGE-L toy {rl}");
    let b = bleu(&[t("the the the")], &[t("the cat")], 1, BleuSmoothing::None).map_err(|e| e.to_string())?;
    let p1 = b.precisions[0].unwrap_or(f64::NAN);
    ensure!((p1 - 1.0 / 3.0).abs() < 1e-9, "clipped unigram precision {p1}");
    Ok(())
}

fn likert() -> Outcome {
    let scores: Vec<LikertScore> = std::iter::repeat_n(3, 23)
        .chain(std::iter::repeat_n(4, 27))
        .map(|v| LikertScore::new(v).unwrap())
        .collect();
    let s = likert_aggregate(&scores).map_err(|e| e.to_string())?;
    ensure!(format!("{:.2}", s.mean) == "3.54", "mean {}", s.mean);
    ensure!(s.distribution == [0, 0, 23, 27, 0], "distribution {:?}", s.distribution);
    Ok(())
}

fn prompt_harness() -> Outcome {
    let ctx = PromptContext::default();
    let case = "The appellant challenged the assessment order.";
    let skeleton = |kind| match kind {
        TemplateKind::FewshotPredExpl => "Format your output in list format",
        TemplateKind::FewshotPred => "Give the output predicted case decision as either 0 or 1.",
        TemplateKind::InstrPred | TemplateKind::InstrPredExpl => "### Response:",
    };
    for kind in [
        TemplateKind::FewshotPredExpl,
        TemplateKind::FewshotPred,
        TemplateKind::InstrPred,
        TemplateKind::InstrPredExpl,
    ] {
        let p = ctx.render(kind, "case", case).map_err(|e| e.to_string())?;
        ensure!(p.text.contains(skeleton(kind)), "{kind} lacks `{}`", skeleton(kind));
    }
    let pools = InstructionPools::default();
    for pool in [&pools.prediction, &pools.prediction_explanation] {
        let mut counts = [0usize; POOL_SIZE];
        for i in 0..16_000 {
            counts[sample_instruction(pool, derive_seed(13, &format!("case-{i}"))).0] += 1;
        }
        ensure!(
            counts.iter().all(|c| (900..=1100).contains(c)),
            "draw counts {counts:?}"
        );
    }
    let raw = "1.0 The order is upheld. 1.1 The order is upheld. 1.2 The order is upheld. 1.3 1.4 1.5";
    let p = parse_prediction(raw, true);
    ensure!(
        p.predicted == Prediction::NoDecision,
        "repetitive output parsed as {}",
        p.predicted
    );
    Ok(())
}

fn ljp(run_dir: &Path, args: &[&str]) -> Result<String, String> {
    let mut argv = vec!["ljp".to_string(), "--run-dir".into(), run_dir.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let cli = Cli::try_parse_from(argv).map_err(|e| e.to_string())?;
    run(&cli).map_err(|e| format!("ljp {}: {e}", args[0]))
}

fn fixture() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic-1000")
}

fn end_to_end(run_dir: &Path) -> Outcome {
    let corpus = fixture().join("corpus.jsonl");
    let refs = fixture().join("references.jsonl");
    ljp(run_dir, &["ingest", "--corpus", corpus.to_str().unwrap()])?;
    ljp(run_dir, &["label"])?;
    ljp(run_dir, &["split", "--variant", "multi"])?;
    let stats = ljp(run_dir, &["stats"])?;
    ljp(run_dir, &["chunk"])?;
    ljp(run_dir, &["predict", "--parallelism", "1"])?;
    let classify = ljp(run_dir, &["eval-classify"])?;
    let explain = ljp(run_dir, &["eval-explain", "--references", refs.to_str().unwrap()])?;
    let schemas: [(&str, &str, &[&str]); 3] = [
        (
            "stats",
            &stats,
            &[
                "#Documents",
                "Avg #words",
                "Acceptance(%)",
                "Train multi",
                "Train single",
                "Validation",
                "Test",
            ],
        ),
        (
            "eval-classify",
            &classify,
            &["Macro Precision", "Macro Recall", "Macro F1", "Accuracy"],
        ),
        (
            "eval-explain",
            &explain,
            &["Rouge-1", "Rouge-2", "Rouge-L", "BLEU", "METEOR", "BERTScore"],
        ),
    ];
    for (name, text, cols) in schemas {
        for col in cols {
            ensure!(text.contains(col), "{name} report lacks `{col}`:\n{text}");
        }
    }
    ljp(run_dir, &["verify"])?;
    Ok(())
}

fn http(addr: &str, method: &str, path: &str, body: Option<String>) -> Result<(u16, String), String> {
    let mut s = TcpStream::connect(addr).map_err(|e| e.to_string())?;
    let body = body.unwrap_or_default();
    let req = format!(
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    );
    s.write_all(req.as_bytes()).map_err(|e| e.to_string())?;
    let mut resp = String::new();
    s.read_to_string(&mut resp).map_err(|e| e.to_string())?;
    let status = resp
        .split_whitespace()
        .nth(1)
        .and_then(|c| c.parse().ok())
        .ok_or("bad status line")?;
    let payload = resp
        .split_once("\r\n\r\n")
        .map(|(_, b)| b.to_string())
        .unwrap_or_default();
    Ok((status, payload))
}

fn annotation_round_trip(run_dir: &Path) -> Outcome {
    ljp(run_dir, &["annotate-serve", "--create-only"])?;
    let store = Arc::new(AnnotationStore::open(&run_dir.join("annotate")).map_err(|e| e.to_string())?);
    let std_listener = std::net::TcpListener::bind("127.0.0.1:0").map_err(|e| e.to_string())?;
    let addr = std_listener.local_addr().unwrap().to_string();
    std_listener.set_nonblocking(true).unwrap();
    let served = Arc::clone(&store);
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener).unwrap();
            axum::serve(listener, ljp_cli::server::router(served, None))
                .await
                .unwrap();
        });
    });
    let mut duplicates_rejected = 0;
    for (r, rater) in ["rater-a", "rater-b"].into_iter().enumerate() {
        let (st, _) = http(
            &addr,
            "POST",
            "/api/raters",
            Some(format!("{{\"rater_id\":\"{rater}\"}}")),
        )?;
        ensure!(st == 201, "register {rater}: {st}");
        let mut step = 0usize;
        loop {
            let (st, body) = http(&addr, "GET", &format!("/api/next?rater_id={rater}"), None)?;
            ensure!(st == 200, "next: {st}");
            let task_id = match serde_json::from_str::<NextTask>(&body).map_err(|e| e.to_string())? {
                NextTask::Task(view) => view.task.task_id,
                NextTask::Done { .. } => break,
            };
            let rating = format!(
                "{{\"task_id\":\"{task_id}\",\"rater_id\":\"{rater}\",\"score\":{}}}",
                (step * 3 + r) % 5 + 1
            );
            let (st, _) = http(&addr, "POST", "/api/ratings", Some(rating.clone()))?;
            ensure!(st == 201, "rating: {st}");
            let (st, _) = http(&addr, "POST", "/api/ratings", Some(rating))?;
            duplicates_rejected += usize::from(st == 409);
            step += 1;
        }
        ensure!(step == 50, "{rater} rated {step} tasks");
    }
    ensure!(duplicates_rejected == 100, "{duplicates_rejected} duplicates rejected");
    let (_, body) = http(&addr, "GET", "/api/export", None)?;
    let export: ExportBundle = serde_json::from_str(&body).map_err(|e| e.to_string())?;
    ensure!(
        export.ratings.len() == 100,
        "export has {} ratings",
        export.ratings.len()
    );
    ensure!(
        export.ratings.iter().all(|r| (1..=5).contains(&r.score.value())),
        "score out of range"
    );
    let ledger = std::fs::read_to_string(run_dir.join("annotate/ratings.jsonl")).map_err(|e| e.to_string())?;
    let mut hist: HashMap<u8, u64> = HashMap::new();
    for line in ledger.lines() {
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        *hist.entry(v["score"].as_u64().unwrap_or(0) as u8).or_default() += 1;
    }
    let dist = export.models[0].summary.distribution;
    ensure!(
        (1..=5u8).all(|s| dist[s as usize - 1] == hist.get(&s).copied().unwrap_or(0)),
        "histogram {dist:?} vs ledger {hist:?}"
    );
    ljp(run_dir, &["annotate-export"])?;
    Ok(())
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let run_dir = tmp.path().join("run");
    let e2e_dir = run_dir.clone();
    let rt_dir = run_dir.clone();
    type Check = Box<dyn FnOnce() -> Outcome>;
    let criteria: Vec<(&str, Option<Duration>, Check)> = vec![
        (
            "labeler golden suite",
            Some(Duration::from_secs(1)),
            Box::new(labeler_golden),
        ),
        ("ingest filters", Some(Duration::from_secs(5)), Box::new(ingest_filters)),
        ("chunker", Some(Duration::from_secs(10)), Box::new(chunker)),
        ("splits", Some(Duration::from_secs(10)), Box::new(splits)),
        ("classification metrics", None, Box::new(classification)),
        ("lexical metrics", None, Box::new(lexical)),
        ("likert aggregation", None, Box::new(likert)),
        ("prompt harness", None, Box::new(prompt_harness)),
        (
            "end-to-end",
            Some(Duration::from_secs(30)),
            Box::new(move || end_to_end(&e2e_dir)),
        ),
        (
            "annotation round trip (secondary)",
            None,
            Box::new(move || annotation_round_trip(&rt_dir)),
        ),
    ];
    let mut failed = 0;
    for (name, bound, check) in criteria {
        let start = Instant::now();
        let mut outcome = check();
        let took = start.elapsed();
        if let (Ok(()), Some(b)) = (&outcome, bound) {
            if took > b {
                outcome = Err(format!("took {took:?}, bound {b:?}"));
            }
        }
        match outcome {
            Ok(()) => println!("PASS {name} ({} ms)", took.as_millis()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({} ms): {why}", took.as_millis());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
