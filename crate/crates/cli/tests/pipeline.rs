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

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use clap::Parser;
use ljp_cli::error::CliError;
use ljp_cli::{run, Cli};

fn ljp(run_dir: &Path, args: &[&str]) -> Result<String, CliError> {
    let mut argv = vec!["ljp".to_string(), "--run-dir".into(), run_dir.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    run(&Cli::try_parse_from(argv).expect("arguments parse"))
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic-1000")
}

/// A small synthetic corpus written next to the run directory.
fn small_corpus(root: &Path, n: usize) -> PathBuf {
    let out = root.join("corpus");
    ljp(
        &root.join("run"),
        &["synth", "--out", out.to_str().unwrap(), "--n-docs", &n.to_string()],
    )
    .unwrap();
    out
}

fn full_run(run_dir: &Path, corpus: &Path) {
    let c = corpus.join("corpus.jsonl");
    let r = corpus.join("references.jsonl");
    ljp(run_dir, &["ingest", "--corpus", c.to_str().unwrap()]).unwrap();
    ljp(run_dir, &["label"]).unwrap();
    ljp(run_dir, &["split", "--variant", "multi"]).unwrap();
    ljp(run_dir, &["stats"]).unwrap();
    ljp(run_dir, &["chunk"]).unwrap();
    ljp(run_dir, &["predict"]).unwrap();
    ljp(run_dir, &["eval-classify"]).unwrap();
    ljp(run_dir, &["eval-explain", "--references", r.to_str().unwrap()]).unwrap();
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn small_corpus_runs_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), 120);
    let run_dir = tmp.path().join("run");
    full_run(&run_dir, &corpus);
    let classify = fs::read_to_string(run_dir.join("eval_classify.txt")).unwrap();
    for col in ["Macro Precision", "Macro Recall", "Macro F1", "Accuracy"] {
        assert!(classify.contains(col), "{classify}");
    }
    let explain = fs::read_to_string(run_dir.join("eval_explain.txt")).unwrap();
    for col in ["Rouge-1", "Rouge-2", "Rouge-L", "BLEU", "METEOR", "BERTScore"] {
        assert!(explain.contains(col), "{explain}");
    }
    let verify = ljp(&run_dir, &["verify"]).unwrap();
    assert!(verify.lines().all(|l| l.ends_with(" ok")), "{verify}");
}

#[test]
fn shipped_fixture_regenerates_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    ljp(tmp.path(), &["synth", "--out", tmp.path().to_str().unwrap()]).unwrap();
    for name in ["corpus.jsonl", "references.jsonl"] {
        let shipped = fs::read(fixture_dir().join(name)).unwrap();
        assert!(shipped == fs::read(tmp.path().join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn reruns_write_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), 80);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    full_run(&a, &corpus);
    full_run(&b, &corpus);
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(
        fa.iter().map(|f| &f.0).collect::<Vec<_>>(),
        fb.iter().map(|f| &f.0).collect::<Vec<_>>()
    );
    for (x, y) in fa.iter().zip(&fb) {
        assert!(x.1 == y.1, "{} differs between runs", x.0);
    }
    let before = files(&a);
    full_run(&a, &corpus);
    assert!(before == files(&a), "rerun in place changed artifacts");
}

#[test]
fn downstream_commands_name_the_missing_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let err = ljp(tmp.path(), &["label"]).unwrap_err();
    assert!(matches!(err, CliError::MissingUpstream { .. }));
    assert!(err.to_string().contains("run `ljp ingest` first"), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn identical_gold_and_predictions_score_perfectly() {
    let tmp = tempfile::tempdir().unwrap();
    let lines: String = (0..30)
        .map(|i| format!("{{\"case_id\":\"c{i}\",\"label\":{}}}\n", i % 2))
        .collect();
    let gold = tmp.path().join("gold.jsonl");
    fs::write(&gold, &lines).unwrap();
    let out = ljp(
        &tmp.path().join("run"),
        &[
            "eval-classify",
            "--format",
            "records",
            "--gold",
            gold.to_str().unwrap(),
            "--pred",
            gold.to_str().unwrap(),
        ],
    )
    .unwrap();
    let acc: serde_json::Value = out
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .find(|v| v["metric"] == "Accuracy")
        .expect("accuracy record");
    assert_eq!(acc["value"].as_f64(), Some(1.0));
}

#[test]
fn edited_inputs_block_until_forced() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), 60);
    let run_dir = tmp.path().join("run");
    let c = corpus.join("corpus.jsonl");
    ljp(&run_dir, &["ingest", "--corpus", c.to_str().unwrap()]).unwrap();
    ljp(&run_dir, &["label"]).unwrap();
    let labeled = run_dir.join("labeled.jsonl");
    let text = fs::read_to_string(&labeled).unwrap();
    let trimmed: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    fs::write(&labeled, trimmed).unwrap();

    let err = ljp(&run_dir, &["split"]).unwrap_err();
    assert!(matches!(err, CliError::StaleInput { .. }), "{err}");
    assert!(ljp(&run_dir, &["verify"]).is_err());
    ljp(&run_dir, &["--force", "split"]).unwrap();

    // A re-run upstream leaves the split behind the new labels.
    ljp(
        &run_dir,
        &["ingest", "--corpus", c.to_str().unwrap(), "--min-words", "100"],
    )
    .unwrap();
    ljp(&run_dir, &["label"]).unwrap();
    let err = ljp(&run_dir, &["chunk"]).unwrap_err();
    assert!(matches!(err, CliError::Inconsistent { .. }), "{err}");
    assert!(err.to_string().contains("`ljp split`"), "{err}");
    ljp(&run_dir, &["split"]).unwrap();
    ljp(&run_dir, &["chunk"]).unwrap();
}

fn binary(args: &[&str], env: &[(&str, &str)]) -> (i32, String, String) {
    let mut cmd = Process::new(env!("CARGO_BIN_EXE_ljp"));
    cmd.args(args);
    for key in ["LJP_SEED", "LJP_CONFIG", "LJP_RUN_DIR"] {
        cmd.env_remove(key);
    }
    cmd.envs(env.iter().copied());
    let out = cmd.output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn flags_beat_env_beat_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "seed = 7\n").unwrap();
    let run_dir = tmp.path().join("run");
    let (run_dir, cfg) = (run_dir.to_str().unwrap(), cfg.to_str().unwrap());
    let seed_of = |args: &[&str], env: &[(&str, &str)]| {
        let (_, _, err) = binary(args, env);
        err.lines()
            .find_map(|l| l.strip_prefix("ljp 0.1.0: seed="))
            .map(str::to_string)
            .unwrap()
    };
    assert_eq!(seed_of(&["--run-dir", run_dir, "verify"], &[]), "13");
    assert_eq!(seed_of(&["--run-dir", run_dir, "--config", cfg, "verify"], &[]), "7");
    assert_eq!(
        seed_of(&["--run-dir", run_dir, "--config", cfg, "verify"], &[("LJP_SEED", "5")]),
        "5"
    );
    assert_eq!(
        seed_of(
            &["--run-dir", run_dir, "--config", cfg, "--seed", "9", "verify"],
            &[("LJP_SEED", "5")]
        ),
        "9"
    );
}

#[test]
fn exit_codes_follow_the_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    let run_dir = run_dir.to_str().unwrap();
    let (code, _, err) = binary(&["--run-dir", run_dir, "split"], &[]);
    assert_eq!(code, 3);
    assert!(err.contains("error[missing-upstream]"), "{err}");

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "seed = 1\nshiny = true\n").unwrap();
    let (code, _, err) = binary(
        &["--run-dir", run_dir, "--config", bad.to_str().unwrap(), "verify"],
        &[],
    );
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("error[config]"), "{err}");

    let (code, _, _) = binary(
        &["--run-dir", run_dir, "ingest", "--corpus", "/nonexistent/corpus.jsonl"],
        &[],
    );
    assert_eq!(code, 1);
}
