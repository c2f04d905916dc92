use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gptft::synthetic::keyword_corpus;
use gptft::trainer::MetricsReport;
use gptft_cli::commands::EvalMetrics;
use tempfile::TempDir;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn gptft(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gptft"))
        .args(args)
        .current_dir(dir)
        .env_remove("GPTFT_CONFIG")
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = gptft(dir, args);
    assert!(
        out.status.success(),
        "gptft {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Asserts failure and returns the single stderr line.
fn fails(dir: &Path, args: &[&str], category: &str) -> String {
    let out = gptft(dir, args);
    assert!(!out.status.success(), "gptft {args:?} unexpectedly succeeded");
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().last().unwrap_or("").to_string();
    assert!(line.starts_with(&format!("error[{category}]: ")), "{stderr}");
    line
}

fn fixture(name: &str) -> PathBuf {
    Path::new(FIXTURES).join(name)
}

fn write_corpus(path: &Path, n: usize, seed: u64) {
    let mut s = String::new();
    for e in keyword_corpus(n, seed) {
        s += &serde_json::to_string(&e).unwrap();
        s.push('\n');
    }
    std::fs::write(path, s).unwrap();
}

/// A toy checkpoint, a split synthetic corpus and a config using both.
fn toy_workspace(n: usize, extra: &str) -> TempDir {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write_corpus(&dir.join("corpus.jsonl"), n, 3);
    std::fs::write(
        dir.join("run.toml"),
        format!(
            "preset = \"toy\"\nepochs = 2\nbatch_size = 8\nmax_len = 48\nlr = 1e-3\nseed = 5\n\
             checkpoint = \"init.ckpt\"\noutput_dir = \"out\"\n{extra}"
        ),
    )
    .unwrap();
    ok(dir, &["--config", "run.toml", "init", "--output", "init.ckpt"]);
    ok(dir, &["--config", "run.toml", "split", "corpus.jsonl"]);
    tmp
}

fn only_run_dir(dir: &Path) -> PathBuf {
    let runs: Vec<_> = std::fs::read_dir(dir.join("out/runs")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(runs.len(), 1, "{runs:?}");
    runs.into_iter().next().unwrap()
}

#[test]
fn params_reports_exact_counts() {
    let tmp = TempDir::new().unwrap();
    let selective = ok(tmp.path(), &["params", "--preset", "gpt2-small", "--strategy", "selective"]);
    for line in ["trainable\t7090946", "pretrained_total\t124439808", "per_block\t7087872", "fraction\t5.698%"] {
        assert!(selective.contains(line), "{selective}");
    }
    let head = ok(tmp.path(), &["params", "--preset", "gpt2-small", "--strategy", "head-only"]);
    assert!(head.contains("trainable\t1538\n"), "{head}");
    let full = ok(tmp.path(), &["params", "--preset", "gpt2-small", "--strategy", "full"]);
    assert!(full.contains("fraction\t100.000%"), "{full}");
    fails(tmp.path(), &["params", "--preset", "gpt2-large"], "config");
}

#[test]
fn label_matches_fixture_and_is_idempotent() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    std::fs::copy(fixture("three_docs.csv"), dir.join("three_docs.csv")).unwrap();
    let stdout = ok(dir, &["label", "three_docs.csv"]);
    assert!(stdout.contains("positive or uncertain (1)\t1\t33.3%"), "{stdout}");
    assert!(stdout.contains("negative (0)\t2\t66.7%"), "{stdout}");
    let first = std::fs::read(dir.join("out/labels/three_docs.jsonl")).unwrap();
    assert_eq!(first, std::fs::read(fixture("three_docs.expected.jsonl")).unwrap());
    ok(dir, &["label", "three_docs.csv"]);
    assert_eq!(std::fs::read(dir.join("out/labels/three_docs.jsonl")).unwrap(), first);
    assert_eq!(
        std::fs::read(dir.join("three_docs.csv")).unwrap(),
        std::fs::read(fixture("three_docs.csv")).unwrap()
    );
}

#[test]
fn label_rejects_empty_input_and_leaves_no_output() {
    let tmp = TempDir::new().unwrap();
    std::fs::write(tmp.path().join("empty.jsonl"), "").unwrap();
    fails(tmp.path(), &["label", "empty.jsonl"], "input");
    assert_eq!(std::fs::read_dir(tmp.path().join("out/labels")).unwrap().count(), 0);
    std::fs::write(tmp.path().join("header.csv"), "doc_id,text\n").unwrap();
    fails(tmp.path(), &["label", "header.csv"], "input");
}

#[test]
fn label_uses_a_custom_rule_file() {
    let tmp = TempDir::new().unwrap();
    let rules = gptft::labeler::BUILTIN_RULES.replace("phrase = pneumonia\n", "phrase = pneumonia\nphrase = pna\n");
    std::fs::write(tmp.path().join("custom.rules"), rules).unwrap();
    std::fs::write(tmp.path().join("r.jsonl"), "{\"doc_id\":\"x\",\"text\":\"RLL pna.\"}\n").unwrap();
    ok(tmp.path(), &["label", "r.jsonl", "--rules", "custom.rules", "-o", "l.jsonl"]);
    let out = std::fs::read_to_string(tmp.path().join("l.jsonl")).unwrap();
    assert!(out.contains("\"label\":1"), "{out}");
    std::fs::write(tmp.path().join("bad.rules"), "[negation]\nwindow = x\n").unwrap();
    let line = fails(tmp.path(), &["label", "r.jsonl", "--rules", "bad.rules"], "rules");
    assert!(line.contains("line 2"), "{line}");
}

#[test]
fn ingestion_formats() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("a.tsv"), "doc_id\ttext\nx\tNo edema.\n").unwrap();
    ok(dir, &["label", "a.tsv"]);
    std::fs::write(dir.join("b.jsonl"), "{\"doc_id\":\"x\",\"text\":\"line one\\nline two\"}\n\n").unwrap();
    ok(dir, &["label", "b.jsonl"]);
    std::fs::write(dir.join("c.csv"), "doc_id,text\nx,\"line one\nline two\"\n").unwrap();
    let line = fails(dir, &["label", "c.csv"], "input");
    assert!(line.contains("JSON lines"), "{line}");
    std::fs::write(dir.join("d.csv"), "id,text\nx,y\n").unwrap();
    fails(dir, &["label", "d.csv"], "input");
    std::fs::write(dir.join("e.jsonl"), "{\"doc_id\":\"x\",\"text\":\"a\"}\n{\"doc_id\":\"x\",\"text\":\"b\"}\n").unwrap();
    let line = fails(dir, &["label", "e.jsonl"], "input");
    assert!(line.contains("duplicate doc_id"), "{line}");
    std::fs::write(dir.join("f.txt"), "x").unwrap();
    fails(dir, &["label", "f.txt"], "input");
    fails(dir, &["label", "missing.csv"], "io");
}

#[test]
fn split_sizes_and_determinism() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write_corpus(&dir.join("c.jsonl"), 101, 0);
    let stdout = ok(dir, &["--seed", "9", "split", "c.jsonl"]);
    let sizes: Vec<&str> = stdout.lines().map(|l| l.split('\t').nth(1).unwrap()).collect();
    assert_eq!(sizes, ["70", "15", "16"]);
    let read = |f: &str| std::fs::read(dir.join("out/splits").join(f)).unwrap();
    let first: Vec<_> = ["train.jsonl", "val.jsonl", "test.jsonl"].map(read).into();
    ok(dir, &["--seed", "9", "split", "c.jsonl"]);
    let second: Vec<_> = ["train.jsonl", "val.jsonl", "test.jsonl"].map(read).into();
    assert_eq!(first, second);
    ok(dir, &["--seed", "10", "split", "c.jsonl"]);
    assert_ne!(read("train.jsonl"), first[0]);

    std::fs::write(dir.join("u.csv"), "doc_id,text\na,x\n").unwrap();
    let line = fails(dir, &["split", "u.csv"], "input");
    assert!(line.contains("lack a label"), "{line}");
    write_corpus(&dir.join("small.jsonl"), 9, 0);
    fails(dir, &["split", "small.jsonl"], "input");
}

#[test]
fn train_then_eval_reproduces_test_metrics() {
    let tmp = toy_workspace(80, "");
    let dir = tmp.path();
    let stdout = ok(dir, &["--config", "run.toml", "train", "--splits", "out/splits"]);
    assert!(stdout.contains("test_acc"), "{stdout}");
    let run = only_run_dir(dir);
    assert!(run.file_name().unwrap().to_str().unwrap().ends_with("-selective"));
    for f in ["report.json", "epochs.tsv", "checkpoint.ckpt", "config.toml"] {
        assert!(run.join(f).exists(), "{f}");
    }
    assert!(!run.join(".lock").exists());
    let report = MetricsReport::from_json(&std::fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.epochs.len(), 2);
    assert_eq!(report.seed, 5);

    let ckpt = run.join("checkpoint.ckpt");
    let json = ok(dir, &["--config", "run.toml", "eval", "--checkpoint", ckpt.to_str().unwrap(), "out/splits/test.jsonl"]);
    let metrics: EvalMetrics = serde_json::from_str(&json).unwrap();
    assert_eq!(metrics.accuracy, report.final_metrics.test_acc);
    assert_eq!(metrics.f1, report.final_metrics.f1);
    assert_eq!(metrics.auroc, report.final_metrics.auroc);
    assert_eq!(metrics.documents, 80 - 56 - 12);
}

#[test]
fn eval_reports_single_class_auroc_as_absent_and_rejects_corruption() {
    let tmp = toy_workspace(40, "");
    let dir = tmp.path();
    let negatives: String = keyword_corpus(20, 1)
        .into_iter()
        .filter(|e| e.label == 0)
        .map(|e| serde_json::to_string(&e).unwrap() + "\n")
        .collect();
    std::fs::write(dir.join("neg.jsonl"), negatives).unwrap();
    let json = ok(dir, &["--config", "run.toml", "eval", "--checkpoint", "init.ckpt", "neg.jsonl", "-o", "m.json"]);
    assert!(json.contains("\"auroc\": null"), "{json}");
    assert_eq!(std::fs::read_to_string(dir.join("m.json")).unwrap().trim(), json.trim());

    let mut bytes = std::fs::read(dir.join("init.ckpt")).unwrap();
    bytes[0] ^= 0xff;
    std::fs::write(dir.join("bad.ckpt"), &bytes).unwrap();
    fails(dir, &["eval", "--checkpoint", "bad.ckpt", "neg.jsonl"], "checkpoint");
    let ckpt = std::fs::read(dir.join("init.ckpt")).unwrap();
    std::fs::write(dir.join("short.ckpt"), &ckpt[..ckpt.len() - 10]).unwrap();
    fails(dir, &["eval", "--checkpoint", "short.ckpt", "neg.jsonl"], "checkpoint");
}

#[test]
fn zero_learning_rate_gives_constant_loss() {
    let tmp = toy_workspace(40, "shuffle = false\n");
    let dir = tmp.path();
    ok(dir, &["--config", "run.toml", "train", "--splits", "out/splits", "--lr", "0", "--epochs", "3"]);
    let run = only_run_dir(dir);
    let report = MetricsReport::from_json(&std::fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    let losses: Vec<f64> = report.epochs.iter().map(|e| e.train_loss).collect();
    assert_eq!(losses.len(), 3);
    assert!(losses.windows(2).all(|w| w[0] == w[1]), "{losses:?}");
    assert_eq!(
        std::fs::read(run.join("checkpoint.ckpt")).unwrap(),
        std::fs::read(dir.join("init.ckpt")).unwrap()
    );
}

#[test]
fn train_validates_everything_before_compute() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write_corpus(&dir.join("c.jsonl"), 40, 0);
    let line = fails(dir, &["--preset", "toy", "train", "--data", "c.jsonl"], "config");
    assert!(line.contains("checkpoint: required"), "{line}");
    let line = fails(dir, &["--preset", "toy", "train", "--data", "c.jsonl", "--checkpoint", "nope.ckpt"], "config");
    assert!(line.contains("nope.ckpt does not exist"), "{line}");

    std::fs::write(dir.join("bad.toml"), "epochs = 0\nbatch_size = 0\nlr = -1.0\nstrategy = \"most\"\npreset = \"huge\"\n").unwrap();
    let line = fails(dir, &["--config", "bad.toml", "train"], "config");
    for field in ["epochs", "batch_size", "lr", "strategy", "preset", "checkpoint", "data"] {
        assert!(line.contains(field), "{field} not reported: {line}");
    }
    assert!(!dir.join("out").exists());

    std::fs::write(dir.join("typo.toml"), "epoch = 3\n").unwrap();
    fails(dir, &["--config", "typo.toml", "params"], "config");
    fails(dir, &["--config", "absent.toml", "params"], "io");
}

#[test]
fn config_file_env_and_flag_precedence() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("c.toml"), "preset = \"toy\"\nstrategy = \"head-only\"\n").unwrap();
    let from_file = ok(dir, &["--config", "c.toml", "params"]);
    assert!(from_file.contains("preset\ttoy") && from_file.contains("strategy\thead-only"), "{from_file}");
    let overridden = ok(dir, &["--config", "c.toml", "params", "--strategy", "full"]);
    assert!(overridden.contains("strategy\tfull"), "{overridden}");
    let via_env = Command::new(env!("CARGO_BIN_EXE_gptft"))
        .arg("params")
        .current_dir(dir)
        .env("GPTFT_CONFIG", dir.join("c.toml"))
        .output()
        .unwrap();
    assert!(String::from_utf8(via_env.stdout).unwrap().contains("preset\ttoy"));
}

#[test]
fn locked_run_directory_is_refused() {
    let tmp = toy_workspace(40, "");
    let dir = tmp.path();
    std::fs::create_dir_all(dir.join("busy")).unwrap();
    std::fs::write(dir.join("busy/.lock"), "1").unwrap();
    fails(dir, &["--config", "run.toml", "train", "--splits", "out/splits", "--run-dir", "busy"], "lock");
    assert!(dir.join("busy/.lock").exists());
}

#[test]
fn plot_data_matches_golden_tables() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let plot = fixture("plot");
    let reports: Vec<String> = ["head-only", "selective", "full"]
        .iter()
        .map(|s| plot.join(format!("{s}.json")).to_str().unwrap().to_string())
        .collect();
    let mut args = vec!["plot-data"];
    args.extend(reports.iter().map(String::as_str));
    ok(dir, &args);
    for table in ["time.tsv", "accuracy.tsv", "metrics.tsv"] {
        assert_eq!(
            std::fs::read_to_string(dir.join("out/plots").join(table)).unwrap(),
            std::fs::read_to_string(plot.join(table)).unwrap(),
            "{table}"
        );
    }
    ok(dir, &["plot-data", &reports[1]]);
    let one = std::fs::read_to_string(dir.join("out/plots/metrics.tsv")).unwrap();
    assert_eq!(one, "strategy\tf1\tauroc\nselective\t0.85\t0.96\n");
    std::fs::write(dir.join("junk.json"), "{}").unwrap();
    fails(dir, &["plot-data", "junk.json"], "input");
}

#[test]
fn tokenize_round_trips() {
    let tmp = TempDir::new().unwrap();
    let ids = ok(tmp.path(), &["tokenize", "Pleural effusion, 2.5 cm."]);
    let decoded = ok(tmp.path(), &["tokenize", "--decode", ids.trim()]);
    assert_eq!(decoded.trim_end_matches('\n'), "Pleural effusion, 2.5 cm.");
    fails(tmp.path(), &["tokenize", "--decode", "999"], "tokenizer");
    fails(tmp.path(), &["tokenize", "--decode", "abc"], "input");
}

#[test]
fn usage_errors_are_single_line() {
    let tmp = TempDir::new().unwrap();
    let out = gptft(tmp.path(), &["train", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.starts_with("error[usage]: "));
    assert!(gptft(tmp.path(), &["--help"]).status.success());
}
