use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn dataset() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic.jsonl")
}

fn tribrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tribrid"))
        .args(args)
        .env_remove("TRIBRID_SEED")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = tribrid(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn jsonl(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

/// A short training run shared by the tests that need a checkpoint.
fn checkpoint(dir: &Path, extra: &[&str]) -> PathBuf {
    let ckpt = dir.join("model.ckpt");
    let history = dir.join("history.json");
    let data = dataset();
    let mut args = vec!["train", "--dataset", s(&data), "--epochs", "4", "--checkpoint", s(&ckpt), "--out", s(&history)];
    args.extend_from_slice(extra);
    ok(&args);
    ckpt
}

#[test]
fn negate_reads_lines_and_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    std::fs::write(&input, "Zoos are cruel.\nWe should act now.\nHello there.\n").unwrap();
    let rows = jsonl(&ok(&["negate", "--input", s(&input)]));
    assert_eq!(rows[0]["negated"], "Zoos are not cruel.");
    assert_eq!(rows[1]["negated"], "We should not act now.");
    assert!(rows[2]["negated"].is_null());

    let out = dir.path().join("neg.jsonl");
    ok(&["negate", "--dataset", s(&dataset()), "--negator", "appsuff", "--out", s(&out)]);
    let rows = jsonl(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 2000);
    assert!(rows.iter().all(|r| r["negated"].as_str().unwrap().ends_with(" but this is not true")));
    assert!(dir.path().join("neg.jsonl.manifest.json").exists());
}

#[test]
fn missing_template_file_fails() {
    let out = tribrid(&["negate", "--input", s(&dataset()), "--templates", "/nonexistent/rules.txt"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
    assert!(out.stdout.is_empty());
}

#[test]
fn train_writes_manifest_and_respects_seed_env() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("m.ckpt");
    let out = Command::new(env!("CARGO_BIN_EXE_tribrid"))
        .args(["train", "--dataset", s(&dataset()), "--epochs", "1", "--checkpoint", s(&ckpt)])
        .env("TRIBRID_SEED", "7")
        .output()
        .unwrap();
    assert!(out.status.success());
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.ckpt.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tool"], "tribrid");
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["args"]["train"]["epochs"], 1);
    // history went to stdout because no --out was given
    let history: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(history["epochs"].as_array().unwrap().len(), 1);
}

#[test]
fn pair_only_training_has_no_triplet_term() {
    let dir = tempfile::tempdir().unwrap();
    checkpoint(dir.path(), &["--no-negation"]);
    let history: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("history.json")).unwrap()).unwrap();
    assert_eq!(history["initial"]["l_tri"], 0.0);
    for epoch in history["epochs"].as_array().unwrap() {
        assert_eq!(epoch["l_tri"], 0.0);
    }
}

#[test]
fn predict_evaluate_sweep_flip() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = checkpoint(dir.path(), &[]);
    let data = dataset();

    let log = jsonl(&ok(&["predict", "--checkpoint", s(&ckpt), "--dataset", s(&data), "--mode", "log", "--tau", "0"]));
    assert_eq!(log.len(), 300);
    assert!(log.iter().all(|r| r["verdict"] == "S" || r["verdict"] == "O"));

    let discard = jsonl(&ok(&["predict", "--checkpoint", s(&ckpt), "--dataset", s(&data), "--mode", "dist", "--discard", "0.3"]));
    let abstained = discard.iter().filter(|r| r["verdict"] == "A").count();
    assert!(abstained > 30 && abstained < 150, "{abstained}");

    let weak = jsonl(&ok(&[
        "predict", "--checkpoint", s(&ckpt), "--dataset", s(&data), "--mode", "weak", "--bank-quantiles", "0.1,0.3,0.5",
    ]));
    assert!(weak.iter().all(|r| r["verdict"] != "A"));
    let majority = jsonl(&ok(&["predict", "--checkpoint", s(&ckpt), "--dataset", s(&data), "--mode", "majority", "--reference-banks"]));
    assert_eq!(majority.len(), 300);

    let preds = dir.path().join("preds.jsonl");
    ok(&["predict", "--checkpoint", s(&ckpt), "--dataset", s(&data), "--out", s(&preds)]);
    let metrics: Value = serde_json::from_str(&ok(&["evaluate", "--predictions", s(&preds), "--dataset", s(&data)])).unwrap();
    assert_eq!(metrics["total"], 300);
    assert_eq!(metrics["coverage"], 1.0);

    let sweep = ok(&["sweep", "--checkpoint", s(&ckpt), "--dataset", s(&data), "--mode", "log"]);
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines[0], "method,X,tau,f1,precision,recall,coverage");
    assert_eq!(lines.len(), 10);
    let both = ok(&["sweep", "--checkpoint", s(&ckpt), "--dataset", s(&data), "--percentages", "0.2,0.4"]);
    assert_eq!(both.lines().count(), 5);

    let flip = ok(&["flip", "--checkpoint", s(&ckpt), "--dataset", s(&data)]);
    let rows: Vec<&str> = flip.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("appsuff,300,300,1.0000,"));
}

#[test]
fn evaluate_gold_as_predictions_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("gold.jsonl");
    let text: String = std::fs::read_to_string(dataset())
        .unwrap()
        .lines()
        .filter(|l| l.contains("\"split\":\"dev\""))
        .map(|l| {
            let v: Value = serde_json::from_str(l).unwrap();
            let verdict = if v["label"] == "support" { "S" } else { "O" };
            format!("{{\"id\":{},\"verdict\":\"{verdict}\"}}\n", v["id"])
        })
        .collect();
    std::fs::write(&preds, text).unwrap();
    let out = dir.path().join("m.json");
    ok(&["evaluate", "--predictions", s(&preds), "--dataset", s(&dataset()), "--split", "dev", "--out", s(&out)]);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!((m["f1"].as_f64(), m["total"].as_u64()), (Some(1.0), Some(300)));

    // predictions for the wrong split are rejected
    let bad = tribrid(&["evaluate", "--predictions", s(&preds), "--dataset", s(&dataset())]);
    assert!(!bad.status.success());
}

#[test]
fn dist_mode_without_negations_falls_back() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = checkpoint(dir.path(), &[]);
    let data = dir.path().join("plain.jsonl");
    std::fs::write(
        &data,
        "{\"id\":\"a\",\"claim\":\"Zoos should exist.\",\"perspective\":\"Hello there.\",\"label\":\"support\",\"split\":\"test\"}\n\
         {\"id\":\"b\",\"claim\":\"Zoos should exist.\",\"perspective\":\"Animals, animals.\",\"label\":\"oppose\",\"split\":\"test\"}\n",
    )
    .unwrap();
    let rows = jsonl(&ok(&["predict", "--checkpoint", s(&ckpt), "--dataset", s(&data), "--mode", "dist"]));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["fallback"] == true && r["verdict"] != "A"));
}

#[test]
fn ensemble_fit_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = checkpoint(dir.path(), &[]);
    let model = dir.path().join("lm.json");
    ok(&[
        "ensemble-fit", "--checkpoint", s(&ckpt), "--dataset", s(&dataset()), "--bank-quantiles", "0.2,0.4", "--out", s(&model),
    ]);
    let params: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(params["columns"].as_array().unwrap().len(), 4);
    let rows = jsonl(&ok(&["ensemble-predict", "--model", s(&model), "--checkpoint", s(&ckpt), "--dataset", s(&dataset())]));
    assert_eq!(rows.len(), 300);
    assert!(rows.iter().all(|r| r["verdict"] != "A"));

    // a weak ensemble needs threshold banks
    let out = tribrid(&["ensemble-fit", "--checkpoint", s(&ckpt), "--dataset", s(&dataset())]);
    assert!(!out.status.success());
}

#[test]
fn same_seed_same_bytes() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let ckpt = checkpoint(dir.path(), &["--seed", "5"]);
        let preds = ok(&["predict", "--checkpoint", s(&ckpt), "--dataset", s(&dataset())]);
        (std::fs::read(&ckpt).unwrap(), std::fs::read(dir.path().join("history.json")).unwrap(), preds)
    };
    assert!(run() == run());
}
