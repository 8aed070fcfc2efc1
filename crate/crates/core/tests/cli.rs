mod common;

use std::path::Path;
use std::process::{Command, Output};

fn softaug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softaug")).args(args).output().expect("spawn softaug")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_exits_zero() {
    let out = softaug(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["augment", "train", "eval", "experiment"] {
        assert!(text.contains(sub), "usage lists {sub}");
    }
    for sub in ["augment", "train", "eval", "experiment", "datasets"] {
        assert_eq!(code(&softaug(&[sub, "--help"])), 0, "{sub} --help");
    }
}

#[test]
fn usage_errors_exit_one() {
    let out = softaug(&["--no-such-flag"]);
    assert_eq!(code(&out), 1);
    assert!(!out.stderr.is_empty());
    assert_eq!(code(&softaug(&["augment", "--bogus"])), 1);
    assert_eq!(code(&softaug(&["frobnicate"])), 1);
    assert_eq!(code(&softaug(&["augment", "--input", "x", "--output", "y", "--method", "mixup"])), 1);
}

#[test]
fn missing_config_exits_two() {
    let out = softaug(&["experiment", "--config", "missing.file"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing.file"), "{err}");
}

#[test]
fn softeda_augment_doubles_three_lines() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.jsonl");
    let output = dir.path().join("out.jsonl");
    std::fs::write(
        &input,
        "{\"text\": \"the movie was good\", \"label\": 1}\n\
         {\"text\": \"a dull and slow plot\", \"label\": 0}\n\
         {\"text\": \"great acting overall\", \"label\": 1}\n",
    )
    .unwrap();
    let out = softaug(&[
        "augment", "--input", path(&input), "--output", path(&output), "--method", "softeda", "--alpha", "0.1",
        "--n-aug", "1", "--seed", "3",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let body = std::fs::read_to_string(&output).unwrap();
    let lines: Vec<serde_json::Value> = body.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 6);
    for (i, v) in lines.iter().enumerate() {
        let dist: Vec<f64> = serde_json::from_value(v["label_dist"].clone()).unwrap();
        assert_eq!(dist.len(), 2);
        if i < 3 {
            assert_eq!(v["origin"], "original");
            assert!(dist.contains(&1.0));
        } else {
            assert_eq!(v["origin"], "augmented");
            assert_eq!(v["label"], lines[i - 3]["label"]);
            let hi = dist.iter().cloned().fold(f64::MIN, f64::max);
            assert!((hi - 0.95).abs() < 1e-12, "{dist:?}");
        }
    }
}

#[test]
fn augment_rejects_alpha_for_plain_eda() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.jsonl");
    std::fs::write(&input, "{\"text\": \"fine\", \"label\": 0}\n").unwrap();
    let output = dir.path().join("out.jsonl");
    let out = softaug(&["augment", "--input", path(&input), "--output", path(&output), "--method", "eda", "--alpha", "0.2"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_label_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.jsonl");
    std::fs::write(&input, "{\"text\": \"ok\", \"label\": 0}\n{\"text\": \"bad\", \"label\": 7}\n").unwrap();
    let output = dir.path().join("out.jsonl");
    let out = softaug(&[
        "augment", "--input", path(&input), "--output", path(&output), "--method", "aeda", "--n-classes", "2",
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn train_then_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.jsonl");
    let test = dir.path().join("test.jsonl");
    common::write_jsonl(&train, &common::questions(300, 11, 0.0));
    common::write_jsonl(&test, &common::questions(60, 12, 0.0));
    let model_dir = dir.path().join("model");
    let out = softaug(&[
        "train", "--train", path(&train), "--n-classes", "6", "--out", path(&model_dir), "--max-epochs", "4",
        "--lr", "0.005", "--seed", "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["model.ckpt", "vocab.txt", "history.csv"] {
        assert!(model_dir.join(f).exists(), "{f}");
    }
    let history = std::fs::read_to_string(model_dir.join("history.csv")).unwrap();
    assert!(history.starts_with("epoch,train_loss,val_loss,val_acc\n"));
    assert_eq!(history.lines().count(), 5);

    let eval = |dir: &Path| {
        let out = softaug(&["eval", "--model-dir", path(dir), "--test", path(&test)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice::<serde_json::Value>(&out.stdout).unwrap()
    };
    let first = eval(&model_dir);
    assert_eq!(first, eval(&model_dir));
    let acc = first["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    assert!(acc > 0.3, "a few epochs at lr 5e-3 beat chance: {acc}");
}

#[test]
fn datasets_listing() {
    let out = softaug(&["datasets", "trec"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("5452") && text.contains("500"));
    let out = softaug(&["datasets", "imdb"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("CoLA"));
}
