//! Writes a synthetic six-class question corpus shaped like TREC
//! (5,452 train / 500 test) for smoke-testing the experiment runner.
//!
//! `cargo run --release --example make_synthetic -- <out dir>`

#[path = "../tests/common/mod.rs"]
mod common;

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/synthetic".into());
    let dir = std::path::Path::new(&dir);
    std::fs::create_dir_all(dir).expect("create output dir");
    common::write_jsonl(&dir.join("train.jsonl"), &common::questions(5452, 1, 0.1));
    common::write_jsonl(&dir.join("test.jsonl"), &common::questions(500, 2, 0.1));
    eprintln!("wrote {}", dir.display());
}
