//! Command-line interface. Exit codes: 0 success, 1 usage error, 2 runtime
//! error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::augment::{augment_corpus, AugmentPolicy, Lexicon, Method, DEFAULT_AEDA_RATIO, DEFAULT_OP_RATE};
use crate::data::{build_vocab, describe_dataset, load_jsonl, split_validation, write_jsonl, Vocab, DATASETS, DEFAULT_MIN_FREQ};
use crate::error::{Error, Result};
use crate::experiment::{run_experiment, ExperimentConfig};
use crate::lexicon::{load_stopwords, load_thesaurus, StopwordSet, Thesaurus};
use crate::model::{AdamWConfig, Model, ModelConfig};
use crate::train::{evaluate, train, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "softaug", version, about = "EDA / AEDA / softEDA text augmentation and a small CNN text classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Augment a JSONL corpus.
    Augment(AugmentArgs),
    /// Train the CNN classifier on a JSONL corpus.
    Train(TrainArgs),
    /// Evaluate a trained model directory on a JSONL corpus.
    Eval(EvalArgs),
    /// Run a method comparison sweep described by a TOML config.
    Experiment(ExperimentArgs),
    /// Show the dataset registry.
    Datasets {
        /// Show a single dataset.
        name: Option<String>,
    },
}

#[derive(Debug, Args)]
struct LexiconArgs {
    /// Thesaurus file (`word<TAB>syn1|syn2`); defaults to the bundled one.
    #[arg(long)]
    thesaurus: Option<PathBuf>,
    /// Stopword file (one per line); defaults to the bundled list.
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Label smoothing coefficient (softeda only).
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_OP_RATE)]
    op_rate: f64,
    #[arg(long, default_value_t = DEFAULT_AEDA_RATIO)]
    aeda_ratio: f64,
    #[arg(long, default_value_t = 1)]
    n_aug: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of classes; inferred from the largest label when omitted.
    #[arg(long)]
    n_classes: Option<usize>,
    #[command(flatten)]
    lexicon: LexiconArgs,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    /// Validation corpus; when omitted a fraction of --train is held out.
    #[arg(long)]
    val: Option<PathBuf>,
    #[arg(long)]
    n_classes: Option<usize>,
    /// Directory receiving model.ckpt, vocab.txt and history.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    val_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MIN_FREQ)]
    min_freq: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 5)]
    patience: usize,
    #[arg(long, default_value_t = 100)]
    max_epochs: usize,
    #[arg(long, default_value_t = crate::model::DEFAULT_LEARNING_RATE)]
    lr: f64,
    #[arg(long, default_value_t = crate::model::DEFAULT_WEIGHT_DECAY)]
    weight_decay: f64,
    #[arg(long, default_value_t = 100)]
    max_len: usize,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Directory written by `softaug train`.
    #[arg(long)]
    model_dir: PathBuf,
    #[arg(long)]
    test: PathBuf,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Parallel runs (overrides the config; 0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Augment(a) => cmd_augment(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Datasets { name } => {
            let rows = match name {
                Some(n) => vec![describe_dataset(&n)?],
                None => DATASETS.to_vec(),
            };
            println!("{:<6} {:<26} {:>9} {:>8} {:>7}", "name", "task", "n_classes", "n_train", "n_test");
            for d in rows {
                println!("{:<6} {:<26} {:>9} {:>8} {:>7}", d.name, d.task, d.n_classes, d.n_train, d.n_test);
            }
            Ok(())
        }
    }
}

/// Largest `label` field plus one (at least 2).
fn infer_classes(path: &std::path::Path) -> Result<usize> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut max = 1i64;
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::MalformedLine {
            line: i + 1,
            message: e.to_string(),
        })?;
        if let Some(l) = v.get("label").and_then(serde_json::Value::as_i64) {
            max = max.max(l);
        }
    }
    Ok(max as usize + 1)
}

fn cmd_augment(a: AugmentArgs) -> Result<()> {
    let n_classes = match a.n_classes {
        Some(n) => n,
        None => infer_classes(&a.input)?,
    };
    let corpus = load_jsonl(&a.input, n_classes)?;
    let thesaurus = a.lexicon.thesaurus.as_deref().map(load_thesaurus).transpose()?;
    let stopwords = a.lexicon.stopwords.as_deref().map(load_stopwords).transpose()?;
    let lex = Lexicon {
        thesaurus: thesaurus.as_ref().unwrap_or_else(|| Thesaurus::bundled()),
        stopwords: stopwords.as_ref().unwrap_or_else(|| StopwordSet::bundled()),
    };
    let policy = AugmentPolicy::new(a.method, a.op_rate, a.aeda_ratio, a.alpha, a.n_aug, a.seed)?;
    let out = augment_corpus(&corpus, &policy, lex)?;
    write_jsonl(&out.corpus, &a.output)?;
    eprintln!(
        "wrote {} examples ({} original, {} augmented, {} skipped) to {}",
        out.corpus.len(),
        corpus.len(),
        out.corpus.len() - corpus.len(),
        out.skipped,
        a.output.display()
    );
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let n_classes = match a.n_classes {
        Some(n) => n,
        None => infer_classes(&a.train)?,
    };
    let corpus = load_jsonl(&a.train, n_classes)?;
    let (train_corpus, val_corpus) = match &a.val {
        Some(p) => (corpus, load_jsonl(p, n_classes)?),
        None => split_validation(&corpus, a.val_fraction, a.seed)?,
    };
    let vocab = build_vocab(&train_corpus, a.min_freq);
    let config = ModelConfig {
        max_len: a.max_len,
        ..ModelConfig::new(vocab.len(), n_classes)
    };
    let model = Model::init(config, a.seed)?;
    let tcfg = TrainConfig {
        batch_size: a.batch_size,
        patience: a.patience,
        max_epochs: a.max_epochs,
        seed: a.seed,
        shuffle: true,
        optimizer: AdamWConfig {
            lr: a.lr,
            weight_decay: a.weight_decay,
            ..AdamWConfig::default()
        },
    };
    let (best, history) = train(model, &train_corpus, &val_corpus, &vocab, &tcfg)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    best.save(&a.out.join("model.ckpt"))?;
    vocab.save(&a.out.join("vocab.txt"))?;
    history.save_csv(&a.out.join("history.csv"))?;
    let val = evaluate(&best, &val_corpus, &vocab)?;
    eprintln!(
        "best epoch {} of {} ({:?}); model written to {}",
        history.best_epoch,
        history.epochs.len(),
        history.stop_reason,
        a.out.display()
    );
    println!("{}", serde_json::to_string(&val).expect("metrics serialize"));
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let model = Model::load(&a.model_dir.join("model.ckpt"))?;
    let vocab = Vocab::load(&a.model_dir.join("vocab.txt"))?;
    let corpus = load_jsonl(&a.test, model.config().n_classes)?;
    let metrics = evaluate(&model, &corpus, &vocab)?;
    println!("{}", serde_json::to_string(&metrics).expect("metrics serialize"));
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(j) = a.jobs {
        cfg.jobs = j;
    }
    let outcome = run_experiment(&cfg)?;
    eprintln!(
        "{} run(s) executed, {} resumed; reports in {}",
        outcome.executed,
        outcome.resumed,
        cfg.output_dir.display()
    );
    print!("{}", outcome.table.to_markdown());
    Ok(())
}
