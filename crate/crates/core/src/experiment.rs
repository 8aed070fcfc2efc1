//! Method comparison sweep: for every (method, alpha, seed) split off a
//! validation set, augment the training split, train, and score on the test
//! set. Completed runs are cached on disk and skipped on rerun.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_corpus, AugmentPolicy, Lexicon, Method, DEFAULT_AEDA_RATIO, DEFAULT_N_AUG, DEFAULT_OP_RATE};
use crate::data::{build_vocab, load_jsonl, split_validation, Corpus, DEFAULT_MIN_FREQ};
use crate::error::{Error, Result};
use crate::lexicon::{load_stopwords, load_thesaurus, StopwordSet, Thesaurus};
use crate::model::{Model, ModelConfig};
use crate::report::{ReportTable, RunOutcome, RunRow};
use crate::train::{evaluate, train, StopReason, TrainConfig};

pub const DEFAULT_ALPHAS: [f64; 5] = [0.1, 0.15, 0.2, 0.25, 0.3];
pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
pub const DONE_MARKER: &str = "DONE";
pub const RESULT_FILE: &str = "result.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    pub op_rate: f64,
    pub aeda_ratio: f64,
    pub n_aug: usize,
    pub thesaurus: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
}

impl Default for AugmentSection {
    fn default() -> Self {
        Self {
            op_rate: DEFAULT_OP_RATE,
            aeda_ratio: DEFAULT_AEDA_RATIO,
            n_aug: DEFAULT_N_AUG,
            thesaurus: None,
            stopwords: None,
        }
    }
}

/// Architecture knobs; vocabulary size and class count come from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub embed_dim: usize,
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    pub dropout_p: f64,
    pub classifier_hidden: usize,
    pub max_len: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let d = ModelConfig::default();
        Self {
            embed_dim: d.embed_dim,
            filter_widths: d.filter_widths,
            filters_per_width: d.filters_per_width,
            dropout_p: d.dropout_p,
            classifier_hidden: d.classifier_hidden,
            max_len: d.max_len,
        }
    }
}

impl ModelSection {
    pub fn to_config(&self, vocab_size: usize, n_classes: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            n_classes,
            embed_dim: self.embed_dim,
            filter_widths: self.filter_widths.clone(),
            filters_per_width: self.filters_per_width,
            dropout_p: self.dropout_p,
            classifier_hidden: self.classifier_hidden,
            max_len: self.max_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub train: PathBuf,
    pub test: PathBuf,
    pub n_classes: usize,
    pub output_dir: PathBuf,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
    #[serde(default = "default_min_freq")]
    pub min_freq: usize,
    /// Parallel runs; 0 means one per available core.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default)]
    pub augment: AugmentSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default, rename = "training")]
    pub train_config: TrainConfig,
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_alphas() -> Vec<f64> {
    DEFAULT_ALPHAS.to_vec()
}
fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.to_vec()
}
fn default_val_fraction() -> f64 {
    0.2
}
fn default_min_freq() -> usize {
    DEFAULT_MIN_FREQ
}

impl ExperimentConfig {
    /// Parses a TOML config; relative paths are resolved against `base_dir`.
    pub fn from_toml(body: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(body).map_err(|e| Error::Config(e.to_string()))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        resolve(&mut cfg.train);
        resolve(&mut cfg.test);
        resolve(&mut cfg.output_dir);
        if let Some(p) = cfg.augment.thesaurus.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.augment.stopwords.as_mut() {
            resolve(p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&body, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.methods.contains(&Method::SoftEda) && self.alphas.is_empty() {
            return Err(Error::Config("softeda selected with an empty alpha grid".into()));
        }
        let unique: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if unique.len() != self.seeds.len() {
            return Err(Error::Config("duplicate seeds".into()));
        }
        for &a in &self.alphas {
            crate::labels::SmoothingAlpha::new(a)?;
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::Config("val_fraction must lie in (0, 1)".into()));
        }
        self.model.to_config(2, self.n_classes).validate()?;
        self.train_config.validate()?;
        AugmentPolicy::new(Method::Eda, self.augment.op_rate, self.augment.aeda_ratio, 0.0, self.augment.n_aug, 0)?;
        Ok(())
    }

    /// Every run in canonical order: methods in `none, eda, aeda, softeda`
    /// order, softEDA expanded over the alpha grid, seeds innermost.
    pub fn runs(&self) -> Vec<RunKey> {
        let methods: BTreeSet<Method> = self.methods.iter().copied().collect();
        let mut alphas = self.alphas.clone();
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        let mut out = Vec::new();
        for method in methods {
            let grid: Vec<Option<f64>> = if method == Method::SoftEda {
                alphas.iter().map(|&a| Some(a)).collect()
            } else {
                vec![None]
            };
            for alpha in grid {
                for &seed in &self.seeds {
                    out.push(RunKey { method, alpha, seed });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunKey {
    pub method: Method,
    pub alpha: Option<f64>,
    pub seed: u64,
}

impl RunKey {
    /// `<method>/<alpha or "na">/<seed>` under the output directory.
    pub fn dir(&self, output_dir: &Path) -> PathBuf {
        let alpha = self.alpha.map(|a| format!("{a}")).unwrap_or_else(|| "na".into());
        output_dir.join(self.method.as_str()).join(alpha).join(self.seed.to_string())
    }
}

/// Everything recorded about one finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: Method,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
    pub test_loss: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub stop_reason: StopReason,
    pub n_train: usize,
    pub n_skipped: usize,
    pub vocab_size: usize,
    pub val_digest: String,
    pub test_digest: String,
}

/// Inputs shared by every run of a sweep.
pub struct SweepInputs<'a> {
    pub config: &'a ExperimentConfig,
    pub train: &'a Corpus,
    pub test: &'a Corpus,
    pub lexicon: Lexicon<'a>,
}

pub fn run_single(inputs: &SweepInputs<'_>, key: RunKey) -> Result<RunResult> {
    let cfg = inputs.config;
    let (train_split, val) = split_validation(inputs.train, cfg.val_fraction, key.seed)?;
    let val_digest = val.digest();
    let test_digest = inputs.test.digest();

    let policy = AugmentPolicy::new(
        key.method,
        cfg.augment.op_rate,
        cfg.augment.aeda_ratio,
        key.alpha.unwrap_or(0.0),
        cfg.augment.n_aug,
        key.seed,
    )?;
    let augmented = augment_corpus(&train_split, &policy, inputs.lexicon)?;
    let vocab = build_vocab(&augmented.corpus, cfg.min_freq);
    let model = Model::init(cfg.model.to_config(vocab.len(), cfg.n_classes), key.seed)?;
    let tcfg = TrainConfig {
        seed: key.seed,
        ..cfg.train_config.clone()
    };
    let (best, history) = train(model, &augmented.corpus, &val, &vocab, &tcfg)?;
    let metrics = evaluate(&best, inputs.test, &vocab)?;

    if val.digest() != val_digest || inputs.test.digest() != test_digest {
        return Err(Error::Config("evaluation corpora changed during the run".into()));
    }

    let dir = key.dir(&cfg.output_dir);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    best.save(&dir.join("model.ckpt"))?;
    vocab.save(&dir.join("vocab.txt"))?;
    history.save_csv(&dir.join("history.csv"))?;

    let result = RunResult {
        method: key.method,
        alpha: key.alpha,
        seed: key.seed,
        accuracy: metrics.accuracy,
        macro_f1: metrics.macro_f1,
        per_class_f1: metrics.per_class_f1,
        test_loss: metrics.loss,
        best_epoch: history.best_epoch,
        epochs_run: history.epochs.len(),
        stop_reason: history.stop_reason,
        n_train: augmented.corpus.len(),
        n_skipped: augmented.skipped,
        vocab_size: vocab.len(),
        val_digest,
        test_digest,
    };
    let result_path = dir.join(RESULT_FILE);
    let json = serde_json::to_string_pretty(&result).expect("result serializes");
    std::fs::write(&result_path, json).map_err(|e| Error::io(&result_path, e))?;
    let marker = dir.join(DONE_MARKER);
    std::fs::write(&marker, "").map_err(|e| Error::io(&marker, e))?;
    Ok(result)
}

/// Loads a finished run, if its completion marker and result are present.
pub fn load_completed(output_dir: &Path, key: RunKey) -> Option<RunResult> {
    let dir = key.dir(output_dir);
    if !dir.join(DONE_MARKER).is_file() {
        return None;
    }
    let body = std::fs::read_to_string(dir.join(RESULT_FILE)).ok()?;
    serde_json::from_str(&body).ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusDigests {
    pub train_before: String,
    pub train_after: String,
    pub test_before: String,
    pub test_after: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub table: ReportTable,
    pub executed: usize,
    pub resumed: usize,
    pub digests: CorpusDigests,
}

pub const DESK_SCALE_NOTE: &str = "Desk-scale CNN (embedding 32, filters 3/4/5 x 16, hidden 64) trained from scratch with a word-level tokenizer.";

/// Runs (or resumes) the whole sweep and writes `results.csv`,
/// `summary.csv`, `report.md` and `digests.json` into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let train_corpus = load_jsonl(&cfg.train, cfg.n_classes)?;
    let test_corpus = load_jsonl(&cfg.test, cfg.n_classes)?;
    let train_before = train_corpus.digest();
    let test_before = test_corpus.digest();

    let thesaurus = match &cfg.augment.thesaurus {
        Some(p) => Some(load_thesaurus(p)?),
        None => None,
    };
    let stopwords = match &cfg.augment.stopwords {
        Some(p) => Some(load_stopwords(p)?),
        None => None,
    };
    let lexicon = Lexicon {
        thesaurus: thesaurus.as_ref().unwrap_or_else(|| Thesaurus::bundled()),
        stopwords: stopwords.as_ref().unwrap_or_else(|| StopwordSet::bundled()),
    };
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;

    let inputs = SweepInputs {
        config: cfg,
        train: &train_corpus,
        test: &test_corpus,
        lexicon,
    };
    let keys = cfg.runs();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let outcomes: Vec<(RunKey, bool, std::result::Result<RunResult, String>)> = pool.install(|| {
        keys.par_iter()
            .map(|&key| match load_completed(&cfg.output_dir, key) {
                Some(done) => (key, true, Ok(done)),
                None => (key, false, run_single(&inputs, key).map_err(|e| e.to_string())),
            })
            .collect()
    });

    let resumed = outcomes.iter().filter(|(_, cached, _)| *cached).count();
    let rows = outcomes
        .into_iter()
        .map(|(key, _, res)| RunRow {
            method: key.method,
            alpha: key.alpha,
            seed: key.seed,
            outcome: match res {
                Ok(r) => RunOutcome::Ok(r.into()),
                Err(e) => RunOutcome::Failed(e),
            },
        })
        .collect();

    let table = ReportTable::new(cfg.name.clone(), cfg.seeds.clone(), rows, DESK_SCALE_NOTE);
    let digests = CorpusDigests {
        train_before,
        train_after: load_jsonl(&cfg.train, cfg.n_classes)?.digest(),
        test_before,
        test_after: load_jsonl(&cfg.test, cfg.n_classes)?.digest(),
    };
    let out = &cfg.output_dir;
    let write = |name: &str, body: String| {
        let p = out.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(&p, e))
    };
    write("results.csv", table.to_csv())?;
    write("summary.csv", table.summary_csv())?;
    write("report.md", table.to_markdown())?;
    write("digests.json", serde_json::to_string_pretty(&digests).expect("digests serialize"))?;

    Ok(ExperimentOutcome {
        table,
        executed: keys.len() - resumed,
        resumed,
        digests,
    })
}
