//! Mini-batch training with early stopping, and evaluation metrics.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{encode_batch, Corpus, Vocab};
use crate::error::{Error, Result};
use crate::labels::argmax;
use crate::model::{soft_cross_entropy, AdamW, AdamWConfig, Gradients, Model};
use crate::rng::{Domain, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub optimizer: AdamWConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            patience: 5,
            max_epochs: 100,
            seed: 0,
            shuffle: true,
            optimizer: AdamWConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.patience == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch_size, patience and max_epochs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Patience,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stop_reason: StopReason,
}

impl RunHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,val_acc\n");
        for r in &self.epochs {
            writeln!(out, "{},{:.6},{:.6},{:.6}", r.epoch, r.train_loss, r.val_loss, r.val_acc).unwrap();
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Tracks the best validation loss; signals a stop after `patience`
/// consecutive epochs without strict improvement. Ties keep the earlier epoch.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    stale: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Improved,
    Stale,
    Stop,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            stale: 0,
        }
    }

    // a NaN loss never counts as an improvement
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> Verdict {
        match self.best {
            Some((_, best)) if !(val_loss < best) => {
                self.stale += 1;
                if self.stale >= self.patience {
                    Verdict::Stop
                } else {
                    Verdict::Stale
                }
            }
            _ => {
                self.best = Some((epoch, val_loss));
                self.stale = 0;
                Verdict::Improved
            }
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best.map(|(e, _)| e)
    }
}

fn check_width(model: &Model, corpus: &Corpus) -> Result<()> {
    let expected = model.config().n_classes;
    if corpus.n_classes != expected {
        return Err(Error::LabelWidth {
            expected,
            found: corpus.n_classes,
        });
    }
    if let Some(ex) = corpus.examples.iter().find(|e| e.label.n_classes() != expected) {
        return Err(Error::LabelWidth {
            expected,
            found: ex.label.n_classes(),
        });
    }
    Ok(())
}

/// Trains until validation loss stops improving for `patience` epochs (or
/// `max_epochs` is reached) and returns the best-validation-loss snapshot.
pub fn train(
    model: Model,
    train_corpus: &Corpus,
    val_corpus: &Corpus,
    vocab: &Vocab,
    cfg: &TrainConfig,
) -> Result<(Model, RunHistory)> {
    cfg.validate()?;
    check_width(&model, train_corpus)?;
    check_width(&model, val_corpus)?;
    if train_corpus.is_empty() || val_corpus.is_empty() {
        return Err(Error::CorpusTooSmall("training and validation corpora must be non-empty".into()));
    }
    if vocab.len() > model.config().vocab_size {
        return Err(Error::Config(format!(
            "vocabulary has {} entries but the model embeds only {}",
            vocab.len(),
            model.config().vocab_size
        )));
    }

    let max_len = model.config().max_len;
    let batch = encode_batch(vocab, &train_corpus.examples, max_len);
    let n = batch.ids.len();

    let mut model = model;
    let mut opt = AdamW::new(&model, cfg.optimizer);
    let mut grads = Gradients::zeros_like(&model);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = model.clone();
    let mut epochs = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=cfg.max_epochs {
        let mut order: Vec<usize> = (0..n).collect();
        if cfg.shuffle {
            StreamRng::keyed(cfg.seed, Domain::Shuffle, epoch as u64, 0).shuffle(&mut order);
        }
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            grads.fill_zero();
            let scale = 1.0 / chunk.len() as f64;
            for (k, &i) in chunk.iter().enumerate() {
                let pos = (b * cfg.batch_size + k) as u64;
                let mut rng = StreamRng::keyed(cfg.seed, Domain::Dropout, epoch as u64, pos);
                let cache = model.forward(&batch.ids[i], Some(&mut rng))?;
                loss_sum += soft_cross_entropy(&cache.logits, &batch.labels[i]);
                model.backward(&cache, &batch.labels[i], scale, &mut grads);
            }
            opt.step(&mut model, &grads);
        }

        let val = evaluate(&model, val_corpus, vocab)?;
        epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / n as f64,
            val_loss: val.loss,
            val_acc: val.accuracy,
        });
        match stopper.observe(epoch, val.loss) {
            Verdict::Improved => best = model.clone(),
            Verdict::Stale => {}
            Verdict::Stop => {
                stop_reason = StopReason::Patience;
                break;
            }
        }
    }

    let history = RunHistory {
        epochs,
        best_epoch: stopper.best_epoch().expect("at least one epoch ran"),
        stop_reason,
    };
    Ok((best, history))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
    pub loss: f64,
}

/// Accuracy and per-class/macro F1. A class with no true and no predicted
/// instances scores F1 = 0.
pub fn classification_metrics(truth: &[usize], predicted: &[usize], n_classes: usize) -> (f64, Vec<f64>, f64) {
    assert_eq!(truth.len(), predicted.len());
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    let mut correct = 0;
    for (&t, &p) in truth.iter().zip(predicted) {
        if t == p {
            tp[t] += 1;
            correct += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let per_class: Vec<f64> = (0..n_classes)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fn_[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .collect();
    let macro_f1 = per_class.iter().sum::<f64>() / n_classes as f64;
    let accuracy = if truth.is_empty() {
        0.0
    } else {
        correct as f64 / truth.len() as f64
    };
    (accuracy, per_class, macro_f1)
}

/// Eval-mode predictions scored against the argmax of each stored label.
pub fn evaluate(model: &Model, corpus: &Corpus, vocab: &Vocab) -> Result<Metrics> {
    if corpus.is_empty() {
        return Err(Error::CorpusTooSmall("cannot evaluate an empty corpus".into()));
    }
    check_width(model, corpus)?;
    let batch = encode_batch(vocab, &corpus.examples, model.config().max_len);
    let mut truth = Vec::with_capacity(batch.ids.len());
    let mut predicted = Vec::with_capacity(batch.ids.len());
    let mut loss = 0.0;
    for (row, label) in batch.ids.iter().zip(&batch.labels) {
        let logits = model.logits(row)?;
        loss += soft_cross_entropy(&logits, label);
        truth.push(argmax(label));
        predicted.push(argmax(&logits));
    }
    let (accuracy, per_class_f1, macro_f1) = classification_metrics(&truth, &predicted, corpus.n_classes);
    Ok(Metrics {
        accuracy,
        macro_f1,
        per_class_f1,
        loss: loss / batch.ids.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_vocab, Example};
    use crate::model::ModelConfig;
    use proptest::prelude::*;

    #[test]
    fn early_stopping_trace() {
        let losses = [1.0, 0.9, 0.91, 0.92, 0.93, 0.94, 0.95];
        let mut s = EarlyStopping::new(5);
        let verdicts: Vec<Verdict> = losses.iter().enumerate().map(|(i, &l)| s.observe(i + 1, l)).collect();
        assert_eq!(verdicts[6], Verdict::Stop);
        assert!(verdicts[..6].iter().all(|v| *v != Verdict::Stop));
        assert_eq!(s.best_epoch(), Some(2));
    }

    #[test]
    fn early_stopping_ties_keep_first() {
        let mut s = EarlyStopping::new(3);
        s.observe(1, 0.5);
        s.observe(2, 0.5);
        assert_eq!(s.best_epoch(), Some(1));
    }

    #[test]
    fn metrics_examples() {
        let (acc, f1, macro_f1) = classification_metrics(&[0, 1, 2], &[0, 1, 2], 3);
        assert_eq!((acc, macro_f1), (1.0, 1.0));
        assert_eq!(f1, vec![1.0; 3]);

        let (acc, f1, macro_f1) = classification_metrics(&[0, 0, 1, 1], &[0, 1, 1, 1], 2);
        assert_eq!(acc, 0.75);
        assert!((f1[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((f1[1] - 0.8).abs() < 1e-12);
        assert!((macro_f1 - 0.733333333333).abs() < 1e-9);

        let (_, f1, macro_f1) = classification_metrics(&[0, 0, 0], &[0, 0, 0], 2);
        assert_eq!(f1, vec![1.0, 0.0]);
        assert_eq!(macro_f1, 0.5);
    }

    proptest! {
        #[test]
        fn metrics_bounded_and_order_free(
            pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60),
            seed in any::<u64>(),
        ) {
            let (t, p): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
            let (acc, per, macro_f1) = classification_metrics(&t, &p, 4);
            prop_assert!((0.0..=1.0).contains(&acc) && (0.0..=1.0).contains(&macro_f1));
            prop_assert!((macro_f1 - per.iter().sum::<f64>() / 4.0).abs() < 1e-15);
            let mut shuffled = pairs.clone();
            StreamRng::new(seed).shuffle(&mut shuffled);
            let (t2, p2): (Vec<usize>, Vec<usize>) = shuffled.into_iter().unzip();
            prop_assert_eq!(classification_metrics(&t2, &p2, 4).0, acc);
        }
    }

    fn toy(n_classes: usize) -> Corpus {
        let words = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot"];
        let examples = (0..24)
            .map(|i| {
                let c = i % n_classes;
                Example::original(format!("{} {} x{}", words[c], words[c], i % 3), c, n_classes).unwrap()
            })
            .collect();
        Corpus::new("toy", n_classes, examples).unwrap()
    }

    #[test]
    fn single_epoch_and_width_check() {
        let corpus = toy(2);
        let vocab = build_vocab(&corpus, 1);
        let model = Model::init(ModelConfig { max_len: 8, ..ModelConfig::new(vocab.len(), 2) }, 0).unwrap();
        let cfg = TrainConfig { max_epochs: 1, ..TrainConfig::default() };
        let (_, hist) = train(model.clone(), &corpus, &corpus, &vocab, &cfg).unwrap();
        assert_eq!(hist.epochs.len(), 1);
        assert_eq!(hist.best_epoch, 1);
        assert_eq!(hist.stop_reason, StopReason::MaxEpochs);

        let six = toy(6);
        assert!(matches!(
            train(model, &six, &six, &vocab, &cfg),
            Err(Error::LabelWidth { expected: 2, found: 6 })
        ));
    }

    #[test]
    fn training_is_deterministic_and_keeps_best() {
        let corpus = toy(3);
        let vocab = build_vocab(&corpus, 1);
        let model = Model::init(ModelConfig { max_len: 8, ..ModelConfig::new(vocab.len(), 3) }, 4).unwrap();
        let cfg = TrainConfig {
            max_epochs: 12,
            patience: 2,
            batch_size: 5,
            seed: 3,
            optimizer: AdamWConfig { lr: 1e-2, ..AdamWConfig::default() },
            ..TrainConfig::default()
        };
        let (m1, h1) = train(model.clone(), &corpus, &corpus, &vocab, &cfg).unwrap();
        let (m2, h2) = train(model, &corpus, &corpus, &vocab, &cfg).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(m1, m2);
        let best_loss = evaluate(&m1, &corpus, &vocab).unwrap().loss;
        assert_eq!(best_loss, h1.epochs[h1.best_epoch - 1].val_loss);
        assert!(h1.epochs.iter().all(|r| best_loss <= r.val_loss));
        assert!(h1.to_csv().starts_with("epoch,train_loss,val_loss,val_acc\n"));
    }
}
