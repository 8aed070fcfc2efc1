//! A small text CNN trained from scratch.
//!
//! Architecture: token embedding, one bank of convolution filters per width,
//! max-over-time pooling, concatenation, dropout, a hidden linear layer with
//! exact (erf) GELU, and an output linear layer producing logits. Training
//! uses soft-target cross-entropy, hand-written backpropagation and AdamW.
//!
//! Convolution windows made up solely of padding are excluded from pooling;
//! an all-padding row pools the first window, whose value is the filter bias
//! because the padding embedding is pinned at zero.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::PAD_ID;
use crate::error::{Error, Result};
use crate::rng::{Domain, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    pub n_classes: usize,
    pub dropout_p: f64,
    pub classifier_hidden: usize,
    pub max_len: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            vocab_size: 2,
            embed_dim: 32,
            filter_widths: vec![3, 4, 5],
            filters_per_width: 16,
            n_classes: 2,
            dropout_p: 0.2,
            classifier_hidden: 64,
            max_len: 100,
        }
    }
}

impl ModelConfig {
    pub fn new(vocab_size: usize, n_classes: usize) -> Self {
        Self {
            vocab_size,
            n_classes,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vocab_size", self.vocab_size),
            ("embed_dim", self.embed_dim),
            ("filters_per_width", self.filters_per_width),
            ("classifier_hidden", self.classifier_hidden),
            ("max_len", self.max_len),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.n_classes < 2 {
            return Err(Error::Config("n_classes must be >= 2".into()));
        }
        if self.filter_widths.is_empty() || self.filter_widths.contains(&0) {
            return Err(Error::Config("filter_widths must be non-empty and positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Config(format!("dropout_p {} outside [0, 1)", self.dropout_p)));
        }
        let widest = *self.filter_widths.iter().max().unwrap();
        if self.max_len < widest {
            return Err(Error::Config(format!(
                "max_len {} shorter than widest filter {widest}",
                self.max_len
            )));
        }
        Ok(())
    }

    pub fn pooled_dim(&self) -> usize {
        self.filter_widths.len() * self.filters_per_width
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Conv {
    width: usize,
    /// filters x (width * embed_dim), row-major
    weight: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct Linear {
    inputs: usize,
    outputs: usize,
    /// outputs x inputs, row-major
    weight: Vec<f64>,
    bias: Vec<f64>,
}

impl Linear {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weight
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }
}

/// Glorot-uniform bound `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

fn uniform(n: usize, bound: f64, rng: &mut StreamRng) -> Vec<f64> {
    (0..n).map(|_| (2.0 * rng.unit() - 1.0) * bound).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    embedding: Vec<f64>,
    convs: Vec<Conv>,
    hidden: Linear,
    output: Linear,
}

/// Activations recorded by [`Model::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    ids: Vec<u32>,
    /// per conv, per filter: window start chosen by the max-pool
    winners: Vec<Vec<usize>>,
    /// per pooled unit: 0 (dropped) or 1/(1-p); `None` in eval mode
    mask: Option<Vec<f64>>,
    features: Vec<f64>,
    pre_activation: Vec<f64>,
    activation: Vec<f64>,
    pub logits: Vec<f64>,
}

/// Gradients laid out like [`Model::tensors`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &Model) -> Self {
        Self {
            tensors: model.tensors().iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.tensors.iter_mut().flatten().for_each(|g| *g *= factor);
    }

    pub fn fill_zero(&mut self) {
        self.tensors.iter_mut().flatten().for_each(|g| *g = 0.0);
    }
}

impl Model {
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let e = config.embed_dim;
        let f = config.filters_per_width;
        let mut layer = 0u64;
        let mut next_rng = || {
            layer += 1;
            StreamRng::keyed(seed, Domain::Init, layer, 0)
        };

        // each embedding row is a 1 -> embed_dim lookup
        let mut embedding = uniform(config.vocab_size * e, glorot_bound(1, e), &mut next_rng());
        embedding[..e].fill(0.0);

        let convs = config
            .filter_widths
            .iter()
            .map(|&w| Conv {
                width: w,
                weight: uniform(f * w * e, glorot_bound(w * e, f), &mut next_rng()),
                bias: vec![0.0; f],
            })
            .collect();

        let pooled = config.pooled_dim();
        let h = config.classifier_hidden;
        let hidden = Linear {
            inputs: pooled,
            outputs: h,
            weight: uniform(h * pooled, glorot_bound(pooled, h), &mut next_rng()),
            bias: vec![0.0; h],
        };
        let c = config.n_classes;
        let output = Linear {
            inputs: h,
            outputs: c,
            weight: uniform(c * h, glorot_bound(h, c), &mut next_rng()),
            bias: vec![0.0; c],
        };
        Ok(Self {
            config,
            embedding,
            convs,
            hidden,
            output,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Parameter tensors in a fixed order: embedding, then weight and bias of
    /// each convolution width, hidden layer, output layer.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.embedding];
        for c in &self.convs {
            out.push(&c.weight);
            out.push(&c.bias);
        }
        out.extend([
            &self.hidden.weight[..],
            &self.hidden.bias,
            &self.output.weight,
            &self.output.bias,
        ]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![&mut self.embedding];
        for c in &mut self.convs {
            out.push(&mut c.weight);
            out.push(&mut c.bias);
        }
        out.extend([
            &mut self.hidden.weight[..],
            &mut self.hidden.bias,
            &mut self.output.weight,
            &mut self.output.bias,
        ]);
        out
    }

    /// Names and shapes matching [`Model::tensors`].
    pub fn tensor_specs(&self) -> Vec<(String, usize, usize)> {
        let cfg = &self.config;
        let mut out = vec![("embedding".to_string(), cfg.vocab_size, cfg.embed_dim)];
        for c in &self.convs {
            out.push((format!("conv{}.weight", c.width), cfg.filters_per_width, c.width * cfg.embed_dim));
            out.push((format!("conv{}.bias", c.width), 1, cfg.filters_per_width));
        }
        out.push(("hidden.weight".into(), self.hidden.outputs, self.hidden.inputs));
        out.push(("hidden.bias".into(), 1, self.hidden.outputs));
        out.push(("output.weight".into(), self.output.outputs, self.output.inputs));
        out.push(("output.bias".into(), 1, self.output.outputs));
        out
    }

    /// Leading entries of tensor `index` that are frozen (the padding row).
    pub fn frozen_prefix(&self, index: usize) -> usize {
        if index == 0 {
            self.config.embed_dim
        } else {
            0
        }
    }

    pub fn padding_row(&self) -> &[f64] {
        &self.embedding[..self.config.embed_dim]
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// Runs the network on one padded row. Passing a dropout stream enables
    /// training mode (inverted dropout); `None` is deterministic eval mode.
    pub fn forward(&self, ids: &[u32], dropout: Option<&mut StreamRng>) -> Result<Cache> {
        let cfg = &self.config;
        if ids.len() != cfg.max_len {
            return Err(Error::Config(format!(
                "row length {} does not match max_len {}",
                ids.len(),
                cfg.max_len
            )));
        }
        if let Some(&id) = ids.iter().find(|&&id| id as usize >= cfg.vocab_size) {
            return Err(Error::TokenOutOfRange {
                id: id as usize,
                vocab_size: cfg.vocab_size,
            });
        }
        let e = cfg.embed_dim;
        let n_filters = cfg.filters_per_width;

        let mut features = Vec::with_capacity(cfg.pooled_dim());
        let mut winners = Vec::with_capacity(self.convs.len());
        for conv in &self.convs {
            let w = conv.width;
            let starts = ids.len() - w + 1;
            let live: Vec<usize> = (0..starts)
                .filter(|&t| ids[t..t + w].iter().any(|&id| id != PAD_ID))
                .collect();
            let candidates = if live.is_empty() { vec![0] } else { live };

            let mut best = vec![f64::NEG_INFINITY; n_filters];
            let mut best_t = vec![0usize; n_filters];
            for &t in &candidates {
                for (f, row) in conv.weight.chunks_exact(w * e).enumerate() {
                    let mut s = conv.bias[f];
                    for k in 0..w {
                        let id = ids[t + k];
                        if id == PAD_ID {
                            continue;
                        }
                        let emb = &self.embedding[id as usize * e..(id as usize + 1) * e];
                        s += row[k * e..(k + 1) * e].iter().zip(emb).map(|(a, b)| a * b).sum::<f64>();
                    }
                    if s > best[f] {
                        best[f] = s;
                        best_t[f] = t;
                    }
                }
            }
            features.extend(best);
            winners.push(best_t);
        }

        let mask = dropout.map(|rng| {
            let keep = 1.0 - cfg.dropout_p;
            (0..features.len())
                .map(|_| if rng.bernoulli(cfg.dropout_p) { 0.0 } else { 1.0 / keep })
                .collect::<Vec<f64>>()
        });
        let dropped: Vec<f64> = match &mask {
            Some(m) => features.iter().zip(m).map(|(x, m)| x * m).collect(),
            None => features.clone(),
        };

        let pre_activation = self.hidden.apply(&dropped);
        let activation: Vec<f64> = pre_activation.iter().map(|&x| gelu(x)).collect();
        let logits = self.output.apply(&activation);
        Ok(Cache {
            ids: ids.to_vec(),
            winners,
            mask,
            features: dropped,
            pre_activation,
            activation,
            logits,
        })
    }

    pub fn logits(&self, ids: &[u32]) -> Result<Vec<f64>> {
        Ok(self.forward(ids, None)?.logits)
    }

    /// Adds the gradient of `soft_cross_entropy(cache.logits, target)`, times
    /// `scale`, into `grads`.
    pub fn backward(&self, cache: &Cache, target: &[f64], scale: f64, grads: &mut Gradients) {
        let cfg = &self.config;
        let e = cfg.embed_dim;
        let probs = softmax(&cache.logits);
        let d_logits: Vec<f64> = probs.iter().zip(target).map(|(p, t)| scale * (p - t)).collect();

        let n_conv = self.convs.len();
        let (g_emb, rest) = grads.tensors.split_first_mut().expect("embedding gradient");
        let (g_conv, g_head) = rest.split_at_mut(2 * n_conv);
        let [g_hw, g_hb, g_ow, g_ob] = g_head else {
            panic!("gradient layout does not match model");
        };

        // output layer
        let mut d_act = vec![0.0; self.output.inputs];
        for (o, &d) in d_logits.iter().enumerate() {
            g_ob[o] += d;
            let row = &self.output.weight[o * self.output.inputs..(o + 1) * self.output.inputs];
            let g_row = &mut g_ow[o * self.output.inputs..(o + 1) * self.output.inputs];
            for j in 0..self.output.inputs {
                g_row[j] += d * cache.activation[j];
                d_act[j] += d * row[j];
            }
        }

        // GELU and hidden layer
        let d_pre: Vec<f64> = d_act
            .iter()
            .zip(&cache.pre_activation)
            .map(|(d, &x)| d * gelu_derivative(x))
            .collect();
        let mut d_feat = vec![0.0; self.hidden.inputs];
        for (o, &d) in d_pre.iter().enumerate() {
            g_hb[o] += d;
            let row = &self.hidden.weight[o * self.hidden.inputs..(o + 1) * self.hidden.inputs];
            let g_row = &mut g_hw[o * self.hidden.inputs..(o + 1) * self.hidden.inputs];
            for j in 0..self.hidden.inputs {
                g_row[j] += d * cache.features[j];
                d_feat[j] += d * row[j];
            }
        }
        if let Some(mask) = &cache.mask {
            d_feat.iter_mut().zip(mask).for_each(|(d, m)| *d *= m);
        }

        // max-pool routes each filter's gradient to its winning window
        for (ci, conv) in self.convs.iter().enumerate() {
            let w = conv.width;
            let (g_w, g_b) = g_conv[2 * ci..2 * ci + 2].split_at_mut(1);
            let (g_w, g_b) = (&mut g_w[0], &mut g_b[0]);
            for f in 0..cfg.filters_per_width {
                let d = d_feat[ci * cfg.filters_per_width + f];
                if d == 0.0 {
                    continue;
                }
                g_b[f] += d;
                let t = cache.winners[ci][f];
                let row = &conv.weight[f * w * e..(f + 1) * w * e];
                let g_row = &mut g_w[f * w * e..(f + 1) * w * e];
                for k in 0..w {
                    let id = cache.ids[t + k] as usize;
                    if id == PAD_ID as usize {
                        continue;
                    }
                    for j in 0..e {
                        g_row[k * e + j] += d * self.embedding[id * e + j];
                        g_emb[id * e + j] += d * row[k * e + j];
                    }
                }
            }
        }
    }

    /// Writes the text checkpoint described in the crate README.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("softaug-checkpoint 1\n");
        let cfg = serde_json::to_string(&self.config).expect("config serializes");
        writeln!(out, "config {cfg}").unwrap();
        for ((name, rows, cols), values) in self.tensor_specs().into_iter().zip(self.tensors()) {
            writeln!(out, "tensor {name} {rows} {cols}").unwrap();
            for row in values.chunks(cols) {
                let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
                writeln!(out, "{}", line.join(" ")).unwrap();
            }
        }
        out.push_str("end\n");
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_checkpoint(&body)
    }

    fn parse_checkpoint(body: &str) -> Result<Self> {
        let bad = |m: String| Error::Checkpoint(m);
        let mut lines = body.lines();
        if lines.next() != Some("softaug-checkpoint 1") {
            return Err(bad("missing or unsupported header".into()));
        }
        let cfg_line = lines.next().and_then(|l| l.strip_prefix("config ")).ok_or_else(|| bad("missing config line".into()))?;
        let config: ModelConfig = serde_json::from_str(cfg_line).map_err(|e| bad(e.to_string()))?;
        let mut model = Model::init(config, 0)?;
        let specs = model.tensor_specs();
        for ((name, rows, cols), tensor) in specs.into_iter().zip(model.tensors_mut()) {
            let header = lines.next().ok_or_else(|| bad(format!("missing tensor {name}")))?;
            if header != format!("tensor {name} {rows} {cols}") {
                return Err(bad(format!("expected tensor {name} {rows} {cols}, found {header:?}")));
            }
            for r in 0..rows {
                let line = lines.next().ok_or_else(|| bad(format!("{name}: missing row {r}")))?;
                let values: Vec<f64> = line
                    .split_whitespace()
                    .map(|v| v.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| bad(format!("{name} row {r}: {e}")))?;
                if values.len() != cols {
                    return Err(bad(format!("{name} row {r}: {} values, expected {cols}", values.len())));
                }
                tensor[r * cols..(r + 1) * cols].copy_from_slice(&values);
            }
        }
        if lines.next() != Some("end") {
            return Err(bad("missing end marker".into()));
        }
        Ok(model)
    }
}

/// Standard normal CDF via `erf`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

/// Exact GELU, `x * Phi(x)`.
pub fn gelu(x: f64) -> f64 {
    x * normal_cdf(x)
}

pub fn gelu_derivative(x: f64) -> f64 {
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    normal_cdf(x) + x * pdf
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|x| x / z).collect()
}

/// `-sum_i target_i * log_softmax(logits)_i` with max subtraction.
pub fn soft_cross_entropy(logits: &[f64], target: &[f64]) -> f64 {
    assert_eq!(logits.len(), target.len(), "logit/target width mismatch");
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    target
        .iter()
        .zip(logits)
        .filter(|(t, _)| **t != 0.0)
        .map(|(t, l)| t * (log_z - l))
        .sum()
}

pub const DEFAULT_LEARNING_RATE: f64 = 1e-4;
pub const DEFAULT_WEIGHT_DECAY: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamWConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: DEFAULT_LEARNING_RATE,
            weight_decay: DEFAULT_WEIGHT_DECAY,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// AdamW optimizer state: per-parameter moment estimates and the step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW {
    pub config: AdamWConfig,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamW {
    pub fn new(model: &Model, config: AdamWConfig) -> Self {
        let zeros: Vec<Vec<f64>> = model.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Self {
            config,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// One update. Weight decay is decoupled from the adaptive step:
    /// `p -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)`, both terms using the
    /// pre-update parameter. The padding embedding row is never touched.
    pub fn step(&mut self, model: &mut Model, grads: &Gradients) {
        self.step += 1;
        let AdamWConfig {
            lr,
            weight_decay,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let frozen: Vec<usize> = (0..grads.tensors.len()).map(|i| model.frozen_prefix(i)).collect();
        for (i, params) in model.tensors_mut().into_iter().enumerate() {
            let (g, m, v) = (&grads.tensors[i], &mut self.m[i], &mut self.v[i]);
            for j in frozen[i]..params.len() {
                m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                let p = params[j];
                params[j] = p - lr * (m_hat / (v_hat.sqrt() + eps) + weight_decay * p);
            }
        }
    }
}
