//! EDA operations, AEDA punctuation insertion and the softEDA procedure.
//!
//! All operations work on token lists and draw randomness only from the
//! [`StreamRng`] they are handed.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{tokenize_keep_marks, Corpus, Example, Origin};
use crate::error::{Error, Result};
use crate::labels::{smooth, SmoothingAlpha};
use crate::lexicon::{StopwordSet, Thesaurus};
use crate::rng::{Domain, StreamRng};

/// The AEDA insertion set.
pub const PUNCTUATION_MARKS: [char; 6] = ['.', ';', '?', ':', '!', ','];

pub const DEFAULT_OP_RATE: f64 = 0.1;
pub const DEFAULT_AEDA_RATIO: f64 = 1.0 / 3.0;
pub const DEFAULT_N_AUG: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    None,
    Eda,
    Aeda,
    SoftEda,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::None, Method::Eda, Method::Aeda, Method::SoftEda];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Eda => "eda",
            Method::Aeda => "aeda",
            Method::SoftEda => "softeda",
        }
    }

    /// Display name used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::None => "w/o Aug",
            Method::Eda => "EDA",
            Method::Aeda => "AEDA",
            Method::SoftEda => "softEDA",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}; expected none, eda, aeda or softeda")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentPolicy {
    pub method: Method,
    pub op_rate: f64,
    pub aeda_ratio: f64,
    pub alpha: SmoothingAlpha,
    pub n_aug: usize,
    pub seed: u64,
}

impl AugmentPolicy {
    pub fn new(
        method: Method,
        op_rate: f64,
        aeda_ratio: f64,
        alpha: f64,
        n_aug: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&op_rate) {
            return Err(Error::Config(format!("op_rate {op_rate} outside [0, 1]")));
        }
        if !(aeda_ratio > 0.0 && aeda_ratio <= 1.0) {
            return Err(Error::Config(format!("aeda_ratio {aeda_ratio} outside (0, 1]")));
        }
        if n_aug == 0 {
            return Err(Error::Config("n_aug must be positive".into()));
        }
        if method != Method::SoftEda && alpha != 0.0 {
            return Err(Error::Config(format!(
                "alpha applies only to softeda (got alpha = {alpha} for {method})"
            )));
        }
        Ok(Self {
            method,
            op_rate,
            aeda_ratio,
            alpha: SmoothingAlpha::new(alpha)?,
            n_aug,
            seed,
        })
    }

    /// Default knobs for `method`; `alpha` is ignored unless the method is softEDA.
    pub fn with_defaults(method: Method, alpha: f64, seed: u64) -> Result<Self> {
        let alpha = if method == Method::SoftEda { alpha } else { 0.0 };
        Self::new(method, DEFAULT_OP_RATE, DEFAULT_AEDA_RATIO, alpha, DEFAULT_N_AUG, seed)
    }
}

/// Thesaurus and stopwords used by the synonym-based operations.
#[derive(Debug, Clone, Copy)]
pub struct Lexicon<'a> {
    pub thesaurus: &'a Thesaurus,
    pub stopwords: &'a StopwordSet,
}

impl Lexicon<'static> {
    pub fn bundled() -> Self {
        Self {
            thesaurus: Thesaurus::bundled(),
            stopwords: StopwordSet::bundled(),
        }
    }
}

impl Lexicon<'_> {
    fn eligible(&self, token: &str) -> bool {
        !self.stopwords.contains(token) && self.thesaurus.has_synonyms(token)
    }
}

/// Replaces up to `n` distinct eligible positions (non-stopword, at least one
/// synonym) with a uniformly drawn synonym.
pub fn synonym_replacement(tokens: &[String], n: usize, lex: Lexicon<'_>, rng: &mut StreamRng) -> Vec<String> {
    let mut out = tokens.to_vec();
    let mut positions: Vec<usize> = (0..tokens.len()).filter(|&i| lex.eligible(&tokens[i])).collect();
    rng.shuffle(&mut positions);
    for &i in positions.iter().take(n) {
        let syns = lex.thesaurus.synonyms(&tokens[i]);
        out[i] = syns[rng.below(syns.len())].clone();
    }
    out
}

/// `n` rounds of: pick an eligible token, pick one of its synonyms, insert it
/// at a uniformly random gap. Stops early when nothing is eligible.
pub fn random_insertion(tokens: &[String], n: usize, lex: Lexicon<'_>, rng: &mut StreamRng) -> Vec<String> {
    let mut out = tokens.to_vec();
    for _ in 0..n {
        let sources: Vec<usize> = (0..out.len()).filter(|&i| lex.eligible(&out[i])).collect();
        let Some(&src) = rng.choose(&sources) else {
            break;
        };
        let syns = lex.thesaurus.synonyms(&out[src]);
        let syn = syns[rng.below(syns.len())].clone();
        let gap = rng.below(out.len() + 1);
        out.insert(gap, syn);
    }
    out
}

/// `n` swaps of two distinct uniformly drawn positions.
pub fn random_swap(tokens: &[String], n: usize, rng: &mut StreamRng) -> Vec<String> {
    let mut out = tokens.to_vec();
    let len = out.len();
    if len < 2 {
        return out;
    }
    for _ in 0..n {
        let i = rng.below(len);
        let mut j = rng.below(len - 1);
        if j >= i {
            j += 1;
        }
        out.swap(i, j);
    }
    out
}

/// Drops each token with probability `p`. If nothing survives, one uniformly
/// chosen original token is returned.
pub fn random_deletion(tokens: &[String], p: f64, rng: &mut StreamRng) -> Vec<String> {
    if tokens.is_empty() {
        return Vec::new();
    }
    let kept: Vec<String> = tokens.iter().filter(|_| !rng.bernoulli(p)).cloned().collect();
    if kept.is_empty() {
        vec![tokens[rng.below(tokens.len())].clone()]
    } else {
        kept
    }
}

/// Inserts `k ~ U[1, max(1, floor(ratio * len))]` punctuation marks, each a
/// uniform draw from [`PUNCTUATION_MARKS`] placed at a uniform gap.
pub fn aeda_insert(tokens: &[String], ratio: f64, rng: &mut StreamRng) -> Result<Vec<String>> {
    if tokens.is_empty() {
        return Err(Error::EmptyInput("aeda_insert needs at least one token".into()));
    }
    let upper = ((ratio * tokens.len() as f64 + 1e-9).floor() as usize).max(1);
    let k = rng.between(1, upper);
    let mut out = tokens.to_vec();
    for _ in 0..k {
        let mark = PUNCTUATION_MARKS[rng.below(PUNCTUATION_MARKS.len())];
        let gap = rng.below(out.len() + 1);
        out.insert(gap, mark.to_string());
    }
    Ok(out)
}

/// Number of positions an EDA operation touches: `max(1, round(rate * len))`.
pub fn op_count(op_rate: f64, len: usize) -> usize {
    ((op_rate * len as f64).round() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdaOp {
    SynonymReplacement,
    RandomInsertion,
    RandomSwap,
    RandomDeletion,
}

impl EdaOp {
    pub const ALL: [EdaOp; 4] = [
        EdaOp::SynonymReplacement,
        EdaOp::RandomInsertion,
        EdaOp::RandomSwap,
        EdaOp::RandomDeletion,
    ];
}

/// Applies a single EDA sub-operation chosen uniformly at random.
pub fn eda_once(tokens: &[String], op_rate: f64, lex: Lexicon<'_>, rng: &mut StreamRng) -> Vec<String> {
    let n = op_count(op_rate, tokens.len());
    match EdaOp::ALL[rng.below(EdaOp::ALL.len())] {
        EdaOp::SynonymReplacement => synonym_replacement(tokens, n, lex, rng),
        EdaOp::RandomInsertion => random_insertion(tokens, n, lex, rng),
        EdaOp::RandomSwap => random_swap(tokens, n, rng),
        EdaOp::RandomDeletion => random_deletion(tokens, op_rate, rng),
    }
}

/// Produces one augmented copy of `example`. Returns `Ok(None)` when the text
/// has no tokens, which callers count and drop.
pub fn augment_example(
    example: &Example,
    policy: &AugmentPolicy,
    lex: Lexicon<'_>,
    rng: &mut StreamRng,
) -> Result<Option<Example>> {
    if example.origin != Origin::Original {
        return Err(Error::Config("only original examples can be augmented".into()));
    }
    let tokens = tokenize_keep_marks(&example.text);
    if tokens.is_empty() {
        return Ok(None);
    }
    let (tokens, label) = match policy.method {
        Method::None => return Err(Error::Config("augment_example called with method none".into())),
        Method::Eda => (eda_once(&tokens, policy.op_rate, lex, rng), example.label.clone()),
        Method::SoftEda => (
            eda_once(&tokens, policy.op_rate, lex, rng),
            smooth(&example.label, policy.alpha),
        ),
        Method::Aeda => (aeda_insert(&tokens, policy.aeda_ratio, rng)?, example.label.clone()),
    };
    Ok(Some(Example {
        text: tokens.join(" "),
        label,
        origin: Origin::Augmented,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub corpus: Corpus,
    /// Originals whose tokenization was empty and so produced no copies.
    pub skipped: usize,
}

/// Originals (untouched) followed by `n_aug` augmented copies of each, ordered
/// by original index then copy index. Copy `c` of example `i` draws from the
/// stream keyed by `(seed, i, c)`.
pub fn augment_corpus(corpus: &Corpus, policy: &AugmentPolicy, lex: Lexicon<'_>) -> Result<Augmented> {
    if policy.method == Method::None {
        return Ok(Augmented {
            corpus: corpus.clone(),
            skipped: 0,
        });
    }
    let per_example: Vec<Vec<Option<Example>>> = corpus
        .examples
        .par_iter()
        .enumerate()
        .map(|(i, ex)| {
            (0..policy.n_aug)
                .map(|c| {
                    let mut rng = StreamRng::keyed(policy.seed, Domain::Augment, i as u64, c as u64);
                    augment_example(ex, policy, lex, &mut rng)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut examples = corpus.examples.clone();
    let mut skipped = 0;
    for copies in per_example {
        if copies.iter().any(Option::is_none) {
            skipped += 1;
        }
        examples.extend(copies.into_iter().flatten());
    }
    Ok(Augmented {
        corpus: Corpus::new(corpus.name.clone(), corpus.n_classes, examples)?,
        skipped,
    })
}
