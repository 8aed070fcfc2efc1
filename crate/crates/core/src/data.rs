//! Corpus ingestion: tokenization, JSONL/TSV loading, validation splits,
//! vocabulary construction and batch encoding.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::PUNCTUATION_MARKS;
use crate::error::{Error, Result};
use crate::labels::{argmax_class, one_hot, LabelVector};
use crate::rng::{Domain, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Original,
    Augmented,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub text: String,
    pub label: LabelVector,
    pub origin: Origin,
}

impl Example {
    pub fn new(text: impl Into<String>, label: LabelVector, origin: Origin) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::EmptyInput("example text is blank".into()));
        }
        Ok(Self {
            text,
            label,
            origin,
        })
    }

    pub fn original(text: impl Into<String>, class: usize, n_classes: usize) -> Result<Self> {
        Self::new(text, one_hot(class, n_classes)?, Origin::Original)
    }

    pub fn class(&self) -> usize {
        argmax_class(&self.label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub n_classes: usize,
    pub examples: Vec<Example>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, n_classes: usize, examples: Vec<Example>) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Config(format!("n_classes must be >= 2, got {n_classes}")));
        }
        if let Some(ex) = examples.iter().find(|e| e.label.n_classes() != n_classes) {
            return Err(Error::LabelWidth {
                expected: n_classes,
                found: ex.label.n_classes(),
            });
        }
        Ok(Self {
            name: name.into(),
            n_classes,
            examples,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// SHA-256 over text, label bits and origin of every example, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_classes as u64).to_le_bytes());
        for ex in &self.examples {
            h.update((ex.text.len() as u64).to_le_bytes());
            h.update(ex.text.as_bytes());
            for c in ex.label.as_slice() {
                h.update(c.to_bits().to_le_bytes());
            }
            h.update([ex.origin as u8]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Lowercase, split on whitespace, trim characters outside `[a-z0-9']` from
/// both ends of each token and drop tokens that end up empty.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| !is_word_char(c)).to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Like [`tokenize`], but a whitespace-delimited chunk made up only of the
/// six AEDA punctuation marks survives as its own token. Augmentation and the
/// classifier use this form so inserted punctuation is visible to the model.
pub fn tokenize_keep_marks(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .filter_map(|chunk| {
            if chunk.chars().all(|c| PUNCTUATION_MARKS.contains(&c)) {
                return Some(chunk.to_string());
            }
            let t = chunk.trim_matches(|c: char| !is_word_char(c));
            (!t.is_empty()).then(|| t.to_string())
        })
        .collect()
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit() || c == '\''
}

#[derive(Deserialize)]
struct JsonlRecord {
    text: String,
    label: i64,
    #[serde(default)]
    label_dist: Option<Vec<f64>>,
    #[serde(default)]
    origin: Option<Origin>,
}

#[derive(Serialize)]
struct JsonlOutRecord<'a> {
    text: &'a str,
    label: usize,
    label_dist: &'a [f64],
    origin: Origin,
}

/// Reads one `{"text": .., "label": ..}` object per line. Blank lines are
/// skipped. Optional `label_dist` and `origin` fields (as written by
/// [`write_jsonl`]) are honoured, so augmented corpora load back unchanged.
pub fn load_jsonl(path: &Path, n_classes: usize) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut examples = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if rec.label < 0 || rec.label as u64 >= n_classes as u64 {
            return Err(Error::LabelOutOfRange {
                line: line_no,
                label: rec.label,
                n_classes,
            });
        }
        let malformed = |message: String| Error::MalformedLine {
            line: line_no,
            message,
        };
        let label = match rec.label_dist {
            Some(dist) if dist.len() != n_classes => {
                return Err(malformed(format!(
                    "label_dist has {} entries, expected {n_classes}",
                    dist.len()
                )))
            }
            Some(dist) => LabelVector::new(dist).map_err(|e| malformed(e.to_string()))?,
            None => one_hot(rec.label as usize, n_classes)?,
        };
        let origin = rec.origin.unwrap_or(Origin::Original);
        examples.push(Example::new(rec.text, label, origin).map_err(|e| malformed(e.to_string()))?);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Corpus::new(name, n_classes, examples)
}

/// TSV adapter: `label<TAB>text` per line.
pub fn load_tsv(path: &Path, n_classes: usize) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut examples = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (label, text) = line.split_once('\t').ok_or(Error::MissingTab { line: line_no })?;
        let label: i64 = label.trim().parse().map_err(|_| Error::MalformedLine {
            line: line_no,
            message: format!("label {label:?} is not an integer"),
        })?;
        if label < 0 || label as u64 >= n_classes as u64 {
            return Err(Error::LabelOutOfRange {
                line: line_no,
                label,
                n_classes,
            });
        }
        examples.push(Example::original(text, label as usize, n_classes).map_err(|e| {
            Error::MalformedLine {
                line: line_no,
                message: e.to_string(),
            }
        })?);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Corpus::new(name, n_classes, examples)
}

pub fn write_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for ex in &corpus.examples {
        let rec = JsonlOutRecord {
            text: &ex.text,
            label: ex.class(),
            label_dist: ex.label.as_slice(),
            origin: ex.origin,
        };
        let line = serde_json::to_string(&rec).expect("record serializes");
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Deterministically moves `ceil(fraction * N)` examples into a validation
/// corpus. Both halves keep the input's relative order.
pub fn split_validation(corpus: &Corpus, fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    let n = corpus.len();
    if n < 2 {
        return Err(Error::CorpusTooSmall(format!(
            "validation split needs at least 2 examples, got {n}"
        )));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("validation fraction {fraction} outside (0, 1)")));
    }
    // 1e-9 absorbs products such as 0.1 * 30 = 3.0000000000000004
    let n_val = ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n - 1);

    let mut order: Vec<usize> = (0..n).collect();
    StreamRng::keyed(seed, Domain::Split, 0, 0).shuffle(&mut order);
    let mut in_val = vec![false; n];
    for &i in &order[..n_val] {
        in_val[i] = true;
    }

    let (mut train, mut val) = (Vec::with_capacity(n - n_val), Vec::with_capacity(n_val));
    for (ex, v) in corpus.examples.iter().zip(in_val) {
        if v {
            val.push(ex.clone());
        } else {
            train.push(ex.clone());
        }
    }
    Ok((
        Corpus::new(format!("{}-train", corpus.name), corpus.n_classes, train)?,
        Corpus::new(format!("{}-val", corpus.name), corpus.n_classes, val)?,
    ))
}

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const DEFAULT_MIN_FREQ: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocab {
    fn from_tokens(words: impl IntoIterator<Item = String>) -> Result<Self> {
        let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        let mut ids = HashMap::new();
        for w in words {
            if w == PAD_TOKEN || w == UNK_TOKEN || ids.contains_key(&w) {
                return Err(Error::Config(format!("duplicate or reserved vocabulary entry {w:?}")));
            }
            ids.insert(w.clone(), tokens.len() as u32);
            tokens.push(w);
        }
        Ok(Self { tokens, ids })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Id of `token`, or [`UNK_ID`].
    pub fn id(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// One token per line, in id order, including the two reserved entries.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut body = self.tokens.join("\n");
        body.push('\n');
        std::fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = body.lines();
        if lines.next() != Some(PAD_TOKEN) || lines.next() != Some(UNK_TOKEN) {
            return Err(Error::Config(format!(
                "{}: vocabulary must start with {PAD_TOKEN} and {UNK_TOKEN}",
                path.display()
            )));
        }
        Self::from_tokens(lines.map(str::to_string))
    }
}

/// Builds a vocabulary from every token with frequency `>= min_freq`.
/// Ids are assigned by descending frequency, ties broken lexicographically.
pub fn build_vocab(corpus: &Corpus, min_freq: usize) -> Vocab {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for ex in &corpus.examples {
        for tok in tokenize_keep_marks(&ex.text) {
            *counts.entry(tok).or_default() += 1;
        }
    }
    let mut entries: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(t, c)| *c >= min_freq && t != PAD_TOKEN && t != UNK_TOKEN)
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocab::from_tokens(entries.into_iter().map(|(t, _)| t)).expect("entries are distinct")
}

/// Padded id rows plus the matching label rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedBatch {
    pub ids: Vec<Vec<u32>>,
    pub labels: Vec<Vec<f64>>,
}

pub fn encode_tokens(vocab: &Vocab, tokens: &[String], max_len: usize) -> Vec<u32> {
    let mut row: Vec<u32> = tokens.iter().take(max_len).map(|t| vocab.id(t)).collect();
    row.resize(max_len, PAD_ID);
    row
}

/// Truncates to the first `max_len` tokens and right-pads with [`PAD_ID`].
pub fn encode_batch(vocab: &Vocab, examples: &[Example], max_len: usize) -> EncodedBatch {
    assert!(max_len >= 1, "max_len must be positive");
    EncodedBatch {
        ids: examples
            .iter()
            .map(|ex| encode_tokens(vocab, &tokenize_keep_marks(&ex.text), max_len))
            .collect(),
        labels: examples.iter().map(|ex| ex.label.as_slice().to_vec()).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DatasetSpec {
    pub name: &'static str,
    pub task: &'static str,
    pub n_classes: usize,
    pub n_train: usize,
    pub n_test: usize,
}

pub const DATASETS: [DatasetSpec; 7] = [
    DatasetSpec { name: "SST2", task: "sentiment", n_classes: 2, n_train: 6919, n_test: 1820 },
    DatasetSpec { name: "CR", task: "sentiment", n_classes: 2, n_train: 3011, n_test: 752 },
    DatasetSpec { name: "MR", task: "sentiment", n_classes: 2, n_train: 9593, n_test: 1067 },
    DatasetSpec { name: "TREC", task: "question type", n_classes: 6, n_train: 5452, n_test: 500 },
    DatasetSpec { name: "SUBJ", task: "subjectivity", n_classes: 2, n_train: 8000, n_test: 2000 },
    DatasetSpec { name: "PC", task: "pro-con", n_classes: 2, n_train: 39418, n_test: 4506 },
    DatasetSpec { name: "CoLA", task: "linguistic acceptability", n_classes: 2, n_train: 8551, n_test: 527 },
];

/// Registry lookup; names are matched case-insensitively.
pub fn describe_dataset(name: &str) -> Result<DatasetSpec> {
    DATASETS
        .iter()
        .find(|d| d.name.eq_ignore_ascii_case(name))
        .copied()
        .ok_or_else(|| Error::UnknownDataset {
            name: name.to_string(),
            valid: DATASETS.iter().map(|d| d.name).collect::<Vec<_>>().join(", "),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn corpus(texts: &[&str]) -> Corpus {
        let examples = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Example::original(*t, i % 2, 2).unwrap())
            .collect();
        Corpus::new("t", 2, examples).unwrap()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("A good movie."), toks(&["a", "good", "movie"]));
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("don't STOP!!"), toks(&["don't", "stop"]));
        assert!(tokenize(" !! ?? ").is_empty());
    }

    #[test]
    fn keep_marks_variant() {
        assert_eq!(
            tokenize_keep_marks("What is it ? !"),
            toks(&["what", "is", "it", "?", "!"])
        );
        // mixed chunks are trimmed exactly like tokenize
        assert_eq!(tokenize_keep_marks("stop!! (x)"), toks(&["stop", "x"]));
    }

    fn write_tmp(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_jsonl_one_hot() {
        let f = write_tmp("{\"text\":\"good\",\"label\":1}\n{\"text\":\"bad\",\"label\":0}\n");
        let c = load_jsonl(f.path(), 2).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.examples[0].label.as_slice(), &[0.0, 1.0]);
        assert_eq!(c.examples[1].label.as_slice(), &[1.0, 0.0]);
        assert_eq!(c.examples[0].origin, Origin::Original);
    }

    #[test]
    fn load_jsonl_empty_file() {
        let f = write_tmp("");
        assert_eq!(load_jsonl(f.path(), 2).unwrap().len(), 0);
    }

    #[test]
    fn load_jsonl_errors_name_the_line() {
        let f = write_tmp("{\"text\":\"x\",\"label\":5}\n");
        let err = load_jsonl(f.path(), 2).unwrap_err();
        assert!(err.to_string().contains("label out of range at line 1"), "{err}");
        assert!(err.to_string().contains('5'));

        let f = write_tmp("{\"text\":\"x\",\"label\":0}\nnot json\n");
        let err = load_jsonl(f.path(), 2).unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 2, .. }), "{err}");

        let f = write_tmp("{\"text\":\"  \",\"label\":0}\n");
        assert!(matches!(load_jsonl(f.path(), 2), Err(Error::MalformedLine { line: 1, .. })));
    }

    #[test]
    fn jsonl_round_trip_keeps_soft_labels() {
        let mut c = corpus(&["a b", "c d"]);
        c.examples[1].label = LabelVector::new(vec![0.05, 0.95]).unwrap();
        c.examples[1].origin = Origin::Augmented;
        let f = tempfile::NamedTempFile::new().unwrap();
        write_jsonl(&c, f.path()).unwrap();
        let back = load_jsonl(f.path(), 2).unwrap();
        assert_eq!(back.examples, c.examples);
    }

    #[test]
    fn load_tsv_adapter() {
        let f = write_tmp("1\tgreat film\n0\tawful\n");
        let c = load_tsv(f.path(), 2).unwrap();
        assert_eq!(c.examples[0].class(), 1);
        assert_eq!(c.examples[1].text, "awful");
        let f = write_tmp("1 great\n");
        assert!(matches!(load_tsv(f.path(), 2), Err(Error::MissingTab { line: 1 })));
    }

    #[test]
    fn split_sizes() {
        let c = corpus(&["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"]);
        for seed in 0..5 {
            let (tr, va) = split_validation(&c, 0.2, seed).unwrap();
            assert_eq!((tr.len(), va.len()), (8, 2));
        }
        let (tr, va) = split_validation(&corpus(&["a", "b"]), 0.2, 9).unwrap();
        assert_eq!((tr.len(), va.len()), (1, 1));
        assert!(matches!(
            split_validation(&corpus(&["a"]), 0.2, 0),
            Err(Error::CorpusTooSmall(_))
        ));
    }

    #[test]
    fn split_is_deterministic() {
        let c = corpus(&["a", "b", "c", "d", "e", "f", "g"]);
        assert_eq!(split_validation(&c, 0.3, 4).unwrap(), split_validation(&c, 0.3, 4).unwrap());
    }

    #[test]
    fn vocab_ordering() {
        let v = build_vocab(&corpus(&["a a b"]), 1);
        assert_eq!(v.len(), 4);
        assert_eq!((v.id("a"), v.id("b")), (2, 3));
        assert_eq!(v.token(0), Some(PAD_TOKEN));
        assert_eq!(v.token(1), Some(UNK_TOKEN));

        assert_eq!(build_vocab(&corpus(&["a a b"]), 3).len(), 2);

        let v = build_vocab(&corpus(&["b a", "a b"]), 1);
        assert_eq!((v.id("a"), v.id("b")), (2, 3));
    }

    #[test]
    fn vocab_save_load() {
        let v = build_vocab(&corpus(&["x y y z z z", "? ?"]), 1);
        let f = tempfile::NamedTempFile::new().unwrap();
        v.save(f.path()).unwrap();
        assert_eq!(Vocab::load(f.path()).unwrap(), v);
    }

    #[test]
    fn encode_pads_truncates_and_maps_unknowns() {
        let v = build_vocab(&corpus(&["a b"]), 1);
        let row = encode_tokens(&v, &toks(&["a", "b"]), 4);
        assert_eq!(row, vec![v.id("a"), v.id("b"), 0, 0]);

        let long: Vec<String> = (0..150).map(|i| if i % 2 == 0 { "a" } else { "b" }.to_string()).collect();
        let row = encode_tokens(&v, &long, 100);
        assert_eq!(row.len(), 100);
        assert_eq!(row[..4], [2, 3, 2, 3]);
        assert_eq!(encode_tokens(&v, &toks(&["zzz"]), 2), vec![UNK_ID, PAD_ID]);
    }

    #[test]
    fn dataset_registry() {
        let trec = describe_dataset("TREC").unwrap();
        assert_eq!((trec.task, trec.n_classes, trec.n_train, trec.n_test), ("question type", 6, 5452, 500));
        let sst2 = describe_dataset("SST2").unwrap();
        assert_eq!((sst2.n_classes, sst2.n_train, sst2.n_test), (2, 6919, 1820));
        let pc = describe_dataset("PC").unwrap();
        assert_eq!((pc.n_classes, pc.n_train, pc.n_test), (2, 39418, 4506));
        let err = describe_dataset("IMDB").unwrap_err().to_string();
        assert!(err.contains("SST2") && err.contains("CoLA"), "{err}");
    }

    proptest! {
        #[test]
        fn tokenize_idempotent(s in "\\PC{0,60}") {
            let once = tokenize(&s);
            prop_assert_eq!(tokenize(&once.join(" ")), once);
        }

        #[test]
        fn split_is_a_partition(n in 2usize..60, frac in 0.01f64..0.99, seed in any::<u64>()) {
            let texts: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let c = corpus(&refs);
            let (tr, va) = split_validation(&c, frac, seed).unwrap();
            let mut all: Vec<String> = tr.examples.iter().chain(&va.examples).map(|e| e.text.clone()).collect();
            all.sort();
            let mut want = texts.clone();
            want.sort();
            prop_assert_eq!(all, want);
            prop_assert!(!tr.is_empty() && !va.is_empty());
        }

        #[test]
        fn encode_shape(texts in prop::collection::vec("[a-e ]{1,30}", 1..8), max_len in 1usize..20) {
            let texts: Vec<String> = texts.into_iter().map(|t| format!("x {t}")).collect();
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let c = corpus(&refs);
            let v = build_vocab(&c, 2);
            let b = encode_batch(&v, &c.examples, max_len);
            prop_assert_eq!(b.ids.len(), c.len());
            for row in &b.ids {
                prop_assert_eq!(row.len(), max_len);
                prop_assert!(row.iter().all(|&id| (id as usize) < v.len()));
            }
        }
    }
}
