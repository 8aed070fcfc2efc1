//! Synonym thesaurus and stopword list.
//!
//! Thesaurus files hold one `word<TAB>syn1|syn2|...` entry per line; stopword
//! files hold one word per line. In both, blank lines and lines starting with
//! `#` are ignored.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const BUNDLED_THESAURUS: &str = include_str!("../assets/thesaurus.tsv");
const BUNDLED_STOPWORDS: &str = include_str!("../assets/stopwords.txt");

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Thesaurus {
    entries: HashMap<String, Vec<String>>,
}

impl Thesaurus {
    pub fn parse(body: &str) -> Result<Self> {
        let mut entries: HashMap<String, Vec<String>> = HashMap::new();
        for (i, line) in body.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (head, syns) = line.split_once('\t').ok_or(Error::MissingTab { line: i + 1 })?;
            let head = head.trim().to_lowercase();
            let list = entries.entry(head.clone()).or_default();
            for syn in syns.split('|') {
                let syn = syn.trim().to_lowercase();
                if !syn.is_empty() && syn != head && !list.contains(&syn) {
                    list.push(syn);
                }
            }
        }
        entries.retain(|_, v| !v.is_empty());
        Ok(Self { entries })
    }

    /// The WordNet-derived thesaurus shipped with the crate.
    pub fn bundled() -> &'static Thesaurus {
        static CELL: OnceLock<Thesaurus> = OnceLock::new();
        CELL.get_or_init(|| Thesaurus::parse(BUNDLED_THESAURUS).expect("bundled thesaurus parses"))
    }

    /// Case-insensitive lookup; unknown words have no synonyms.
    pub fn synonyms(&self, word: &str) -> &[String] {
        let found = match self.entries.get(word) {
            Some(v) => Some(v),
            None => self.entries.get(&word.to_lowercase()),
        };
        found.map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_synonyms(&self, word: &str) -> bool {
        !self.synonyms(word).is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a [&'a str])>) -> Self {
        let body: String = pairs
            .into_iter()
            .map(|(w, syns)| format!("{w}\t{}\n", syns.join("|")))
            .collect();
        Self::parse(&body).expect("generated lines carry a TAB")
    }
}

pub fn load_thesaurus(path: &Path) -> Result<Thesaurus> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Thesaurus::parse(&body)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StopwordSet {
    words: HashSet<String>,
}

impl StopwordSet {
    pub fn parse(body: &str) -> Self {
        let words = body
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    pub fn bundled() -> &'static StopwordSet {
        static CELL: OnceLock<StopwordSet> = OnceLock::new();
        CELL.get_or_init(|| StopwordSet::parse(BUNDLED_STOPWORDS))
    }

    /// Exact match on the (already lowercase) word.
    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl<S: AsRef<str>> FromIterator<S> for StopwordSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self {
            words: iter.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }
}

pub fn load_stopwords(path: &Path) -> Result<StopwordSet> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(StopwordSet::parse(&body))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_basic_line() {
        let t = Thesaurus::parse("good\tfine|nice\n").unwrap();
        assert_eq!(t.synonyms("good"), ["fine", "nice"]);
    }

    #[test]
    fn duplicate_heads_merge_in_order() {
        let t = Thesaurus::parse("a\tb\na\tc|b\n").unwrap();
        assert_eq!(t.synonyms("a"), ["b", "c"]);
    }

    #[test]
    fn head_removed_from_own_list() {
        let t = Thesaurus::parse("x\tx|y\n").unwrap();
        assert_eq!(t.synonyms("x"), ["y"]);
        let t = Thesaurus::parse("x\tX\n").unwrap();
        assert!(t.synonyms("x").is_empty());
    }

    #[test]
    fn lookup_is_case_insensitive() {
        let t = Thesaurus::parse("Good\tFine\n").unwrap();
        assert_eq!(t.synonyms("GOOD"), t.synonyms("good"));
        assert_eq!(t.synonyms("good"), ["fine"]);
        assert!(t.synonyms("unknown").is_empty());
    }

    #[test]
    fn missing_tab_reports_line() {
        let err = Thesaurus::parse("# header\ngood\tfine\nbad fine\n").unwrap_err();
        assert!(matches!(err, Error::MissingTab { line: 3 }), "{err}");
    }

    #[test]
    fn stopword_file() {
        let s = StopwordSet::parse("the\na\n# comment\n\n");
        assert_eq!(s.len(), 2);
        assert!(s.contains("the") && s.contains("a"));
        assert!(StopwordSet::parse("").is_empty());
        assert!(StopwordSet::parse("The\n").contains("the"));
    }

    #[test]
    fn load_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.tsv");
        std::fs::write(&p, "good\tfine\n").unwrap();
        assert_eq!(load_thesaurus(&p).unwrap().synonyms("good"), ["fine"]);
        assert!(load_thesaurus(&dir.path().join("missing")).is_err());
    }

    #[test]
    fn bundled_assets_load() {
        let t = Thesaurus::bundled();
        assert!(t.len() > 10_000);
        assert!(t.has_synonyms("good"));
        let s = StopwordSet::bundled();
        assert!((140..=170).contains(&s.len()), "{}", s.len());
        assert!(s.contains("the"));
    }

    #[test]
    fn bundled_never_lists_head_word() {
        for (w, syns) in &Thesaurus::bundled().entries {
            assert!(!syns.contains(w), "{w}");
            assert_eq!(w, &w.to_lowercase());
        }
    }

    proptest! {
        #[test]
        fn load_order_independent(
            heads in prop::collection::btree_set("[a-z]{1,5}", 1..8),
            syns in prop::collection::vec(prop::collection::vec("[a-z]{1,5}", 1..4), 8),
            seed in any::<u64>(),
        ) {
            let mut lines: Vec<String> = heads
                .iter()
                .zip(&syns)
                .map(|(h, s)| format!("{h}\t{}", s.join("|")))
                .collect();
            let a = Thesaurus::parse(&lines.join("\n")).unwrap();
            crate::rng::StreamRng::new(seed).shuffle(&mut lines);
            let b = Thesaurus::parse(&lines.join("\n")).unwrap();
            prop_assert_eq!(&a, &b);
            for (w, list) in &a.entries {
                prop_assert!(!list.contains(w));
            }
        }
    }
}
