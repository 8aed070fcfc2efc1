//! Synthetic corpora for integration and acceptance tests.
#![allow(dead_code)]

use std::io::Write;
use std::path::Path;

use softaug::rng::StreamRng;

/// Six question types, each with its own cue words, over a shared filler
/// vocabulary. Cues are ordinary English words so the bundled thesaurus has
/// synonyms for many of them.
const CUES: [&[&str]; 6] = [
    &["abbreviation", "stand", "acronym", "short", "initials", "expansion"],
    &["animal", "color", "food", "instrument", "sport", "disease"],
    &["define", "meaning", "describe", "explain", "definition", "reason"],
    &["person", "leader", "author", "inventor", "president", "singer"],
    &["city", "country", "river", "mountain", "capital", "located"],
    &["year", "number", "distance", "population", "price", "date"],
];

const OPENERS: [&str; 6] = ["what", "who", "where", "when", "how", "which"];

const FILLER: [&str; 40] = [
    "the", "a", "of", "in", "is", "was", "first", "famous", "world", "american", "big", "small", "old",
    "new", "great", "good", "long", "called", "known", "named", "best", "large", "early", "modern",
    "national", "popular", "common", "main", "major", "last", "state", "united", "english", "local",
    "public", "major", "high", "low", "early", "late",
];

/// `n` labelled questions; a fraction `noise` of them get a random label.
pub fn questions(n: usize, seed: u64, noise: f64) -> Vec<(String, usize)> {
    let mut rng = StreamRng::new(seed);
    (0..n)
        .map(|_| {
            let class = rng.below(6);
            let len = 4 + rng.below(8);
            let mut words = vec![OPENERS[rng.below(OPENERS.len())].to_string()];
            let n_cues = 1 + rng.below(2);
            for _ in 0..len {
                words.push(FILLER[rng.below(FILLER.len())].to_string());
            }
            for _ in 0..n_cues {
                let at = 1 + rng.below(words.len());
                words.insert(at, CUES[class][rng.below(CUES[class].len())].to_string());
            }
            // a cue from another class as distractor
            if rng.bernoulli(0.3) {
                let other = rng.below(6);
                let at = 1 + rng.below(words.len());
                words.insert(at, CUES[other][rng.below(CUES[other].len())].to_string());
            }
            let label = if rng.bernoulli(noise) { rng.below(6) } else { class };
            (format!("{} ?", words.join(" ")), label)
        })
        .collect()
}

pub fn write_jsonl(path: &Path, rows: &[(String, usize)]) {
    let mut f = std::fs::File::create(path).unwrap();
    for (text, label) in rows {
        writeln!(f, "{}", serde_json::json!({ "text": text, "label": label })).unwrap();
    }
}

/// Binary toy corpus that a bag-of-words model separates perfectly.
pub fn separable(n: usize) -> Vec<(String, usize)> {
    let pos = ["great", "wonderful", "superb", "lovely"];
    let neg = ["awful", "terrible", "dreadful", "horrid"];
    let filler = ["film", "plot", "story", "acting", "movie", "cast", "scene", "music"];
    (0..n)
        .map(|i| {
            let label = i % 2;
            let cue = if label == 1 { pos[i / 2 % 4] } else { neg[i / 2 % 4] };
            let text = format!("the {} was {} and {}", filler[i % 8], cue, filler[(i * 3 + 1) % 8]);
            (text, label)
        })
        .collect()
}
