//! Word inventory and the character n-gram prior over words.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon source is empty")]
    Empty,
    #[error("cannot read lexicon: {0}")]
    Io(#[from] std::io::Error),
    #[error("n-gram order must be at least 2, got {0}")]
    Order(usize),
    #[error("add-k constant must be positive, got {0}")]
    Smoothing(f64),
    #[error("`{0}` contains characters outside a-z")]
    IllegalWord(String),
    #[error("empty word")]
    EmptyWord,
    #[error("unsupported LM snapshot format {0}")]
    Format(u32),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub fn is_plain_word(w: &str) -> bool {
    !w.is_empty() && w.bytes().all(|b| b.is_ascii_lowercase())
}

/// Frequency-ordered list of distinct lowercase a-z words.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    words: Vec<String>,
    index: HashMap<String, usize>,
    by_length: Vec<Vec<usize>>,
    dropped: usize,
}

impl Lexicon {
    /// Build from one-word-per-line text: lowercases, drops anything that is
    /// not pure a-z, removes duplicates and keeps first-seen order.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::default();
        for line in text.lines() {
            let w = line.trim();
            if w.is_empty() {
                continue;
            }
            let w = w.to_lowercase();
            if !is_plain_word(&w) {
                lex.dropped += 1;
                continue;
            }
            lex.push(w);
        }
        if lex.words.is_empty() {
            return Err(LexiconError::Empty);
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn from_words<I, S>(words: I) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let text: Vec<String> = words.into_iter().map(|w| w.as_ref().to_string()).collect();
        Self::parse(&text.join("\n"))
    }

    fn push(&mut self, w: String) {
        if self.index.contains_key(&w) {
            return;
        }
        let i = self.words.len();
        if self.by_length.len() <= w.len() {
            self.by_length.resize(w.len() + 1, Vec::new());
        }
        self.by_length[w.len()].push(i);
        self.index.insert(w.clone(), i);
        self.words.push(w);
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Entries rejected for containing characters outside a-z.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn contains(&self, w: &str) -> bool {
        self.index.contains_key(w)
    }

    /// Zero-based frequency rank.
    pub fn rank(&self, w: &str) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// Indices of all words of exactly `len` letters.
    pub fn with_length(&self, len: usize) -> &[usize] {
        self.by_length.get(len).map_or(&[], Vec::as_slice)
    }

    pub fn max_len(&self) -> usize {
        self.by_length.len().saturating_sub(1)
    }
}

const START: u8 = b'^';
const END: u8 = b'$';
/// 26 letters plus the end marker.
pub const VOCAB: usize = 27;
pub const LM_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Every word counts once.
    #[default]
    Uniform,
    /// A word at rank r (1-based) counts 1/r.
    InverseRank,
}

/// Character n-gram model with add-k smoothing over a-z plus an end marker.
/// Words are padded with `n-1` start markers, so `P(w)` accounts for length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharNgramLm {
    format_version: u32,
    n: usize,
    k: f64,
    weighting: Weighting,
    /// Context (n-1 symbols) followed by the predicted symbol.
    ngrams: HashMap<String, f64>,
    contexts: HashMap<String, f64>,
}

impl CharNgramLm {
    pub fn train(lexicon: &Lexicon, n: usize, k: f64) -> Result<Self, LexiconError> {
        Self::train_weighted(lexicon, n, k, Weighting::Uniform)
    }

    pub fn train_weighted(lexicon: &Lexicon, n: usize, k: f64, weighting: Weighting) -> Result<Self, LexiconError> {
        if n < 2 {
            return Err(LexiconError::Order(n));
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(LexiconError::Smoothing(k));
        }
        if lexicon.is_empty() {
            return Err(LexiconError::Empty);
        }
        let mut lm = Self {
            format_version: LM_FORMAT,
            n,
            k,
            weighting,
            ngrams: HashMap::new(),
            contexts: HashMap::new(),
        };
        for (rank, w) in lexicon.words().iter().enumerate() {
            let weight = match weighting {
                Weighting::Uniform => 1.0,
                Weighting::InverseRank => 1.0 / (rank + 1) as f64,
            };
            let padded = lm.pad(w);
            for gram in padded.windows(n) {
                *lm.ngrams.entry(to_key(gram)).or_insert(0.0) += weight;
                *lm.contexts.entry(to_key(&gram[..n - 1])).or_insert(0.0) += weight;
            }
        }
        Ok(lm)
    }

    fn pad(&self, w: &str) -> Vec<u8> {
        let mut v = vec![START; self.n - 1];
        v.extend_from_slice(w.as_bytes());
        v.push(END);
        v
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn smoothing(&self) -> f64 {
        self.k
    }

    /// `P(next | context)` with add-k smoothing. `context` holds exactly
    /// `n-1` symbols (`^` pads the start), `next` is a letter or `$`.
    pub fn cond_prob(&self, context: &[u8], next: u8) -> f64 {
        debug_assert_eq!(context.len(), self.n - 1);
        let mut key = Vec::with_capacity(self.n);
        key.extend_from_slice(context);
        let ctx = self.contexts.get(std::str::from_utf8(context).unwrap_or("")).copied().unwrap_or(0.0);
        key.push(next);
        let joint = self.ngrams.get(std::str::from_utf8(&key).unwrap_or("")).copied().unwrap_or(0.0);
        (joint + self.k) / (ctx + self.k * VOCAB as f64)
    }

    /// Natural-log probability of a whole word, end transition included.
    pub fn logprob(&self, word: &str) -> Result<f64, LexiconError> {
        if word.is_empty() {
            return Err(LexiconError::EmptyWord);
        }
        if !is_plain_word(word) {
            return Err(LexiconError::IllegalWord(word.to_string()));
        }
        let padded = self.pad(word);
        Ok(padded
            .windows(self.n)
            .map(|g| self.cond_prob(&g[..self.n - 1], g[self.n - 1]).ln())
            .sum())
    }

    pub fn to_json(&self) -> String {
        // Sorted maps so snapshots diff cleanly.
        let sorted = SnapshotRef {
            format_version: self.format_version,
            n: self.n,
            k: self.k,
            weighting: self.weighting,
            ngrams: self.ngrams.iter().map(|(a, b)| (a.as_str(), *b)).collect(),
            contexts: self.contexts.iter().map(|(a, b)| (a.as_str(), *b)).collect(),
        };
        serde_json::to_string(&sorted).expect("lm serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, LexiconError> {
        let lm: CharNgramLm = serde_json::from_str(s)?;
        if lm.format_version != LM_FORMAT {
            return Err(LexiconError::Format(lm.format_version));
        }
        if lm.n < 2 {
            return Err(LexiconError::Order(lm.n));
        }
        if !(lm.k > 0.0) {
            return Err(LexiconError::Smoothing(lm.k));
        }
        Ok(lm)
    }
}

#[derive(Serialize)]
struct SnapshotRef<'a> {
    format_version: u32,
    n: usize,
    k: f64,
    weighting: Weighting,
    ngrams: std::collections::BTreeMap<&'a str, f64>,
    contexts: std::collections::BTreeMap<&'a str, f64>,
}

fn to_key(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).expect("ascii")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(words: &[&str]) -> Lexicon {
        Lexicon::from_words(words).unwrap()
    }

    #[test]
    fn load_examples() {
        let l = lex(&["the", "of", "and"]);
        assert_eq!(l.words(), ["the", "of", "and"]);
        let l = lex(&["The", "the"]);
        assert_eq!(l.len(), 1);
        let l = lex(&["don't", "do"]);
        assert_eq!(l.words(), ["do"]);
        assert_eq!(l.dropped(), 1);
        assert!(matches!(Lexicon::parse("\n\n"), Err(LexiconError::Empty)));
        assert!(matches!(Lexicon::load("/nonexistent/words.txt"), Err(LexiconError::Io(_))));
    }

    #[test]
    fn length_index_covers_every_word() {
        let l = lex(&["a", "to", "the", "cat", "word"]);
        let total: usize = (0..=l.max_len()).map(|n| l.with_length(n).len()).sum();
        assert_eq!(total, l.len());
        assert_eq!(l.with_length(3).len(), 2);
        assert!(l.with_length(40).is_empty());
    }

    #[test]
    fn add_k_arithmetic() {
        let lm = CharNgramLm::train(&lex(&["ab"]), 2, 1.0).unwrap();
        assert!((lm.cond_prob(b"a", b'b') - 2.0 / 28.0).abs() < 1e-15);
        assert!((lm.cond_prob(b"z", b'q') - 1.0 / 27.0).abs() < 1e-15);
        assert!(matches!(CharNgramLm::train(&lex(&["ab"]), 1, 1.0), Err(LexiconError::Order(1))));
        assert!(matches!(CharNgramLm::train(&lex(&["ab"]), 3, 0.0), Err(LexiconError::Smoothing(_))));
    }

    #[test]
    fn logprob_properties() {
        let lm = CharNgramLm::train(&lex(&["the", "there", "then", "aa", "cat"]), 5, 0.01).unwrap();
        for w in ["the", "zzz", "a", "cat"] {
            assert!(lm.logprob(w).unwrap() < 0.0);
        }
        assert!(lm.logprob(&"a".repeat(30)).unwrap() < lm.logprob("aa").unwrap());
        assert!(lm.logprob("the").unwrap() > lm.logprob("zqx").unwrap());
        assert!(matches!(lm.logprob("Th"), Err(LexiconError::IllegalWord(_))));
        assert!(matches!(lm.logprob(""), Err(LexiconError::EmptyWord)));
    }

    #[test]
    fn logprob_matches_per_position_product() {
        let words = ["eligible", "legible", "gable", "big", "bile"];
        let l = lex(&words);
        let lm = CharNgramLm::train(&l, 3, 0.5).unwrap();
        // Count by hand over padded strings.
        let padded: Vec<String> = words.iter().map(|w| format!("^^{w}$")).collect();
        let count = |pat: &str| -> f64 {
            padded.iter().map(|p| (0..=p.len() - pat.len()).filter(|&i| &p[i..i + pat.len()] == pat).count()).sum::<usize>()
                as f64
        };
        for w in ["eligible", "gib", "xyz"] {
            let p = format!("^^{w}$");
            let mut prod = 1.0;
            for i in 2..p.len() {
                let ctx = &p[i - 2..i];
                let joint = &p[i - 2..=i];
                // context counts exclude windows ending in the final slot
                let ctx_count: f64 = padded
                    .iter()
                    .map(|q| (0..q.len() - 2).filter(|&j| &q[j..j + 2] == ctx).count())
                    .sum::<usize>() as f64;
                prod *= (count(joint) + 0.5) / (ctx_count + 0.5 * 27.0);
            }
            let lp = lm.logprob(w).unwrap();
            assert!((lp.exp() - prod).abs() <= 1e-9 * prod, "{w}");
        }
    }

    #[test]
    fn conditionals_sum_to_one() {
        let lm = CharNgramLm::train(&lex(&["the", "they", "them", "of"]), 3, 0.01).unwrap();
        for ctx in [b"^^", b"^t", b"th", b"he", b"zz"] {
            let mut s: f64 = (b'a'..=b'z').map(|c| lm.cond_prob(ctx, c)).sum();
            s += lm.cond_prob(ctx, b'$');
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn training_is_order_independent() {
        let a = CharNgramLm::train(&lex(&["one", "two", "three"]), 4, 0.1).unwrap();
        let b = CharNgramLm::train(&lex(&["three", "one", "two"]), 4, 0.1).unwrap();
        for w in ["one", "tree", "twothree"] {
            assert_eq!(a.logprob(w).unwrap(), b.logprob(w).unwrap());
        }
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let l = lex(&["alpha", "beta", "gamma", "delta"]);
        let lm = CharNgramLm::train_weighted(&l, 5, 0.01, Weighting::InverseRank).unwrap();
        let back = CharNgramLm::from_json(&lm.to_json()).unwrap();
        for w in ["alpha", "gamma", "zeta", "q"] {
            assert_eq!(lm.logprob(w).unwrap().to_bits(), back.logprob(w).unwrap().to_bits());
        }
        assert_eq!(back.to_json(), lm.to_json());
    }
}
