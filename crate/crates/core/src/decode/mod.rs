//! Word decoders over noisy letter sequences, with or without touch points.

mod bayes;
mod ngram;
mod remote;

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::edit::bounded_levenshtein;
use crate::layout::{KeyLayout, Point};
use crate::lm::{is_plain_word, CharNgramLm, Lexicon};

pub use bayes::{BayesDecoder, BayesDecoderConfig, SpatialModel};
pub use ngram::{NgramDecoder, NgramDecoderConfig};
pub use remote::{RemoteDecoder, RemoteDecoderConfig, RemoteRequest, RemoteResponse, ScoredWord};

/// Beam width used for interactive decoding.
pub const DEFAULT_K: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error("unknown backend {0:?}")]
    UnknownBackend(String),
    #[error("empty input")]
    EmptyInput,
    #[error("input {0:?} is not a lowercase a-z string")]
    IllegalInput(String),
    #[error("backend {0} needs touch points")]
    MissingTouches(String),
    #[error("{touches} touches for {letters} letters")]
    TouchCount { letters: usize, touches: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeInput {
    /// Nearest-key letter sequence.
    pub letters: String,
    /// Representative contact behind each letter, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub touches: Option<Vec<Point>>,
}

impl DecodeInput {
    pub fn letters(letters: impl Into<String>) -> Self {
        Self { letters: letters.into(), touches: None }
    }

    pub fn with_touches(letters: impl Into<String>, touches: Vec<Point>) -> Self {
        Self { letters: letters.into(), touches: Some(touches) }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.letters.is_empty() {
            return Err(DecodeError::EmptyInput);
        }
        if !is_plain_word(&self.letters) {
            return Err(DecodeError::IllegalInput(self.letters.clone()));
        }
        if let Some(t) = &self.touches {
            if t.len() != self.letters.len() {
                return Err(DecodeError::TouchCount { letters: self.letters.len(), touches: t.len() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub word: String,
    /// Log-space score; only comparable within one result.
    pub score: f64,
    pub source: String,
    /// The raw input, kept so an out-of-vocabulary word can still be chosen.
    #[serde(default)]
    pub literal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// Best first, no duplicate words, at most `k + 1` entries.
    pub ranked: Vec<Candidate>,
    pub k: usize,
    /// Set when the configured backend failed and a fallback answered.
    #[serde(default)]
    pub degraded: bool,
    /// Wall-clock decode time, filled in by [`Registry::decode`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<f64>,
    /// Time spent waiting on the network, for remote backends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network_ms: Option<f64>,
}

impl DecodeResult {
    pub fn top(&self) -> Option<&Candidate> {
        self.ranked.first()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.ranked.iter().map(|c| c.word.as_str())
    }

    pub fn literal(&self) -> Option<&Candidate> {
        self.ranked.iter().find(|c| c.literal)
    }
}

pub trait Decoder: Send + Sync {
    fn id(&self) -> &str;
    fn decode(&self, input: &DecodeInput, k: usize) -> Result<DecodeResult, DecodeError>;
}

/// Lexicon indices within `max_ed` of `u`, with their distances, in lexicon
/// order.
pub fn candidate_set(u: &str, lexicon: &Lexicon, max_ed: usize) -> Vec<(usize, usize)> {
    let ub = u.as_bytes();
    let lo = ub.len().saturating_sub(max_ed);
    let hi = (ub.len() + max_ed).min(lexicon.max_len());
    let mut out = Vec::new();
    for len in lo..=hi {
        for &i in lexicon.with_length(len) {
            if let Some(d) = bounded_levenshtein(ub, lexicon.words()[i].as_bytes(), max_ed) {
                out.push((i, d));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Scores closer than this compare equal when ranking, so rounding noise in
/// symmetric cases cannot override the lexicographic tie-break.
pub const SCORE_RESOLUTION: f64 = 1e-9;

fn score_key(s: f64) -> f64 {
    (s / SCORE_RESOLUTION).round()
}

/// Score as stored in results: snapped to the ranking grid so displayed
/// scores never increase down a ranking.
pub fn quantize(s: f64) -> f64 {
    score_key(s) * SCORE_RESOLUTION
}

/// Best-first order: higher score, then lexicographically smaller word.
pub fn rank_order(a: &(f64, &str), b: &(f64, &str)) -> std::cmp::Ordering {
    score_key(b.0).total_cmp(&score_key(a.0)).then_with(|| a.1.cmp(b.1))
}

/// Keep the top `k` of `scored`, then add the literal input: flagged in place
/// if it already made the cut, appended last otherwise.
pub(crate) fn finish(
    mut scored: Vec<(f64, &str)>,
    k: usize,
    literal: &str,
    literal_score: f64,
    source: &str,
) -> DecodeResult {
    scored.sort_by(rank_order);
    scored.truncate(k);
    let mut ranked: Vec<Candidate> = scored
        .iter()
        .map(|&(score, w)| Candidate { word: w.to_string(), score: quantize(score), source: source.to_string(), literal: w == literal })
        .collect();
    if !ranked.iter().any(|c| c.literal) {
        let own = quantize(literal_score);
        let floor = ranked.last().map_or(own, |c| c.score.min(own));
        ranked.push(Candidate { word: literal.to_string(), score: floor, source: source.to_string(), literal: true });
    }
    DecodeResult { ranked, k, degraded: false, latency_ms: None, network_ms: None }
}

/// Backends by id. Dispatch records wall-clock latency in the result.
#[derive(Default, Clone)]
pub struct Registry {
    backends: HashMap<String, Arc<dyn Decoder>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, decoder: Arc<dyn Decoder>) {
        self.backends.insert(decoder.id().to_string(), decoder);
    }

    pub fn get(&self, id: &str) -> Option<&Arc<dyn Decoder>> {
        self.backends.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.backends.contains_key(id)
    }

    pub fn ids(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.backends.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    pub fn decode(&self, input: &DecodeInput, backend: &str, k: usize) -> Result<DecodeResult, DecodeError> {
        let d = self.get(backend).ok_or_else(|| DecodeError::UnknownBackend(backend.to_string()))?;
        let start = Instant::now();
        let mut r = d.decode(input, k)?;
        r.latency_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        Ok(r)
    }
}

/// Registry with the letter-only and touch-informed backends over one
/// lexicon, plus a remote client falling back to the letter-only backend when
/// `remote` is given.
pub fn standard_registry(
    lexicon: Arc<Lexicon>,
    lm: Arc<CharNgramLm>,
    layout: Arc<KeyLayout>,
    ngram: NgramDecoderConfig,
    remote: Option<RemoteDecoderConfig>,
) -> Registry {
    let mut reg = Registry::new();
    let letters: Arc<dyn Decoder> = Arc::new(NgramDecoder::new(lexicon.clone(), lm.clone(), ngram));
    let bayes_cfg = BayesDecoderConfig::for_layout(&layout);
    reg.register(Arc::new(BayesDecoder::new(lexicon, lm, layout, bayes_cfg)));
    if let Some(cfg) = remote {
        reg.register(Arc::new(RemoteDecoder::new(cfg, letters.clone())));
    }
    reg.register(letters);
    reg
}
