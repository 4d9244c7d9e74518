use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{Decoder, DecodeError, DecodeInput, DecodeResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteDecoderConfig {
    /// Base URL; requests go to `{endpoint}/decode`.
    pub endpoint: String,
    pub timeout_ms: u64,
    /// Concurrent requests allowed before new ones go straight to the fallback.
    pub max_in_flight: usize,
}

impl Default for RemoteDecoderConfig {
    fn default() -> Self {
        Self { endpoint: "http://127.0.0.1:8808".into(), timeout_ms: 300, max_in_flight: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteRequest {
    pub noisy: String,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredWord {
    pub word: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteResponse {
    pub candidates: Vec<ScoredWord>,
}

/// Client for an external decoding service. Only the letter sequence leaves
/// the process. Any failure is answered by the fallback backend and flagged
/// as degraded.
pub struct RemoteDecoder {
    cfg: RemoteDecoderConfig,
    agent: ureq::Agent,
    fallback: Arc<dyn Decoder>,
    in_flight: AtomicUsize,
}

#[derive(Debug)]
#[allow(dead_code)] // payloads are read through Debug when logging
enum RemoteFailure {
    Busy,
    Transport(String),
    Malformed(String),
}

impl RemoteDecoder {
    pub const ID: &'static str = "remote";

    pub fn new(cfg: RemoteDecoderConfig, fallback: Arc<dyn Decoder>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(cfg.timeout_ms.max(1))))
            .build()
            .into();
        Self { cfg, agent, fallback, in_flight: AtomicUsize::new(0) }
    }

    pub fn config(&self) -> &RemoteDecoderConfig {
        &self.cfg
    }

    fn request(&self, input: &DecodeInput, k: usize) -> Result<RemoteResponse, RemoteFailure> {
        if self.in_flight.fetch_add(1, Ordering::AcqRel) >= self.cfg.max_in_flight {
            self.in_flight.fetch_sub(1, Ordering::AcqRel);
            return Err(RemoteFailure::Busy);
        }
        let url = format!("{}/decode", self.cfg.endpoint.trim_end_matches('/'));
        let body = RemoteRequest { noisy: input.letters.clone(), k };
        let result = self
            .agent
            .post(&url)
            .send_json(&body)
            .map_err(|e| RemoteFailure::Transport(e.to_string()))
            .and_then(|resp| {
                resp.into_body().read_json::<RemoteResponse>().map_err(|e| RemoteFailure::Malformed(e.to_string()))
            });
        self.in_flight.fetch_sub(1, Ordering::AcqRel);
        let resp = result?;
        if resp.candidates.iter().any(|c| !c.score.is_finite() || c.word.is_empty()) {
            return Err(RemoteFailure::Malformed("non-finite score or empty word".into()));
        }
        Ok(resp)
    }
}

/// Best-first, one entry per word (best score kept), truncated to `k`, with
/// the literal input handled as for local backends.
fn assemble(resp: RemoteResponse, input: &DecodeInput, k: usize) -> DecodeResult {
    let mut best: Vec<(f64, String)> = Vec::new();
    for c in resp.candidates {
        match best.iter_mut().find(|(_, w)| *w == c.word) {
            Some(entry) => entry.0 = entry.0.max(c.score),
            None => best.push((c.score, c.word)),
        }
    }
    let scored: Vec<(f64, &str)> = best.iter().map(|(s, w)| (*s, w.as_str())).collect();
    let floor = scored.iter().map(|s| s.0).fold(0.0, f64::min);
    super::finish(scored, k, &input.letters, floor, RemoteDecoder::ID)
}

impl Decoder for RemoteDecoder {
    fn id(&self) -> &str {
        Self::ID
    }

    fn decode(&self, input: &DecodeInput, k: usize) -> Result<DecodeResult, DecodeError> {
        input.validate()?;
        let start = Instant::now();
        match self.request(input, k) {
            Ok(resp) => {
                let mut r = assemble(resp, input, k);
                r.network_ms = Some(start.elapsed().as_secs_f64() * 1e3);
                Ok(r)
            }
            Err(_failure) => {
                let mut r = self.fallback.decode(input, k)?;
                r.degraded = true;
                Ok(r)
            }
        }
    }
}
