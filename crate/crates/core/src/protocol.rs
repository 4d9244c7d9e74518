//! JSON messages exchanged with typing clients, one object per frame.

use serde::{Deserialize, Serialize};

use crate::layout::Point;
use crate::pipeline::RawTouchEvent;

/// Client to server. Every variant may carry the client clock `t` (ms);
/// touches carry it inside the event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClientMessage {
    Open {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        backend: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        layout: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phrase_set: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<f64>,
    },
    Touch {
        e: RawTouchEvent,
    },
    Space {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<f64>,
    },
    Backspace {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<f64>,
    },
    Enter {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<f64>,
    },
    Suggest {
        rank: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<f64>,
    },
}

impl ClientMessage {
    pub fn t(&self) -> Option<f64> {
        match self {
            Self::Touch { e } => Some(e.t),
            Self::Open { t, .. } | Self::Space { t } | Self::Backspace { t } | Self::Enter { t } | Self::Suggest { t, .. } => *t,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Open { .. } => "open",
            Self::Touch { .. } => "touch",
            Self::Space { .. } => "space",
            Self::Backspace { .. } => "backspace",
            Self::Enter { .. } => "enter",
            Self::Suggest { .. } => "suggest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mark {
    pub pos: Point,
    pub intent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub word: String,
    /// Decoder rank; the literal input comes after the last decoded rank.
    pub rank: usize,
    #[serde(default)]
    pub literal: bool,
}

/// Timing of one commit, all in ms. Outbound and inbound are zero for
/// in-process backends.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencyRecord {
    pub decode_ms: f64,
    pub outbound_ms: f64,
    pub inbound_ms: f64,
    pub end_to_end_ms: f64,
}

impl LatencyRecord {
    pub fn is_valid(&self) -> bool {
        [self.decode_ms, self.outbound_ms, self.inbound_ms, self.end_to_end_ms].iter().all(|v| *v >= 0.0)
            && self.end_to_end_ms >= self.decode_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServerMessage {
    Opened {
        session: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phrase: Option<String>,
    },
    Intermediate {
        letters: String,
        marks: Vec<Mark>,
    },
    Commit {
        word: String,
        /// The letter sequence that was decoded.
        letters: String,
        suggestions: Vec<Suggestion>,
        latency: LatencyRecord,
        #[serde(default)]
        degraded: bool,
    },
    Replace {
        word: String,
    },
    /// The last committed word was removed.
    Delete {
        word: String,
    },
    PhraseResult {
        presented: String,
        transcribed: String,
        wpm: Option<f64>,
        wer: f64,
        cer: f64,
        latencies: Vec<LatencyRecord>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        next: Option<String>,
    },
    /// Acknowledges a message that changed nothing.
    Ack {
        of: String,
    },
    Error {
        code: ErrorCode,
        msg: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadMessage,
    NotOpen,
    AlreadyOpen,
    UnknownBackend,
    UnknownLayout,
    UnknownPhraseSet,
    Pipeline,
    Decode,
    NoSuggestions,
    StaleSuggestion,
    BadRank,
    NoPhrase,
}

impl ServerMessage {
    pub fn error(code: ErrorCode, msg: impl Into<String>) -> Self {
        Self::Error { code, msg: msg.into() }
    }
}

/// Committed words after applying `messages` in order, as a client would.
pub fn fold_text<'a>(messages: impl IntoIterator<Item = &'a ServerMessage>) -> Vec<String> {
    let mut words: Vec<String> = Vec::new();
    for m in messages {
        match m {
            ServerMessage::Commit { word, .. } => words.push(word.clone()),
            ServerMessage::Replace { word } => {
                if let Some(last) = words.last_mut() {
                    *last = word.clone();
                }
            }
            ServerMessage::Delete { .. } => {
                words.pop();
            }
            ServerMessage::PhraseResult { .. } => words.clear(),
            _ => {}
        }
    }
    words
}
