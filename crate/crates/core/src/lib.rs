//! Decoding engine for hands-down, ten-finger typing on flat touch surfaces.
//!
//! The crate turns raw multi-touch streams into letter sequences
//! ([`pipeline`]), decodes noisy letter sequences into words ([`decode`]),
//! synthesizes noisy training and evaluation corpora ([`synth`]), measures
//! accuracy and text-entry performance ([`metrics`]) and drives live typing
//! sessions ([`session`]).

pub mod decode;
pub mod edit;
pub mod layout;
pub mod lm;
pub mod metrics;
pub mod pipeline;
pub mod protocol;
pub mod session;
pub mod sim;
pub mod synth;

pub use layout::{Bucket, Hand, Key, KeyLayout, Point};
pub use lm::{CharNgramLm, Lexicon};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutput, RawTouchEvent, TouchKind};
