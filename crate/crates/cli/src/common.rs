use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use tenfinger_core::decode::{standard_registry, NgramDecoderConfig, Registry, RemoteDecoderConfig};
use tenfinger_core::lm::{CharNgramLm, Lexicon, Weighting};
use tenfinger_core::KeyLayout;

pub const DEFAULT_LEXICON: &str = "data/english-10k.txt";

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Word list, one word per line, most frequent first.
    #[arg(long, default_value = DEFAULT_LEXICON)]
    pub lexicon: PathBuf,
    /// Layout JSON; the built-in QWERTY layout when omitted.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Per-edit penalty of the letter-only decoder.
    #[arg(long, default_value_t = NgramDecoderConfig::default().alpha)]
    pub alpha: f64,
    /// Base URL of a remote decoder; enables the `remote` backend.
    #[arg(long)]
    pub remote: Option<String>,
    #[arg(long, default_value_t = 300)]
    pub remote_timeout_ms: u64,
    /// How lexicon words count when training the character model.
    #[arg(long, value_enum, default_value_t = LmWeighting::Uniform)]
    pub lm_weighting: LmWeighting,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmWeighting {
    Uniform,
    /// The word at rank r counts 1/r.
    InverseRank,
}

pub struct Models {
    pub lexicon: Arc<Lexicon>,
    pub lm: Arc<CharNgramLm>,
    pub layout: Arc<KeyLayout>,
    pub registry: Registry,
}

pub fn load_layout(path: Option<&Path>) -> Result<KeyLayout> {
    match path {
        None => Ok(KeyLayout::qwerty()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            KeyLayout::from_json(&text).with_context(|| format!("parsing layout {}", p.display()))
        }
    }
}

pub fn load_lexicon(path: &Path) -> Result<Lexicon> {
    Lexicon::load(path).with_context(|| format!("loading lexicon {}", path.display()))
}

impl ModelArgs {
    pub fn build(&self) -> Result<Models> {
        let lexicon = Arc::new(load_lexicon(&self.lexicon)?);
        let weighting = match self.lm_weighting {
            LmWeighting::Uniform => Weighting::Uniform,
            LmWeighting::InverseRank => Weighting::InverseRank,
        };
        let lm = Arc::new(CharNgramLm::train_weighted(&lexicon, 5, 0.01, weighting)?);
        let layout = Arc::new(load_layout(self.layout.as_deref())?);
        let remote = self.remote.as_ref().map(|endpoint| RemoteDecoderConfig {
            endpoint: endpoint.clone(),
            timeout_ms: self.remote_timeout_ms,
            ..RemoteDecoderConfig::default()
        });
        let ngram = NgramDecoderConfig { alpha: self.alpha, ..NgramDecoderConfig::default() };
        let registry = standard_registry(lexicon.clone(), lm.clone(), layout.clone(), ngram, remote);
        Ok(Models { lexicon, lm, layout, registry })
    }
}

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Phrases, one per line; blank lines and `#` comments skipped.
pub fn parse_phrases(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

/// Gold labels as TSV rows `session<TAB>word_id<TAB>gold`.
pub fn parse_gold(text: &str) -> Result<HashMap<(String, i64), String>> {
    let mut gold = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (n == 0 && line.starts_with("session\t")) {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        anyhow::ensure!(cols.len() == 3, "gold line {}: expected 3 columns", n + 1);
        let id: i64 = cols[1].parse().with_context(|| format!("gold line {}: word_id", n + 1))?;
        gold.insert((cols[0].to_string(), id), cols[2].to_string());
    }
    Ok(gold)
}

pub fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}
