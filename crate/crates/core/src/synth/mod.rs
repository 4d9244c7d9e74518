//! Synthetic misspelling corpora from two error channels: near-key slips of
//! the aiming finger and co-activation of resting fingers.

mod coact;
mod gmm;
mod model;
mod propensity;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edit::levenshtein;
use crate::layout::{KeyLayout, LayoutError, Point};
use crate::lm::Lexicon;

pub use coact::{AnnotatedCluster, CoActTable, SwapRule};
pub use gmm::{fit_mixture, fit_offset_gmm, Gaussian2, GmmFitReport, Mixture, OffsetGmm, COMPONENTS, MIN_SAMPLES};
pub use model::{fit_noise_model, sample_near_slip, slip_outcome, FitReport, NoiseModel, SlipMode, SlipOutcome, NOISE_MODEL_FORMAT};
pub use propensity::{features, PropensityModel, FEATURES};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("no offset samples to fit")]
    NoSamples,
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("no valid corruption of {word:?} within {attempts} attempts")]
    Budget { word: String, attempts: usize },
    #[error("regime {regime} gets {target} pairs; at least 100 are needed")]
    RegimeTooSmall { regime: Regime, target: usize },
    #[error("lexicon has no usable words")]
    EmptyLexicon,
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unsupported noise model format {0}")]
    Version(u32),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Edit-distance cap for a gold word of length `len`.
pub fn e_max(len: usize) -> usize {
    match len {
        0..=6 => 2,
        7..=9 => 3,
        _ => 4,
    }
}

/// Word-length regimes sharing one edit-distance cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Regime {
    Short,
    Medium,
    Long,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Short, Regime::Medium, Regime::Long];

    pub fn of(len: usize) -> Regime {
        match len {
            0..=6 => Regime::Short,
            7..=9 => Regime::Medium,
            _ => Regime::Long,
        }
    }

    pub fn cap(self) -> usize {
        match self {
            Regime::Short => 2,
            Regime::Medium => 3,
            Regime::Long => 4,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Short => "L<=6",
            Regime::Medium => "7<=L<=9",
            Regime::Long => "L>=10",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Near,
    CoAct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Sub,
    Ins,
    Del,
    Swap,
}

/// One intended edit at gold position `pos`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditTag {
    pub channel: Channel,
    pub op: EditOp,
    pub pos: usize,
}

impl fmt::Display for EditTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ch = match self.channel {
            Channel::Near => "near",
            Channel::CoAct => "coact",
        };
        let op = match self.op {
            EditOp::Sub => "sub",
            EditOp::Ins => "ins",
            EditOp::Del => "del",
            EditOp::Swap => "swap",
        };
        write!(f, "{ch}:{op}@{}", self.pos)
    }
}

impl FromStr for EditTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (ch, rest) = s.split_once(':').ok_or_else(|| format!("bad edit tag {s:?}"))?;
        let (op, pos) = rest.split_once('@').ok_or_else(|| format!("bad edit tag {s:?}"))?;
        let channel = match ch {
            "near" => Channel::Near,
            "coact" => Channel::CoAct,
            _ => return Err(format!("unknown channel {ch:?}")),
        };
        let op = match op {
            "sub" => EditOp::Sub,
            "ins" => EditOp::Ins,
            "del" => EditOp::Del,
            "swap" => EditOp::Swap,
            _ => return Err(format!("unknown op {op:?}")),
        };
        let pos = pos.parse().map_err(|_| format!("bad position in {s:?}"))?;
        Ok(EditTag { channel, op, pos })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePair {
    pub noisy: String,
    pub gold: String,
    pub realized_ed: usize,
    pub edits: Vec<EditTag>,
    /// Simulated contact point behind every noisy letter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub touches: Option<Vec<Point>>,
}

/// `P(Near)` is logistic in (row distance from home, hand switch).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub bias: f64,
    pub weights: [f64; 2],
}

impl Default for ChannelModel {
    fn default() -> Self {
        // 0.6 Near / 0.4 CoAct everywhere.
        Self { bias: 1.5f64.ln(), weights: [0.0, 0.0] }
    }
}

impl ChannelModel {
    pub fn p_near(&self, f: &[f64; FEATURES]) -> f64 {
        let z = self.bias + self.weights[0] * f[0] + self.weights[1] * f[1];
        1.0 / (1.0 + (-z).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpRates {
    pub near_sub: f64,
    pub near_ins: f64,
    pub near_del: f64,
    pub coact_ins: f64,
    pub coact_sub: f64,
    pub coact_swap: f64,
}

impl Default for OpRates {
    fn default() -> Self {
        Self { near_sub: 0.6, near_ins: 0.2, near_del: 0.2, coact_ins: 0.55, coact_sub: 0.15, coact_swap: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    /// Sharpness of the soft nearest-key kernel, per squared layout unit.
    pub alpha_kernel: f64,
    /// Success probability of the truncated geometric edit-count prior.
    pub count_p: f64,
    /// Allowed per-bin deviation from a uniform ED histogram.
    pub tolerance: f64,
    /// Extra taps land after the aimed letter (before when false).
    pub insert_after: bool,
    pub channel: ChannelModel,
    pub ops: OpRates,
    pub attempts_per_pair: usize,
    pub corpus_budget: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            alpha_kernel: 300.0,
            count_p: 0.45,
            tolerance: 0.02,
            insert_after: true,
            channel: ChannelModel::default(),
            ops: OpRates::default(),
            attempts_per_pair: 50,
            corpus_budget: 100_000,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.tolerance > 0.0 && self.tolerance < 0.2) {
            return Err(SynthError::Config(format!("tolerance {} not in (0, 0.2)", self.tolerance)));
        }
        if !(self.alpha_kernel > 0.0) {
            return Err(SynthError::Config(format!("alpha_kernel {} must be positive", self.alpha_kernel)));
        }
        if !(self.count_p > 0.0 && self.count_p <= 1.0) {
            return Err(SynthError::Config(format!("count_p {} not in (0, 1]", self.count_p)));
        }
        Ok(())
    }

    /// Truncated geometric prior over `0..=cap` intended edits.
    pub fn draw_edit_count<R: Rng + ?Sized>(&self, cap: usize, rng: &mut R) -> usize {
        let w: Vec<f64> = (0..=cap).map(|e| self.count_p * (1.0 - self.count_p).powi(e as i32)).collect();
        coact::sample_index(&w, rng).unwrap_or(0)
    }
}

/// Everything a corruption needs, bundled to keep signatures short.
#[derive(Clone, Copy)]
pub struct Synthesizer<'a> {
    pub model: &'a NoiseModel,
    pub layout: &'a KeyLayout,
    pub cfg: &'a SynthConfig,
}

#[derive(Debug, Clone, Copy)]
struct Token {
    orig: Option<usize>,
    ch: u8,
    touch: Point,
}

const LANDING_TRIES: usize = 16;

impl<'a> Synthesizer<'a> {
    pub fn new(model: &'a NoiseModel, layout: &'a KeyLayout, cfg: &'a SynthConfig) -> Self {
        Self { model, layout, cfg }
    }

    /// A landing point for an aimed letter that still maps back to it.
    fn land<R: Rng + ?Sized>(&self, c: u8, rng: &mut R) -> Point {
        let center = self.layout.center(c as char);
        for _ in 0..LANDING_TRIES {
            let d = self.model.gmm.sample(c as char, rng);
            let p = center.offset(d[0], d[1]);
            if self.layout.nearest_letter(p) == c as char {
                return p;
            }
        }
        center
    }

    /// Near-channel substitution: redraw the slip until it lands on another key.
    fn near_substitute<R: Rng + ?Sized>(&self, a: u8, rng: &mut R) -> Result<(u8, Point), SynthError> {
        let center = self.layout.center(a as char);
        let mut last = center;
        for _ in 0..LANDING_TRIES {
            let d = self.model.gmm.sample(a as char, rng);
            last = center.offset(d[0], d[1]);
            if let SlipOutcome::Substitute(c) = slip_outcome(a as char, d, self.layout, self.cfg.alpha_kernel, SlipMode::Argmax, rng)? {
                return Ok((c as u8, last));
            }
        }
        // Most probable other letter at the last slip, i.e. the nearest one.
        let c = ('a'..='z')
            .filter(|&c| c != a as char)
            .min_by(|&c, &d| last.dist2(self.layout.center(c)).total_cmp(&last.dist2(self.layout.center(d))))
            .expect("25 other letters");
        Ok((c as u8, self.land(c as u8, rng)))
    }

    /// Near-channel extra tap: a letter sampled from the kernel around the slip.
    fn near_extra<R: Rng + ?Sized>(&self, a: u8, rng: &mut R) -> Result<u8, SynthError> {
        let center = self.layout.center(a as char);
        let d = self.model.gmm.sample(a as char, rng);
        let p = center.offset(d[0], d[1]);
        let q = self.layout.soft_key_distribution(p, self.cfg.alpha_kernel)?;
        let mut w = q.letters;
        w[(a - b'a') as usize] = 0.0;
        let i = coact::sample_index(&w, rng).unwrap_or_else(|| {
            let n = self.layout.nearest_letter(p);
            if n as u8 == a { usize::from(a == b'a') } else { (n as u8 - b'a') as usize }
        });
        Ok(b'a' + i as u8)
    }

    /// Apply exactly `count` intended edits (fewer if the word is shorter) to
    /// `gold`. No cap check is made here.
    pub fn corrupt<R: Rng + ?Sized>(&self, gold: &str, count: usize, rng: &mut R) -> Result<NoisePair, SynthError> {
        let y = gold.as_bytes();
        let layout = self.layout;
        let mut tokens: Vec<Token> =
            y.iter().enumerate().map(|(i, &c)| Token { orig: Some(i), ch: c, touch: self.land(c, rng) }).collect();

        // Positions by propensity, without replacement.
        let mut weights = self.model.propensity.propensities(layout, y);
        let mut positions = Vec::with_capacity(count);
        for _ in 0..count.min(y.len()) {
            let Some(i) = coact::sample_index(&weights, rng) else { break };
            weights[i] = 0.0;
            positions.push(i);
        }
        positions.sort_unstable();

        let ops = &self.cfg.ops;
        let mut edits = Vec::with_capacity(positions.len());
        for &i in &positions {
            let f = features(layout, y, i);
            let channel = if rng.random::<f64>() < self.cfg.channel.p_near(&f) { Channel::Near } else { Channel::CoAct };
            let op = match channel {
                Channel::Near => [EditOp::Sub, EditOp::Ins, EditOp::Del]
                    [coact::sample_index(&[ops.near_sub, ops.near_ins, ops.near_del], rng).unwrap_or(0)],
                Channel::CoAct => {
                    let swap = if i + 1 < y.len() && y[i] != y[i + 1] {
                        let s = &self.model.coact.swap;
                        ops.coact_swap * s.propensity(layout, y[i] as char, y[i + 1] as char) / s.base.max(f64::MIN_POSITIVE)
                    } else {
                        0.0
                    };
                    [EditOp::Ins, EditOp::Sub, EditOp::Swap]
                        [coact::sample_index(&[ops.coact_ins, ops.coact_sub, swap], rng).unwrap_or(0)]
                }
            };
            edits.push(EditTag { channel, op, pos: i });
        }

        let find = |tokens: &[Token], i: usize| tokens.iter().position(|t| t.orig == Some(i));
        for e in edits.iter().filter(|e| e.op == EditOp::Swap) {
            if let (Some(a), Some(b)) = (find(&tokens, e.pos), find(&tokens, e.pos + 1)) {
                tokens.swap(a, b);
            }
        }
        for e in edits.iter().filter(|e| e.op == EditOp::Del) {
            if let Some(a) = find(&tokens, e.pos) {
                tokens.remove(a);
            }
        }
        for e in edits.iter().filter(|e| matches!(e.op, EditOp::Sub | EditOp::Ins)) {
            let Some(at) = find(&tokens, e.pos) else { continue };
            let a = y[e.pos];
            let bucket = layout.letter_bucket(y[e.pos.saturating_sub(1)] as char);
            match (e.channel, e.op) {
                (Channel::Near, EditOp::Sub) => {
                    let (c, p) = self.near_substitute(a, rng)?;
                    tokens[at].ch = c;
                    tokens[at].touch = p;
                }
                (Channel::CoAct, EditOp::Sub) => {
                    let c = self.model.coact.sample(a as char, bucket, rng) as u8;
                    tokens[at].ch = c;
                    tokens[at].touch = self.land(c, rng);
                }
                (channel, _) => {
                    let c = match channel {
                        Channel::Near => self.near_extra(a, rng)?,
                        Channel::CoAct => self.model.coact.sample(a as char, bucket, rng) as u8,
                    };
                    let t = Token { orig: None, ch: c, touch: self.land(c, rng) };
                    tokens.insert(if self.cfg.insert_after { at + 1 } else { at }, t);
                }
            }
        }

        let noisy: String = tokens.iter().map(|t| t.ch as char).collect();
        let realized_ed = levenshtein(&noisy, gold);
        Ok(NoisePair {
            noisy,
            gold: gold.to_string(),
            realized_ed,
            edits,
            touches: Some(tokens.iter().map(|t| t.touch).collect()),
        })
    }

    /// Draw an edit count from the prior and corrupt, resampling until the
    /// result is non-empty and within the cap.
    pub fn synthesize_pair<R: Rng + ?Sized>(&self, gold: &str, rng: &mut R) -> Result<NoisePair, SynthError> {
        let cap = e_max(gold.len());
        for _ in 0..self.cfg.attempts_per_pair {
            let count = self.cfg.draw_edit_count(cap, rng);
            let pair = self.corrupt(gold, count, rng)?;
            if !pair.noisy.is_empty() && pair.realized_ed <= cap {
                return Ok(pair);
            }
        }
        Err(SynthError::Budget { word: gold.to_string(), attempts: self.cfg.attempts_per_pair })
    }

    /// Like [`synthesize_pair`](Self::synthesize_pair) but only accepts a
    /// realized distance of exactly `ed`.
    pub fn synthesize_at<R: Rng + ?Sized>(&self, gold: &str, ed: usize, rng: &mut R) -> Result<Option<NoisePair>, SynthError> {
        if ed > e_max(gold.len()) {
            return Ok(None);
        }
        for _ in 0..self.cfg.attempts_per_pair {
            let pair = self.corrupt(gold, ed, rng)?;
            if !pair.noisy.is_empty() && pair.realized_ed == ed {
                return Ok(Some(pair));
            }
        }
        Ok(None)
    }
}

/// Independent, reproducible rng stream for `(seed, a, b)`.
pub fn stream_rng(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub words: usize,
    pub targets: Vec<usize>,
    pub bins: Vec<usize>,
}

impl RegimeReport {
    pub fn total(&self) -> usize {
        self.bins.iter().sum()
    }

    /// Largest absolute gap between a bin's share and the uniform share.
    pub fn max_deviation(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            return 0.0;
        }
        let u = 1.0 / self.bins.len() as f64;
        self.bins.iter().map(|&b| (b as f64 / n as f64 - u).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub regimes: Vec<RegimeReport>,
    pub attempts: usize,
    pub rejections: usize,
    pub complete: bool,
    pub unique_words: usize,
}

const BATCH: usize = 2048;

/// Build a corpus of `size` pairs whose realized edit distances are spread
/// evenly over `0..=e_max` within each length regime. Regimes share `size` in
/// proportion to their word counts. Stops early with `complete = false` when
/// the rejection budget runs out.
pub fn balance_corpus(
    lexicon: &Lexicon,
    size: usize,
    synth: &Synthesizer<'_>,
) -> Result<(Vec<NoisePair>, BalanceReport), SynthError> {
    synth.cfg.validate()?;
    let groups: Vec<(Regime, Vec<&str>)> = Regime::ALL
        .iter()
        .map(|&r| (r, lexicon.words().iter().map(String::as_str).filter(|w| Regime::of(w.len()) == r).collect()))
        .collect();
    let total_words: usize = groups.iter().map(|g| g.1.len()).sum();
    if total_words == 0 {
        return Err(SynthError::EmptyLexicon);
    }

    // Largest-remainder split of `size` over regimes.
    let mut shares: Vec<usize> = groups.iter().map(|g| size * g.1.len() / total_words).collect();
    let mut rems: Vec<(usize, usize)> = groups.iter().enumerate().map(|(i, g)| ((size * g.1.len()) % total_words, i)).collect();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = size - shares.iter().sum::<usize>();
    for &(_, i) in rems.iter().take(short) {
        shares[i] += 1;
    }
    for ((r, words), &target) in groups.iter().zip(&shares) {
        if !words.is_empty() && target < 100 {
            return Err(SynthError::RegimeTooSmall { regime: *r, target });
        }
    }

    let mut corpus = Vec::with_capacity(size);
    let mut reports = Vec::new();
    let (mut attempts, mut rejections) = (0usize, 0usize);
    for (ri, ((regime, words), &target)) in groups.iter().zip(&shares).enumerate() {
        let nbins = regime.cap() + 1;
        let targets: Vec<usize> = (0..nbins).map(|b| target / nbins + usize::from(b < target % nbins)).collect();
        let mut bins = vec![0usize; nbins];
        let mut j = 0u64;
        while !words.is_empty() && bins.iter().zip(&targets).any(|(b, t)| b < t) && rejections < synth.cfg.corpus_budget {
            let open: Vec<usize> = (0..nbins).filter(|&b| bins[b] < targets[b]).collect();
            let missing: usize = open.iter().map(|&b| targets[b] - bins[b]).sum();
            let batch = missing.clamp(64, BATCH);
            let results: Vec<Result<(usize, Option<NoisePair>), SynthError>> = (j..j + batch as u64)
                .into_par_iter()
                .map(|k| {
                    let bin = open[(k as usize) % open.len()];
                    let mut rng = stream_rng(synth.cfg.seed, ri as u64, k);
                    let word = words[rng.random_range(0..words.len())];
                    let pair = synth.corrupt(word, bin, &mut rng)?;
                    let ok = !pair.noisy.is_empty() && pair.realized_ed == bin;
                    Ok((bin, ok.then_some(pair)))
                })
                .collect();
            j += batch as u64;
            for r in results {
                attempts += 1;
                match r? {
                    (bin, Some(pair)) if bins[bin] < targets[bin] => {
                        bins[bin] += 1;
                        corpus.push(pair);
                    }
                    _ => rejections += 1,
                }
            }
        }
        reports.push(RegimeReport { regime: *regime, words: words.len(), targets, bins });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(synth.cfg.seed);
    corpus.shuffle(&mut rng);
    let unique_words = corpus.iter().map(|p| p.gold.as_str()).collect::<std::collections::HashSet<_>>().len();
    let complete = reports.iter().all(|r| r.bins == r.targets);
    Ok((corpus, BalanceReport { regimes: reports, attempts, rejections, complete, unique_words }))
}

pub const TSV_HEADER: &str = "noisy\tgold\trealized_ed\tchannels";

fn format_point(p: Point) -> String {
    format!("{},{}", p.x, p.y)
}

/// Corpus as TSV. A fifth `touches` column is written when `with_touches` is
/// set and every pair carries touches.
pub fn write_corpus_tsv(pairs: &[NoisePair], with_touches: bool) -> String {
    let with_touches = with_touches && pairs.iter().all(|p| p.touches.is_some());
    let mut out = String::from(TSV_HEADER);
    if with_touches {
        out.push_str("\ttouches");
    }
    out.push('\n');
    for p in pairs {
        let tags = if p.edits.is_empty() {
            "-".to_string()
        } else {
            p.edits.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
        };
        out.push_str(&format!("{}\t{}\t{}\t{}", p.noisy, p.gold, p.realized_ed, tags));
        if with_touches {
            let t = p.touches.as_deref().unwrap_or_default();
            out.push('\t');
            out.push_str(&t.iter().map(|&q| format_point(q)).collect::<Vec<_>>().join(";"));
        }
        out.push('\n');
    }
    out
}

pub fn parse_corpus_tsv(text: &str) -> Result<Vec<NoisePair>, SynthError> {
    let mut lines = text.lines().enumerate();
    let with_touches = match lines.next() {
        Some((_, h)) if h == TSV_HEADER => false,
        Some((_, h)) if h == format!("{TSV_HEADER}\ttouches") => true,
        Some((_, h)) => return Err(SynthError::Format { line: 1, msg: format!("unexpected header {h:?}") }),
        None => return Ok(Vec::new()),
    };
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| SynthError::Format { line: i + 1, msg };
        let cols: Vec<&str> = line.split('\t').collect();
        let want = 4 + usize::from(with_touches);
        if cols.len() != want {
            return Err(err(format!("expected {want} columns, found {}", cols.len())));
        }
        let realized_ed = cols[2].parse().map_err(|_| err(format!("bad edit distance {:?}", cols[2])))?;
        let edits = if cols[3] == "-" {
            Vec::new()
        } else {
            cols[3].split(';').map(str::parse).collect::<Result<_, _>>().map_err(err)?
        };
        let touches = if with_touches {
            let pts = if cols[4].is_empty() {
                Vec::new()
            } else {
                cols[4]
                    .split(';')
                    .map(|s| {
                        let (x, y) = s.split_once(',')?;
                        Some(Point::new(x.parse().ok()?, y.parse().ok()?))
                    })
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| err(format!("bad touches {:?}", cols[4])))?
            };
            Some(pts)
        } else {
            None
        };
        out.push(NoisePair { noisy: cols[0].into(), gold: cols[1].into(), realized_ed, edits, touches });
    }
    Ok(out)
}
