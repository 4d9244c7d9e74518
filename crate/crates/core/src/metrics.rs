//! Decoding accuracy and text-entry performance measures.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::edit::{distance_by, levenshtein};
use crate::pipeline::{RawTouchEvent, TouchKind};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("no trials")]
    NoTrials,
    #[error("duration must be positive, got {0} minutes")]
    Duration(f64),
    #[error("no presented words")]
    NoPresented,
    #[error("counts invalid: {0}")]
    Counts(String),
    #[error("log has no start marker")]
    NoStart,
    #[error("no intentional contacts")]
    NoIntentional,
    #[error("fewer than two intentional contacts per user; no gaps")]
    NoGaps,
}

/// Reference values reported alongside measured ones. They come from other
/// training data and human studies and are never asserted against.
pub mod reference {
    pub const NEURAL_TOP1: f64 = 0.848;
    pub const NGRAM_TOP1: f64 = 0.757;
    pub const BAYES_TOP1: f64 = 0.793;
    pub const AVG_ED_NEURAL: f64 = 0.318;
    pub const TEN_FINGER_WPM: f64 = 28.3;
    pub const BASELINE_WPM: f64 = 26.2;
    pub const TEN_FINGER_CER: f64 = 0.046;
    pub const BASELINE_CER: f64 = 0.0323;
    pub const INTENT_RATIO_MEAN: f64 = 0.367;
    pub const WITHIN_WORD_TIME: f64 = 0.825;
    pub const INTERVAL_FRACTION: f64 = 0.0217;
    pub const INTERVAL_CI: (f64, f64) = (0.0087, 0.0375);
    pub const MEDIAN_GAP_MS: f64 = 240.0;
    pub const REMOTE_INFERENCE_MS: f64 = 53.70;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LengthBucket {
    /// Up to 7 letters.
    Short,
    /// 8 to 14 letters.
    Medium,
    /// 15 letters or more.
    Long,
}

impl LengthBucket {
    pub fn of(len: usize) -> Self {
        match len {
            0..=7 => Self::Short,
            8..=14 => Self::Medium,
            _ => Self::Long,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Short => "<=7",
            Self::Medium => "8-14",
            Self::Long => ">=15",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub gold: String,
    /// Decoded words, best first. May be empty when the decoder produced nothing.
    pub ranked: Vec<String>,
    /// Edit distance between the decoder input and the gold word.
    pub input_ed: usize,
}

impl TrialRecord {
    pub fn bucket(&self) -> LengthBucket {
        LengthBucket::of(self.gold.len())
    }

    pub fn hit_at(&self, k: usize) -> bool {
        self.ranked.iter().take(k).any(|w| *w == self.gold)
    }

    /// Distance of the Top-1 output from gold; an empty ranking counts as
    /// the empty string.
    pub fn top1_ed(&self) -> usize {
        levenshtein(self.ranked.first().map_or("", String::as_str), &self.gold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub n: usize,
    /// Exact match within the first `k` ranks, keyed by `k`.
    pub em: BTreeMap<usize, f64>,
    pub avg_ed: f64,
}

impl Breakdown {
    fn of<'a>(trials: impl Iterator<Item = &'a TrialRecord> + Clone, ks: &[usize]) -> Self {
        let n = trials.clone().count();
        let nf = n.max(1) as f64;
        let em = ks.iter().map(|&k| (k, trials.clone().filter(|t| t.hit_at(k)).count() as f64 / nf)).collect();
        let avg_ed = trials.map(|t| t.top1_ed() as f64).sum::<f64>() / nf;
        Self { n, em, avg_ed }
    }

    pub fn em_at(&self, k: usize) -> f64 {
        self.em.get(&k).copied().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub overall: Breakdown,
    pub by_bucket: BTreeMap<LengthBucket, Breakdown>,
    pub by_input_ed: BTreeMap<usize, Breakdown>,
    /// Trials with an empty ranking.
    pub empty: usize,
}

pub const DEFAULT_KS: [usize; 4] = [1, 2, 3, 5];

pub fn topk_report(trials: &[TrialRecord], ks: &[usize]) -> Result<EvalReport, MetricsError> {
    if trials.is_empty() {
        return Err(MetricsError::NoTrials);
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut by_bucket = BTreeMap::new();
    for b in [LengthBucket::Short, LengthBucket::Medium, LengthBucket::Long] {
        let it = trials.iter().filter(move |t| t.bucket() == b);
        if it.clone().next().is_some() {
            by_bucket.insert(b, Breakdown::of(it, &ks));
        }
    }
    let mut by_input_ed = BTreeMap::new();
    let eds: std::collections::BTreeSet<usize> = trials.iter().map(|t| t.input_ed).collect();
    for e in eds {
        by_input_ed.insert(e, Breakdown::of(trials.iter().filter(move |t| t.input_ed == e), &ks));
    }
    Ok(EvalReport {
        overall: Breakdown::of(trials.iter(), &ks),
        by_bucket,
        by_input_ed,
        empty: trials.iter().filter(|t| t.ranked.is_empty()).count(),
    })
}

/// Words per minute with five characters to a word.
pub fn wpm(chars: usize, minutes: f64) -> Result<f64, MetricsError> {
    if !(minutes > 0.0) {
        return Err(MetricsError::Duration(minutes));
    }
    Ok(chars as f64 / (5.0 * minutes))
}

/// Word error rate: word-level minimum string distance over the number of
/// presented words.
pub fn wer<S: AsRef<str> + PartialEq>(transcribed: &[S], presented: &[S]) -> Result<f64, MetricsError> {
    if presented.is_empty() {
        return Err(MetricsError::NoPresented);
    }
    let a: Vec<&str> = transcribed.iter().map(AsRef::as_ref).collect();
    let b: Vec<&str> = presented.iter().map(AsRef::as_ref).collect();
    Ok(distance_by(&a, &b) as f64 / b.len() as f64)
}

pub fn wer_text(transcribed: &str, presented: &str) -> Result<f64, MetricsError> {
    let t: Vec<&str> = transcribed.split_whitespace().collect();
    let p: Vec<&str> = presented.split_whitespace().collect();
    wer(&t, &p)
}

/// Timestamped text-level events of a typing session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TextEvent {
    Start { t: f64 },
    Commit { t: f64, word: String },
    /// Backspace that removed an already committed word.
    DeleteWord { t: f64 },
    /// Backspace that cleared the word being typed.
    ClearWord { t: f64 },
    Replace { t: f64, word: String },
    Submit { t: f64 },
}

impl TextEvent {
    pub fn t(&self) -> f64 {
        match self {
            Self::Start { t }
            | Self::Commit { t, .. }
            | Self::DeleteWord { t }
            | Self::ClearWord { t }
            | Self::Replace { t, .. }
            | Self::Submit { t } => *t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionStats {
    /// Committed words later removed with Backspace, over all commits.
    pub cer: f64,
    /// Backspace corrections (word removals and mid-word clears) per minute.
    pub per_minute: f64,
    pub commits: usize,
    pub corrected: usize,
}

pub fn correction_stats(log: &[TextEvent]) -> Result<CorrectionStats, MetricsError> {
    let start = log
        .iter()
        .find_map(|e| matches!(e, TextEvent::Start { .. }).then(|| e.t()))
        .ok_or(MetricsError::NoStart)?;
    let end = log.iter().map(TextEvent::t).fold(start, f64::max);
    let commits = log.iter().filter(|e| matches!(e, TextEvent::Commit { .. })).count();
    let corrected = log.iter().filter(|e| matches!(e, TextEvent::DeleteWord { .. })).count();
    let clears = log.iter().filter(|e| matches!(e, TextEvent::ClearWord { .. })).count();
    let minutes = (end - start) / 60_000.0;
    let per_minute = if minutes > 0.0 { (corrected + clears) as f64 / minutes } else { 0.0 };
    let cer = if commits == 0 { 0.0 } else { corrected as f64 / commits as f64 };
    Ok(CorrectionStats { cer, per_minute, commits, corrected })
}

/// Equal-weight mean of the intended share of threads and of events.
pub fn intent_ratio(
    intended_threads: usize,
    total_threads: usize,
    intended_events: usize,
    total_events: usize,
) -> Result<f64, MetricsError> {
    if total_threads == 0 || total_events == 0 {
        return Err(MetricsError::Counts("zero totals".into()));
    }
    if intended_threads > total_threads || intended_events > total_events {
        return Err(MetricsError::Counts("intended exceeds total".into()));
    }
    Ok(0.5 * intended_threads as f64 / total_threads as f64 + 0.5 * intended_events as f64 / total_events as f64)
}

/// Shares of session time spent inside words and between them, from
/// per-word `(first, last)` timestamps and the session span.
pub fn time_allocation_spans(words: &[(f64, f64)], session: (f64, f64)) -> (f64, f64) {
    let total = session.1 - session.0;
    if words.len() <= 1 || !(total > 0.0) {
        return (1.0, 0.0);
    }
    let within: f64 = words.iter().map(|(a, b)| (b - a).max(0.0)).sum::<f64>().min(total);
    let w = within / total;
    (w, 1.0 - w)
}

/// Time allocation of one session's touch log, with words delimited by
/// `word_id`.
pub fn time_allocation(events: &[RawTouchEvent]) -> (f64, f64) {
    let mut spans: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for e in events {
        let s = spans.entry(e.word_id).or_insert((e.t, e.t));
        s.0 = s.0.min(e.t);
        s.1 = s.1.max(e.t);
    }
    let first = events.iter().map(|e| e.t).fold(f64::INFINITY, f64::min);
    let last = events.iter().map(|e| e.t).fold(f64::NEG_INFINITY, f64::max);
    time_allocation_spans(&spans.into_values().collect::<Vec<_>>(), (first, last))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserGaps {
    pub gaps: usize,
    pub at_or_below: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalStudyResult {
    pub threshold_ms: f64,
    /// Pooled share of adjacent intentional gaps at or below the threshold.
    pub fraction: f64,
    pub ci: (f64, f64),
    pub median_gap_ms: f64,
    pub gaps: usize,
    pub per_user: BTreeMap<String, UserGaps>,
    /// Pooled fractions at `threshold ∓ jitter`, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalStudyConfig {
    pub threshold_ms: f64,
    pub reps: usize,
    pub seed: u64,
    pub jitter_ms: Option<f64>,
}

impl Default for IntervalStudyConfig {
    fn default() -> Self {
        Self { threshold_ms: 100.0, reps: 10_000, seed: 0, jitter_ms: None }
    }
}

/// Adjacent inter-onset gaps of intentional contacts, per user. The session
/// field of each event identifies the user.
pub fn intentional_gaps(events: &[RawTouchEvent]) -> BTreeMap<String, Vec<f64>> {
    let mut onsets: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for e in events.iter().filter(|e| e.kind == TouchKind::Down && e.intent == Some(true)) {
        onsets.entry(e.session.clone()).or_default().push(e.t);
    }
    onsets
        .into_iter()
        .map(|(u, mut t)| {
            t.sort_by(f64::total_cmp);
            (u, t.windows(2).map(|w| w[1] - w[0]).collect())
        })
        .collect()
}

fn pooled(users: &[&Vec<f64>], threshold: f64) -> f64 {
    let n: usize = users.iter().map(|g| g.len()).sum();
    let k: usize = users.iter().map(|g| g.iter().filter(|&&x| x <= threshold).count()).sum();
    if n == 0 { 0.0 } else { k as f64 / n as f64 }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Share of intentional inter-onset gaps at or below a threshold, with a
/// percentile bootstrap CI that resamples users with replacement.
pub fn interval_study(events: &[RawTouchEvent], cfg: &IntervalStudyConfig) -> Result<IntervalStudyResult, MetricsError> {
    if !events.iter().any(|e| e.kind == TouchKind::Down && e.intent == Some(true)) {
        return Err(MetricsError::NoIntentional);
    }
    let by_user = intentional_gaps(events);
    let users: Vec<&Vec<f64>> = by_user.values().filter(|g| !g.is_empty()).collect();
    let total: usize = users.iter().map(|g| g.len()).sum();
    if total == 0 {
        return Err(MetricsError::NoGaps);
    }
    let th = cfg.threshold_ms;
    let fraction = pooled(&users, th);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stats: Vec<f64> = (0..cfg.reps.max(1))
        .map(|_| {
            let pick: Vec<&Vec<f64>> = (0..users.len()).map(|_| users[rng.random_range(0..users.len())]).collect();
            pooled(&pick, th)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let ci = (percentile(&stats, 0.025), percentile(&stats, 0.975));

    let mut all: Vec<f64> = users.iter().flat_map(|g| g.iter().copied()).collect();
    all.sort_by(f64::total_cmp);
    let median_gap_ms = percentile(&all, 0.5);

    let per_user = by_user
        .iter()
        .map(|(u, g)| {
            let k = g.iter().filter(|&&x| x <= th).count();
            let fraction = if g.is_empty() { 0.0 } else { k as f64 / g.len() as f64 };
            (u.clone(), UserGaps { gaps: g.len(), at_or_below: k, fraction })
        })
        .collect();
    let jitter = cfg.jitter_ms.map(|j| (pooled(&users, th - j), pooled(&users, th + j)));
    Ok(IntervalStudyResult { threshold_ms: th, fraction, ci, median_gap_ms, gaps: total, per_user, jitter })
}
