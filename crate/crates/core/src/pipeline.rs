//! From raw multi-touch events to a letter sequence.
//!
//! Three stages run per word:
//!
//! 1. [`ThreadTracker`] stitches anonymous down/move/up samples into touch
//!    threads, associating each sample with the nearest open thread through a
//!    uniform grid over the keyboard plane.
//! 2. [`cluster_threads`] sorts threads by onset and grows clusters greedily:
//!    a thread joins the current cluster when its onset is within `tau_c` of
//!    the cluster's first onset. Oversized clusters (hand placement) are
//!    discarded.
//! 3. [`select_representative`] keeps one thread per cluster, the one that
//!    travelled farthest from the decaying [`HandStateCloud`] of recent
//!    contacts, preferring the latest onset when scores are nearly tied.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::{Key, KeyLayout, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("event at t={t} ms precedes the previous event at t={last} ms")]
    OutOfOrder { t: f64, last: f64 },
    #[error("event rejected: position ({x}, {y}) is outside the unit square")]
    OutOfBounds { x: f64, y: f64 },
    #[error("event rejected: non-finite timestamp or position")]
    NonFinite,
    #[error("cannot select a representative from an empty cluster")]
    EmptyCluster,
    #[error("invalid pipeline config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TouchKind {
    Down,
    Move,
    Up,
}

/// One line of a touch log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTouchEvent {
    pub session: String,
    pub word_id: i64,
    pub kind: TouchKind,
    /// Milliseconds, non-decreasing within a session.
    pub t: f64,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub intent: Option<bool>,
}

impl RawTouchEvent {
    pub fn new(kind: TouchKind, t: f64, p: Point) -> Self {
        Self { session: String::new(), word_id: 0, kind, t, x: p.x, y: p.y, intent: None }
    }

    pub fn pos(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Parse a JSONL touch log, skipping blank lines.
pub fn parse_touch_log(text: &str) -> Result<Vec<RawTouchEvent>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

pub fn write_touch_log(events: &[RawTouchEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}

/// Tunables for the whole pipeline. None of these are published values; the
/// defaults were picked so a stationary fingertip keeps re-associating and
/// four or more simultaneous onsets read as hand placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Cognitive window in ms.
    pub tau_c: f64,
    /// Largest cluster still treated as a keystroke.
    pub kappa: usize,
    /// Spatial hash cell size.
    pub cell: f64,
    /// Association radius; must not exceed `cell`.
    pub r_g: f64,
    /// Association time gap in ms.
    pub t_gap: f64,
    pub rho: f64,
    /// Decay step in ms.
    pub delta: f64,
    /// Cloud horizon in ms.
    pub t_max: f64,
    pub epsilon: f64,
    /// Relative travel-score tolerance below which scores count as tied.
    pub tie_tolerance: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau_c: 100.0,
            kappa: 3,
            cell: 0.06,
            r_g: 0.05,
            t_gap: 120.0,
            rho: 0.9,
            delta: 50.0,
            t_max: 1000.0,
            epsilon: 1e-3,
            tie_tolerance: 0.05,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.into()));
        if !(self.tau_c > 0.0) {
            return bad("tau_c must be positive");
        }
        if self.kappa < 1 {
            return bad("kappa must be at least 1");
        }
        if !(self.cell > 0.0 && self.r_g > 0.0) {
            return bad("cell and r_g must be positive");
        }
        // The 3x3 probe only covers radius `cell` around the query point.
        if self.r_g > self.cell {
            return bad("r_g must not exceed the grid cell size");
        }
        if !(self.t_gap > 0.0 && self.delta > 0.0 && self.t_max > 0.0) {
            return bad("t_gap, delta and t_max must be positive");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must lie in (0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(0.0..1.0).contains(&self.tie_tolerance) {
            return bad("tie_tolerance must lie in [0, 1)");
        }
        Ok(())
    }
}

pub type ThreadId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CloseReason {
    Up,
    /// No sample arrived within `t_gap`.
    Timeout,
    /// Still open when the word ended.
    Flush,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TouchThread {
    pub id: ThreadId,
    pub t_start: f64,
    pub t_end: f64,
    pub start: Point,
    pub end: Point,
    /// Down position followed by every associated move.
    pub polyline: Vec<Point>,
    pub open: bool,
    pub closed_by: Option<CloseReason>,
    /// Raw events folded into this thread, including down and up.
    pub events: usize,
    /// Label carried by the down event in annotated logs.
    pub intent: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ingest {
    Opened(ThreadId),
    Extended(ThreadId),
    Closed(ThreadId),
    Stray,
}

/// Incremental thread formation for one session stream.
#[derive(Debug, Clone)]
pub struct ThreadTracker {
    cell: f64,
    r_g: f64,
    t_gap: f64,
    open: HashMap<ThreadId, TouchThread>,
    grid: HashMap<(i64, i64), Vec<ThreadId>>,
    closed: Vec<TouchThread>,
    next_id: ThreadId,
    last_t: Option<f64>,
    strays: usize,
    downs: usize,
}

impl ThreadTracker {
    pub fn new(cfg: &PipelineConfig) -> Self {
        Self {
            cell: cfg.cell,
            r_g: cfg.r_g,
            t_gap: cfg.t_gap,
            open: HashMap::new(),
            grid: HashMap::new(),
            closed: Vec::new(),
            next_id: 0,
            last_t: None,
            strays: 0,
            downs: 0,
        }
    }

    fn cell_of(&self, p: Point) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn grid_remove(&mut self, id: ThreadId, p: Point) {
        let c = self.cell_of(p);
        if let Some(v) = self.grid.get_mut(&c) {
            v.retain(|&x| x != id);
            if v.is_empty() {
                self.grid.remove(&c);
            }
        }
    }

    fn grid_insert(&mut self, id: ThreadId, p: Point) {
        let c = self.cell_of(p);
        self.grid.entry(c).or_default().push(id);
    }

    fn close(&mut self, id: ThreadId, reason: CloseReason) {
        if let Some(mut th) = self.open.remove(&id) {
            self.grid_remove(id, th.end);
            th.open = false;
            th.closed_by = Some(reason);
            self.closed.push(th);
        }
    }

    /// Close threads that can no longer be extended at time `now`.
    fn expire(&mut self, now: f64) {
        let mut stale: Vec<ThreadId> = self
            .open
            .values()
            .filter(|th| now - th.t_end > self.t_gap)
            .map(|th| th.id)
            .collect();
        stale.sort_unstable();
        for id in stale {
            self.close(id, CloseReason::Timeout);
        }
    }

    fn associate(&self, p: Point, t: f64) -> Option<ThreadId> {
        let (cx, cy) = self.cell_of(p);
        let r2 = self.r_g * self.r_g;
        let mut best: Option<(f64, ThreadId)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(ids) = self.grid.get(&(cx + dx, cy + dy)) else { continue };
                for &id in ids {
                    let th = &self.open[&id];
                    if t - th.t_end > self.t_gap {
                        continue;
                    }
                    let d = th.end.dist2(p);
                    if d > r2 {
                        continue;
                    }
                    if best.is_none_or(|(bd, bid)| d < bd || (d == bd && id < bid)) {
                        best = Some((d, id));
                    }
                }
            }
        }
        best.map(|(_, id)| id)
    }

    pub fn ingest(&mut self, e: &RawTouchEvent) -> Result<Ingest, PipelineError> {
        if !e.t.is_finite() || !e.x.is_finite() || !e.y.is_finite() {
            return Err(PipelineError::NonFinite);
        }
        if !(0.0..=1.0).contains(&e.x) || !(0.0..=1.0).contains(&e.y) {
            return Err(PipelineError::OutOfBounds { x: e.x, y: e.y });
        }
        if let Some(last) = self.last_t {
            if e.t < last {
                return Err(PipelineError::OutOfOrder { t: e.t, last });
            }
        }
        self.last_t = Some(e.t);
        self.expire(e.t);
        let p = e.pos();
        match e.kind {
            TouchKind::Down => {
                let id = self.next_id;
                self.next_id += 1;
                self.downs += 1;
                self.open.insert(
                    id,
                    TouchThread {
                        id,
                        t_start: e.t,
                        t_end: e.t,
                        start: p,
                        end: p,
                        polyline: vec![p],
                        open: true,
                        closed_by: None,
                        events: 1,
                        intent: e.intent,
                    },
                );
                self.grid_insert(id, p);
                Ok(Ingest::Opened(id))
            }
            TouchKind::Move | TouchKind::Up => {
                let Some(id) = self.associate(p, e.t) else {
                    self.strays += 1;
                    return Ok(Ingest::Stray);
                };
                let old = self.open[&id].end;
                self.grid_remove(id, old);
                let th = self.open.get_mut(&id).expect("associated thread is open");
                th.end = p;
                th.t_end = e.t;
                th.events += 1;
                if e.kind == TouchKind::Move {
                    th.polyline.push(p);
                    self.grid_insert(id, p);
                    Ok(Ingest::Extended(id))
                } else {
                    self.grid_insert(id, p);
                    self.close(id, CloseReason::Up);
                    Ok(Ingest::Closed(id))
                }
            }
        }
    }

    /// Close every open thread, e.g. at the end of a word.
    pub fn flush(&mut self) {
        let mut ids: Vec<ThreadId> = self.open.keys().copied().collect();
        ids.sort_unstable();
        for id in ids {
            self.close(id, CloseReason::Flush);
        }
    }

    pub fn closed(&self) -> &[TouchThread] {
        &self.closed
    }

    pub fn take_closed(&mut self) -> Vec<TouchThread> {
        std::mem::take(&mut self.closed)
    }

    pub fn open_threads(&self) -> impl Iterator<Item = &TouchThread> {
        self.open.values()
    }

    pub fn open_count(&self) -> usize {
        self.open.len()
    }

    pub fn strays(&self) -> usize {
        self.strays
    }

    pub fn downs(&self) -> usize {
        self.downs
    }

    /// Forget every thread and counter but keep the stream clock.
    pub fn reset(&mut self) {
        self.open.clear();
        self.grid.clear();
        self.closed.clear();
        self.strays = 0;
        self.downs = 0;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeCluster {
    pub anchor_onset: f64,
    pub members: Vec<TouchThread>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Clustering {
    /// Every cluster in onset order, including discarded ones.
    pub clusters: Vec<TimeCluster>,
    pub retained: Vec<bool>,
    pub discarded: usize,
}

impl Clustering {
    pub fn retained(&self) -> impl Iterator<Item = &TimeCluster> {
        self.clusters.iter().zip(&self.retained).filter(|(_, &r)| r).map(|(c, _)| c)
    }
}

/// Greedy onset clustering against the cluster anchor (its first onset).
pub fn cluster_threads(threads: &[TouchThread], cfg: &PipelineConfig) -> Clustering {
    let mut sorted: Vec<&TouchThread> = threads.iter().collect();
    sorted.sort_by(|a, b| a.t_start.total_cmp(&b.t_start).then(a.id.cmp(&b.id)));
    let mut clusters: Vec<TimeCluster> = Vec::new();
    for th in sorted {
        match clusters.last_mut() {
            Some(c) if th.t_start - c.anchor_onset <= cfg.tau_c => c.members.push(th.clone()),
            _ => clusters.push(TimeCluster { anchor_onset: th.t_start, members: vec![th.clone()] }),
        }
    }
    let retained: Vec<bool> = clusters.iter().map(|c| c.members.len() <= cfg.kappa).collect();
    let discarded = retained.iter().filter(|&&r| !r).count();
    Clustering { clusters, retained, discarded }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub pos: Point,
    pub t: f64,
}

/// Decaying memory of recent contact positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandStateCloud {
    pub points: Vec<CloudPoint>,
    pub rho: f64,
    pub delta: f64,
    pub t_max: f64,
    pub epsilon: f64,
}

impl HandStateCloud {
    pub fn new(cfg: &PipelineConfig) -> Self {
        Self { points: Vec::new(), rho: cfg.rho, delta: cfg.delta, t_max: cfg.t_max, epsilon: cfg.epsilon }
    }

    /// `rho^((t - tau) / delta)`.
    pub fn weight(&self, tau: f64, t: f64) -> f64 {
        self.rho.powf((t - tau) / self.delta)
    }

    /// Append contacts and drop points older than `t_max` relative to `now`.
    /// A point aged exactly `t_max` is kept.
    pub fn update(&mut self, contacts: &[(Point, f64)], now: f64) {
        self.points.extend(contacts.iter().map(|&(pos, t)| CloudPoint { pos, t }));
        self.prune(now);
    }

    pub fn prune(&mut self, now: f64) {
        let t_max = self.t_max;
        self.points.retain(|p| now - p.t <= t_max);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Score given to candidates when the cloud has nothing to compare against.
pub const EMPTY_CLOUD_SCORE: f64 = f64::MAX;

/// Time-discounted distance of a candidate from the cloud:
/// `min_m |x - p_m| / max(w_m(t), epsilon)` over points seen no later than
/// `t` and no older than the horizon.
pub fn travel_score(pos: Point, t: f64, cloud: &HandStateCloud) -> f64 {
    let mut best = f64::INFINITY;
    for p in &cloud.points {
        if p.t > t || t - p.t > cloud.t_max {
            continue;
        }
        let w = cloud.weight(p.t, t).max(cloud.epsilon);
        best = best.min(pos.dist(p.pos) / w);
    }
    if best.is_finite() {
        best
    } else {
        EMPTY_CLOUD_SCORE
    }
}

/// Member with the highest travel score; near-ties go to the latest onset.
pub fn select_representative(
    cluster: &TimeCluster,
    cloud: &HandStateCloud,
    cfg: &PipelineConfig,
) -> Result<ThreadId, PipelineError> {
    let scores: Vec<f64> = cluster.members.iter().map(|m| travel_score(m.end, m.t_start, cloud)).collect();
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return Err(PipelineError::EmptyCluster);
    }
    let floor = best - cfg.tie_tolerance * best;
    cluster
        .members
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| s >= floor)
        .max_by(|(a, _), (b, _)| a.t_start.total_cmp(&b.t_start).then(a.id.cmp(&b.id)))
        .map(|(m, _)| m.id)
        .ok_or(PipelineError::EmptyCluster)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Representative {
    pub thread: ThreadId,
    pub pos: Point,
    pub onset: f64,
    pub key: Key,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedCluster {
    pub members: Vec<ThreadId>,
    pub representative: Representative,
    pub last_onset: f64,
}

/// Per-thread verdict, used for live touch markers and intent statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TouchMark {
    pub thread: ThreadId,
    pub pos: Point,
    pub onset: f64,
    pub events: usize,
    pub intent: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineOutput {
    pub letters: String,
    /// Letter-key representatives in onset order, one per letter.
    pub representatives: Vec<Representative>,
    /// Representatives that landed on control keys.
    pub controls: Vec<Representative>,
    pub suppressed: Vec<ThreadId>,
    pub discarded_clusters: usize,
    /// Retained clusters in onset order, control clusters included.
    pub clusters: Vec<ResolvedCluster>,
    pub marks: Vec<TouchMark>,
}

/// Select representatives cluster by cluster, feeding every contact (kept,
/// suppressed or discarded) into `cloud` as it goes.
pub fn resolve_clusters(
    clustering: &Clustering,
    cloud: &mut HandStateCloud,
    layout: &KeyLayout,
    cfg: &PipelineConfig,
) -> PipelineOutput {
    let mut out = PipelineOutput { discarded_clusters: clustering.discarded, ..Default::default() };
    for (cluster, &keep) in clustering.clusters.iter().zip(&clustering.retained) {
        let chosen = if keep { select_representative(cluster, cloud, cfg).ok() } else { None };
        for m in &cluster.members {
            let intent = Some(m.id) == chosen;
            out.marks.push(TouchMark { thread: m.id, pos: m.start, onset: m.t_start, events: m.events, intent });
            if !intent {
                out.suppressed.push(m.id);
            }
        }
        if let Some(id) = chosen {
            let m = cluster.members.iter().find(|m| m.id == id).expect("chosen member");
            let rep = Representative { thread: id, pos: m.start, onset: m.t_start, key: layout.key_at(m.start) };
            match rep.key.as_letter() {
                Some(c) => {
                    out.letters.push(c);
                    out.representatives.push(rep);
                }
                None => out.controls.push(rep),
            }
            out.clusters.push(ResolvedCluster {
                members: cluster.members.iter().map(|m| m.id).collect(),
                representative: rep,
                last_onset: cluster.members.last().map_or(m.t_start, |l| l.t_start),
            });
        }
        let mut contacts = Vec::with_capacity(cluster.members.len() * 2);
        let mut now = f64::NEG_INFINITY;
        for m in &cluster.members {
            contacts.push((m.start, m.t_start));
            contacts.push((m.end, m.t_end));
            now = now.max(m.t_end);
        }
        cloud.update(&contacts, now);
    }
    out
}

/// Run the full pipeline over one word's event stream, starting from an empty
/// cloud.
pub fn run_pipeline(
    events: &[RawTouchEvent],
    layout: &KeyLayout,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    cfg.validate()?;
    let mut tracker = ThreadTracker::new(cfg);
    for e in events {
        tracker.ingest(e)?;
    }
    tracker.flush();
    let threads = tracker.take_closed();
    let clustering = cluster_threads(&threads, cfg);
    let mut cloud = HandStateCloud::new(cfg);
    Ok(resolve_clusters(&clustering, &mut cloud, layout, cfg))
}
