//! Co-activation of resting fingers: which letters fire alongside an intended
//! press, per posture bucket.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::layout::{Bucket, KeyLayout};

/// One observed cluster: the intended letter, the posture bucket and the
/// letters its other members landed on.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedCluster {
    pub intended: char,
    pub bucket: Bucket,
    pub co_fired: Vec<char>,
}

/// Swap propensity between adjacent letters: `base · row_decay^Δrow`, scaled by
/// `cross_hand` when the letters belong to different hands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapRule {
    pub base: f64,
    pub row_decay: f64,
    pub cross_hand: f64,
}

impl Default for SwapRule {
    fn default() -> Self {
        Self { base: 1.0, row_decay: 0.5, cross_hand: 0.4 }
    }
}

impl SwapRule {
    pub fn propensity(&self, layout: &KeyLayout, a: char, b: char) -> f64 {
        let (ga, gb) = (layout.letter(a), layout.letter(b));
        let rows = ga.row.abs_diff(gb.row) as i32;
        let hand = if ga.hand == gb.hand { 1.0 } else { self.cross_hand };
        self.base * self.row_decay.powi(rows) * hand
    }
}

/// `P(c | a, bucket)` as add-k smoothed counts over the 26 letters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoActTable {
    /// `counts[a][bucket][c]`.
    pub counts: Vec<Vec<[f64; 26]>>,
    pub k: f64,
    pub swap: SwapRule,
}

fn li(c: char) -> usize {
    (c as u8 - b'a') as usize
}

impl CoActTable {
    pub fn empty(k: f64) -> Self {
        Self { counts: vec![vec![[0.0; 26]; Bucket::COUNT]; 26], k, swap: SwapRule::default() }
    }

    /// Adjacency-biased prior used when no logs are available: neighbors in
    /// key-pitch units get `20·exp(-d²/2)` pseudo-counts in every bucket.
    pub fn adjacency_default(layout: &KeyLayout, k: f64) -> Self {
        let mut t = Self::empty(k);
        let (px, py) = layout.key_pitch();
        for a in 'a'..='z' {
            let ca = layout.center(a);
            let mut row = [0.0; 26];
            for c in ('a'..='z').filter(|&c| c != a) {
                let cc = layout.center(c);
                let d2 = ((ca.x - cc.x) / px).powi(2) + ((ca.y - cc.y) / py).powi(2);
                row[li(c)] = 20.0 * (-d2 / 2.0).exp();
            }
            t.counts[li(a)] = vec![row; Bucket::COUNT];
        }
        t
    }

    pub fn fit(clusters: &[AnnotatedCluster], k: f64) -> Self {
        let mut t = Self::empty(k);
        for cl in clusters {
            for &c in &cl.co_fired {
                if c.is_ascii_lowercase() && cl.intended.is_ascii_lowercase() {
                    t.counts[li(cl.intended)][cl.bucket.index()][li(c)] += 1.0;
                }
            }
        }
        t
    }

    pub fn prob(&self, c: char, a: char, bucket: Bucket) -> f64 {
        let row = &self.counts[li(a)][bucket.index()];
        let total: f64 = row.iter().sum();
        (row[li(c)] + self.k) / (total + 26.0 * self.k)
    }

    pub fn distribution(&self, a: char, bucket: Bucket) -> [f64; 26] {
        let mut out = [0.0; 26];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.prob((b'a' + i as u8) as char, a, bucket);
        }
        out
    }

    /// Draw a co-activated letter other than `a` itself.
    pub fn sample<R: Rng + ?Sized>(&self, a: char, bucket: Bucket, rng: &mut R) -> char {
        let mut dist = self.distribution(a, bucket);
        dist[li(a)] = 0.0;
        sample_index(&dist, rng).map_or(a, |i| (b'a' + i as u8) as char)
    }
}

/// Index drawn proportionally to non-negative `weights`; `None` if all zero.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return Some(i);
            }
            u -= w;
            last = Some(i);
        }
    }
    last
}
