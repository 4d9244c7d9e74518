//! Per-position edit propensity from simple geometry features.

use serde::{Deserialize, Serialize};

use crate::layout::{Hand, KeyLayout};

pub const FEATURES: usize = 4;

/// `exp(w · f)` over the features row distance from home, hand switch from the
/// previous letter, finger outerness and travel from the previous letter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityModel {
    pub weights: [f64; FEATURES],
}

impl Default for PropensityModel {
    fn default() -> Self {
        Self { weights: [0.3, 0.3, 0.2, 0.3] }
    }
}

/// Feature vector of position `i` of `word`.
pub fn features(layout: &KeyLayout, word: &[u8], i: usize) -> [f64; FEATURES] {
    let g = layout.letter(word[i] as char);
    let row_dist = f64::from(g.row.abs_diff(1));
    let outer = match g.hand {
        Hand::Left => f64::from(3u8.saturating_sub(g.finger)),
        Hand::Right => f64::from(g.finger.saturating_sub(6)),
    } / 3.0;
    let (switch, travel) = if i == 0 {
        (0.0, 0.0)
    } else {
        let p = layout.letter(word[i - 1] as char);
        let (px, py) = layout.key_pitch();
        let d = (((g.center.x - p.center.x) / px).powi(2) + ((g.center.y - p.center.y) / py).powi(2)).sqrt();
        (f64::from(u8::from(p.hand != g.hand)), d / 3.0)
    };
    [row_dist, switch, outer, travel]
}

impl PropensityModel {
    pub fn score(&self, f: &[f64; FEATURES]) -> f64 {
        self.weights.iter().zip(f).map(|(w, x)| w * x).sum::<f64>().exp()
    }

    pub fn propensities(&self, layout: &KeyLayout, word: &[u8]) -> Vec<f64> {
        (0..word.len()).map(|i| self.score(&features(layout, word, i))).collect()
    }

    /// Maximum-likelihood fit of the weights: each observed edit position is
    /// treated as a softmax draw over the word's positions.
    pub fn fit(layout: &KeyLayout, observations: &[(Vec<u8>, Vec<usize>)], iters: usize, lr: f64) -> Self {
        let mut w = [0.0; FEATURES];
        let feats: Vec<Vec<[f64; FEATURES]>> =
            observations.iter().map(|(word, _)| (0..word.len()).map(|i| features(layout, word, i)).collect()).collect();
        let events: usize = observations.iter().map(|(_, e)| e.len()).sum();
        if events == 0 {
            return Self::default();
        }
        for _ in 0..iters {
            let mut grad = [0.0; FEATURES];
            for ((_, edits), f) in observations.iter().zip(&feats) {
                if edits.is_empty() {
                    continue;
                }
                let scores: Vec<f64> = f.iter().map(|x| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()).collect();
                let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
                let mut expect = [0.0; FEATURES];
                for (s, x) in scores.iter().zip(f) {
                    let p = (s - m).exp() / z;
                    for d in 0..FEATURES {
                        expect[d] += p * x[d];
                    }
                }
                for &e in edits.iter().filter(|&&e| e < f.len()) {
                    for d in 0..FEATURES {
                        grad[d] += f[e][d] - expect[d];
                    }
                }
            }
            for d in 0..FEATURES {
                w[d] += lr * grad[d] / events as f64;
            }
        }
        Self { weights: w }
    }
}
