//! Per-letter 2D Gaussian mixtures over fingertip landing offsets.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::SynthError;

/// Letters with fewer samples than this use the pooled mixture.
pub const MIN_SAMPLES: usize = 8;
pub const COMPONENTS: usize = 2;
const COV_REG: f64 = 1e-6;
const EM_ITERS: usize = 200;
const KMEANS_ITERS: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaussian2 {
    pub weight: f64,
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl Gaussian2 {
    fn det(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    pub fn log_density(&self, x: [f64; 2]) -> f64 {
        let det = self.det();
        let dx = x[0] - self.mean[0];
        let dy = x[1] - self.mean[1];
        let (a, b, c) = (self.cov[0][0], self.cov[0][1], self.cov[1][1]);
        let maha = (c * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
        -0.5 * maha - (2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        let l00 = self.cov[0][0].sqrt();
        let l10 = self.cov[1][0] / l00;
        let l11 = (self.cov[1][1] - l10 * l10).max(0.0).sqrt();
        [self.mean[0] + l00 * z0, self.mean[1] + l10 * z0 + l11 * z1]
    }

    fn is_valid(&self) -> bool {
        self.weight > 0.0 && self.cov[0][0] > 0.0 && self.det() > 0.0 && (self.cov[0][1] - self.cov[1][0]).abs() < 1e-15
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub components: Vec<Gaussian2>,
}

impl Mixture {
    pub fn isotropic(sx: f64, sy: f64) -> Self {
        Self {
            components: vec![Gaussian2 { weight: 1.0, mean: [0.0, 0.0], cov: [[sx * sx, 0.0], [0.0, sy * sy]] }],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for c in &self.components {
            acc += c.weight;
            if u < acc {
                return c.sample(rng);
            }
        }
        self.components.last().expect("non-empty mixture").sample(rng)
    }

    pub fn log_density(&self, x: [f64; 2]) -> f64 {
        let terms: Vec<f64> = self.components.iter().map(|c| c.weight.ln() + c.log_density(x)).collect();
        log_sum_exp(&terms)
    }

    pub fn is_valid(&self) -> bool {
        !self.components.is_empty()
            && self.components.iter().all(Gaussian2::is_valid)
            && (self.components.iter().map(|c| c.weight).sum::<f64>() - 1.0).abs() < 1e-9
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Fit a `k`-component mixture with k-means initialisation and EM.
/// Deterministic for a given `seed`.
pub fn fit_mixture(samples: &[[f64; 2]], k: usize, seed: u64) -> Mixture {
    assert!(!samples.is_empty(), "fit_mixture needs samples");
    let k = k.clamp(1, samples.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding then Lloyd iterations.
    let mut centers = vec![*samples.choose(&mut rng).expect("non-empty")];
    while centers.len() < k {
        let d: Vec<f64> = samples.iter().map(|s| centers.iter().map(|c| d2(*s, *c)).fold(f64::INFINITY, f64::min)).collect();
        let total: f64 = d.iter().sum();
        if total <= 0.0 {
            centers.push(centers[0]);
            continue;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = samples.len() - 1;
        for (i, di) in d.iter().enumerate() {
            if u < *di {
                pick = i;
                break;
            }
            u -= di;
        }
        centers.push(samples[pick]);
    }
    let mut assign = vec![0usize; samples.len()];
    for _ in 0..KMEANS_ITERS {
        for (a, s) in assign.iter_mut().zip(samples) {
            *a = (0..k).min_by(|&i, &j| d2(*s, centers[i]).total_cmp(&d2(*s, centers[j]))).unwrap();
        }
        for (j, c) in centers.iter_mut().enumerate() {
            let members: Vec<&[f64; 2]> = samples.iter().zip(&assign).filter(|(_, &a)| a == j).map(|(s, _)| s).collect();
            if !members.is_empty() {
                let n = members.len() as f64;
                *c = [members.iter().map(|m| m[0]).sum::<f64>() / n, members.iter().map(|m| m[1]).sum::<f64>() / n];
            }
        }
    }

    let n = samples.len();
    let mut resp = vec![vec![0.0; k]; n];
    for (r, &a) in resp.iter_mut().zip(&assign) {
        r[a] = 1.0;
    }
    let mut mix = m_step(samples, &resp, k);
    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..EM_ITERS {
        let mut ll = 0.0;
        for (r, s) in resp.iter_mut().zip(samples) {
            let terms: Vec<f64> = mix.components.iter().map(|c| c.weight.ln() + c.log_density(*s)).collect();
            let norm = log_sum_exp(&terms);
            ll += norm;
            for (ri, t) in r.iter_mut().zip(&terms) {
                *ri = (t - norm).exp();
            }
        }
        mix = m_step(samples, &resp, k);
        if (ll - prev_ll).abs() < 1e-10 * ll.abs().max(1.0) {
            break;
        }
        prev_ll = ll;
    }
    mix
}

fn m_step(samples: &[[f64; 2]], resp: &[Vec<f64>], k: usize) -> Mixture {
    let n = samples.len() as f64;
    let mut components = Vec::with_capacity(k);
    for j in 0..k {
        let nk: f64 = resp.iter().map(|r| r[j]).sum();
        if nk <= 1e-12 {
            continue;
        }
        let mx = samples.iter().zip(resp).map(|(s, r)| r[j] * s[0]).sum::<f64>() / nk;
        let my = samples.iter().zip(resp).map(|(s, r)| r[j] * s[1]).sum::<f64>() / nk;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for (s, r) in samples.iter().zip(resp) {
            let (dx, dy) = (s[0] - mx, s[1] - my);
            sxx += r[j] * dx * dx;
            sxy += r[j] * dx * dy;
            syy += r[j] * dy * dy;
        }
        let (sxx, sxy, syy) = (sxx / nk + COV_REG, sxy / nk, syy / nk + COV_REG);
        components.push(Gaussian2 { weight: nk / n, mean: [mx, my], cov: [[sxx, sxy], [sxy, syy]] });
    }
    let total: f64 = components.iter().map(|c| c.weight).sum();
    for c in &mut components {
        c.weight /= total;
    }
    Mixture { components }
}

fn d2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Landing-offset mixtures for every letter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetGmm {
    pub letters: BTreeMap<char, Mixture>,
    pub pooled: Mixture,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GmmFitReport {
    pub sample_counts: BTreeMap<char, usize>,
    /// Letters that fell back to the pooled mixture.
    pub pooled_letters: Vec<char>,
}

impl OffsetGmm {
    pub fn uniform(mixture: Mixture) -> Self {
        Self { letters: ('a'..='z').map(|c| (c, mixture.clone())).collect(), pooled: mixture }
    }

    pub fn for_letter(&self, c: char) -> &Mixture {
        self.letters.get(&c).unwrap_or(&self.pooled)
    }

    pub fn sample<R: Rng + ?Sized>(&self, c: char, rng: &mut R) -> [f64; 2] {
        self.for_letter(c).sample(rng)
    }
}

/// Fit one mixture per letter; sparse letters share the pooled fit.
pub fn fit_offset_gmm(samples: &BTreeMap<char, Vec<[f64; 2]>>, seed: u64) -> Result<(OffsetGmm, GmmFitReport), SynthError> {
    let pooled_samples: Vec<[f64; 2]> = samples.values().flatten().copied().collect();
    if pooled_samples.is_empty() {
        return Err(SynthError::NoSamples);
    }
    let pooled = fit_mixture(&pooled_samples, COMPONENTS, seed);
    let mut report = GmmFitReport::default();
    let mut letters = BTreeMap::new();
    for c in 'a'..='z' {
        let s = samples.get(&c).map_or(&[][..], Vec::as_slice);
        report.sample_counts.insert(c, s.len());
        if s.len() < MIN_SAMPLES {
            report.pooled_letters.push(c);
            letters.insert(c, pooled.clone());
        } else {
            letters.insert(c, fit_mixture(s, COMPONENTS, seed.wrapping_add(c as u64)));
        }
    }
    Ok((OffsetGmm { letters, pooled }, report))
}
