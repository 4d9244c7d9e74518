use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{candidate_set, finish, Decoder, DecodeError, DecodeInput, DecodeResult};
use crate::layout::{KeyLayout, Point};
use crate::lm::{CharNgramLm, Lexicon};

/// Axis-aligned bivariate Gaussian around every key center, plus a log
/// penalty for a touch or letter left unaligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialModel {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub gamma: f64,
}

impl SpatialModel {
    /// Spread as a fraction of the layout's key pitch on each axis.
    pub fn from_pitch(layout: &KeyLayout, fraction: f64) -> Self {
        let (px, py) = layout.key_pitch();
        Self { sigma_x: fraction * px, sigma_y: fraction * py, gamma: 0.01f64.ln() }
    }

    pub fn log_density(&self, s: Point, center: Point) -> f64 {
        let zx = (s.x - center.x) / self.sigma_x;
        let zy = (s.y - center.y) / self.sigma_y;
        -0.5 * (zx * zx + zy * zy) - (2.0 * std::f64::consts::PI * self.sigma_x * self.sigma_y).ln()
    }

    /// Best monotone alignment of `touches` to the letters of `word`:
    /// matched pairs score the Gaussian log-density, gaps score `gamma`.
    pub fn log_likelihood(&self, touches: &[Point], word: &[u8], layout: &KeyLayout) -> f64 {
        let m = word.len();
        let centers: Vec<Point> = word.iter().map(|&c| layout.center(c as char)).collect();
        let mut prev: Vec<f64> = (0..=m).map(|j| j as f64 * self.gamma).collect();
        let mut cur = vec![0.0; m + 1];
        for (i, &s) in touches.iter().enumerate() {
            cur[0] = (i + 1) as f64 * self.gamma;
            for j in 1..=m {
                let matched = prev[j - 1] + self.log_density(s, centers[j - 1]);
                cur[j] = matched.max(prev[j] + self.gamma).max(cur[j - 1] + self.gamma);
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        prev[m]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesDecoderConfig {
    pub max_ed: usize,
    pub spatial: SpatialModel,
}

impl BayesDecoderConfig {
    pub fn for_layout(layout: &KeyLayout) -> Self {
        Self { max_ed: 4, spatial: SpatialModel::from_pitch(layout, 0.4) }
    }
}

/// Touch-informed decoder: `log P(S|w) + log P(w)` over the candidate set of
/// the touches' nearest-key letters.
pub struct BayesDecoder {
    lexicon: Arc<Lexicon>,
    lm: Arc<CharNgramLm>,
    layout: Arc<KeyLayout>,
    logprobs: Vec<f64>,
    pub cfg: BayesDecoderConfig,
}

impl BayesDecoder {
    pub const ID: &'static str = "bayes";

    pub fn new(lexicon: Arc<Lexicon>, lm: Arc<CharNgramLm>, layout: Arc<KeyLayout>, cfg: BayesDecoderConfig) -> Self {
        let logprobs = lexicon.words().iter().map(|w| lm.logprob(w).expect("lexicon words are plain")).collect();
        Self { lexicon, lm, layout, logprobs, cfg }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn logprobs(&self) -> &[f64] {
        &self.logprobs
    }

    /// Full score of lexicon word `i` for `touches`.
    pub fn score(&self, touches: &[Point], i: usize) -> f64 {
        let w = self.lexicon.words()[i].as_bytes();
        self.cfg.spatial.log_likelihood(touches, w, &self.layout) + self.logprobs[i]
    }
}

impl Decoder for BayesDecoder {
    fn id(&self) -> &str {
        Self::ID
    }

    fn decode(&self, input: &DecodeInput, k: usize) -> Result<DecodeResult, DecodeError> {
        input.validate()?;
        let touches = input.touches.as_deref().ok_or_else(|| DecodeError::MissingTouches(Self::ID.into()))?;
        let words = self.lexicon.words();
        let scored: Vec<(f64, &str)> = candidate_set(&input.letters, &self.lexicon, self.cfg.max_ed)
            .into_iter()
            .map(|(i, _)| (self.score(touches, i), words[i].as_str()))
            .collect();
        let u = input.letters.as_bytes();
        let own = self.cfg.spatial.log_likelihood(touches, u, &self.layout) + self.lm.logprob(&input.letters).expect("validated");
        Ok(finish(scored, k, &input.letters, own, Self::ID))
    }
}
