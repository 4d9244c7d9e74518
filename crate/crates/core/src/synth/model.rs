//! The noise model snapshot, the near-key slip channel and fitting from logs.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::coact::{sample_index, AnnotatedCluster, CoActTable};
use super::gmm::{fit_offset_gmm, GmmFitReport, Mixture, OffsetGmm};
use super::propensity::PropensityModel;
use super::SynthError;
use crate::edit::edited_positions;
use crate::layout::{KeyLayout, LayoutError, Point};
use crate::pipeline::{run_pipeline, PipelineConfig, RawTouchEvent};

pub const NOISE_MODEL_FORMAT: u32 = 1;

/// Default landing spread, as a fraction of key pitch per axis.
pub const DEFAULT_SIGMA_PITCH: f64 = 0.35;
const COACT_K: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub format_version: u32,
    pub gmm: OffsetGmm,
    pub coact: CoActTable,
    pub propensity: PropensityModel,
}

impl NoiseModel {
    /// Isotropic landing spread and adjacency-biased co-activation; used when
    /// no typing logs are available.
    pub fn default_for(layout: &KeyLayout) -> Self {
        let (px, py) = layout.key_pitch();
        Self {
            format_version: NOISE_MODEL_FORMAT,
            gmm: OffsetGmm::uniform(Mixture::isotropic(DEFAULT_SIGMA_PITCH * px, DEFAULT_SIGMA_PITCH * py)),
            coact: CoActTable::adjacency_default(layout, COACT_K),
            propensity: PropensityModel::default(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, SynthError> {
        let m: Self = serde_json::from_str(s)?;
        if m.format_version != NOISE_MODEL_FORMAT {
            return Err(SynthError::Version(m.format_version));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlipMode {
    /// Take the most probable letter under the kernel.
    Argmax,
    /// Draw a letter from the kernel.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlipOutcome {
    /// The slip stayed on the aimed key.
    Clean,
    Substitute(char),
    ExtraTap(char),
    Delete,
}

/// Outcome of aiming at `a` and landing at `center(a) + delta`.
pub fn slip_outcome<R: Rng + ?Sized>(
    a: char,
    delta: [f64; 2],
    layout: &KeyLayout,
    alpha: f64,
    mode: SlipMode,
    rng: &mut R,
) -> Result<SlipOutcome, LayoutError> {
    let p = layout.center(a).offset(delta[0], delta[1]);
    let q = layout.soft_key_distribution(p, alpha)?;
    if q.no_key > 0.0 {
        return Ok(SlipOutcome::Delete);
    }
    Ok(match mode {
        SlipMode::Argmax => match q.argmax() {
            Some(c) if c != a => SlipOutcome::Substitute(c),
            _ => SlipOutcome::Clean,
        },
        SlipMode::Sample => match sample_index(&q.letters, rng).map(|i| (b'a' + i as u8) as char) {
            Some(c) if c != a => SlipOutcome::ExtraTap(c),
            _ => SlipOutcome::Clean,
        },
    })
}

/// Draw a landing offset for `a` and map it through the soft kernel.
pub fn sample_near_slip<R: Rng + ?Sized>(
    a: char,
    gmm: &OffsetGmm,
    layout: &KeyLayout,
    alpha: f64,
    mode: SlipMode,
    rng: &mut R,
) -> Result<SlipOutcome, LayoutError> {
    let delta = gmm.sample(a, rng);
    slip_outcome(a, delta, layout, alpha, mode, rng)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub words: usize,
    /// Words whose decoded letters line up one to one with the gold word.
    pub aligned_words: usize,
    pub skipped_words: usize,
    pub offset_samples: usize,
    pub coact_clusters: usize,
    pub gmm: GmmFitReport,
}

/// Fit the noise model from touch logs and the gold word of each
/// `(session, word_id)`. Offsets and co-activations come from words whose
/// decoded letter count equals the gold length; edit positions come from every
/// word with a gold label.
pub fn fit_noise_model(
    events: &[RawTouchEvent],
    gold: &HashMap<(String, i64), String>,
    layout: &KeyLayout,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<(NoiseModel, FitReport), SynthError> {
    let mut order: Vec<(String, i64)> = Vec::new();
    let mut groups: HashMap<(String, i64), Vec<RawTouchEvent>> = HashMap::new();
    for e in events {
        let key = (e.session.clone(), e.word_id);
        groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Vec::new()
        }).push(e.clone());
    }

    let mut report = FitReport::default();
    let mut offsets: BTreeMap<char, Vec<[f64; 2]>> = BTreeMap::new();
    let mut clusters = Vec::new();
    let mut observations = Vec::new();
    for key in &order {
        let Some(word) = gold.get(key) else { continue };
        report.words += 1;
        let Ok(out) = run_pipeline(&groups[key], layout, cfg) else {
            report.skipped_words += 1;
            continue;
        };
        let y = word.as_bytes();
        observations.push((y.to_vec(), edited_positions(out.letters.as_bytes(), y)));
        if out.letters.len() != y.len() {
            continue;
        }
        report.aligned_words += 1;
        let pos_of: HashMap<_, Point> = out.marks.iter().map(|m| (m.thread, m.pos)).collect();
        let letter_clusters = out.clusters.iter().filter(|c| c.representative.key.as_letter().is_some());
        for (i, (cl, &g)) in letter_clusters.zip(y).enumerate() {
            let g = g as char;
            let c = layout.center(g);
            let p = cl.representative.pos;
            offsets.entry(g).or_default().push([p.x - c.x, p.y - c.y]);
            let co_fired: Vec<char> = cl
                .members
                .iter()
                .filter(|&&m| m != cl.representative.thread)
                .filter_map(|m| pos_of.get(m))
                .filter(|p| layout.key_at(**p).as_letter().is_some())
                .map(|p| layout.nearest_letter(*p))
                .collect();
            clusters.push(AnnotatedCluster { intended: g, bucket: layout.letter_bucket(y[i.saturating_sub(1)] as char), co_fired });
        }
    }
    report.offset_samples = offsets.values().map(Vec::len).sum();
    report.coact_clusters = clusters.len();
    let (gmm, gmm_report) = fit_offset_gmm(&offsets, seed)?;
    report.gmm = gmm_report;
    let model = NoiseModel {
        format_version: NOISE_MODEL_FORMAT,
        gmm,
        coact: CoActTable::fit(&clusters, COACT_K),
        propensity: PropensityModel::fit(layout, &observations, 200, 0.5),
    };
    Ok((model, report))
}
