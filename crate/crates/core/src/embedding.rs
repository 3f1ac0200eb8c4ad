//! Sources of per-point embeddings and predicted center scores.
//!
//! The trained feature network is not part of this crate. Instead an
//! embedding provider either loads vectors produced elsewhere, or
//! synthesizes them from ground truth: every instance gets an anchor in
//! embedding space and its points scatter around that anchor.

use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scene::Scene;
use crate::scoring::{score_scene, CenterScoreParams, DEFAULT_BETA};

/// Per-point embeddings and, when available, predicted center scores.
/// Row order matches the companion scene.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedScene {
    pub embeddings: Array2<f64>,
    pub pred_scores: Option<Vec<f64>>,
}

impl EmbeddedScene {
    pub fn new(embeddings: Array2<f64>, pred_scores: Option<Vec<f64>>) -> Result<Self> {
        if embeddings.ncols() == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        if let Some(s) = &pred_scores {
            if s.len() != embeddings.nrows() {
                return Err(Error::invalid(format!(
                    "{} scores for {} embeddings",
                    s.len(),
                    embeddings.nrows()
                )));
            }
        }
        Ok(Self {
            embeddings,
            pred_scores,
        })
    }

    pub fn len(&self) -> usize {
        self.embeddings.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.embeddings.ncols()
    }

    pub fn has_scores(&self) -> bool {
        self.pred_scores.is_some()
    }

    /// Predicted scores, or an error naming what is missing.
    pub fn scores(&self) -> Result<&[f64]> {
        self.pred_scores
            .as_deref()
            .ok_or_else(|| Error::invalid("embedding file carries no predicted center scores"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleParams {
    pub dim: usize,
    pub anchor_separation: f64,
    pub intra_noise_sigma: f64,
    pub score_noise_sigma: f64,
    pub beta: f64,
    pub seed: u64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            dim: 128,
            anchor_separation: 12.0,
            intra_noise_sigma: 0.5,
            score_noise_sigma: 0.0,
            beta: DEFAULT_BETA,
            seed: 0,
        }
    }
}

impl OracleParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::invalid(format!("embedding dimension must be >= 2, got {}", self.dim)));
        }
        if !(self.anchor_separation.is_finite() && self.anchor_separation > 0.0) {
            return Err(Error::invalid("anchor separation must be positive"));
        }
        if !(self.intra_noise_sigma >= 0.0 && self.intra_noise_sigma.is_finite()) {
            return Err(Error::invalid("intra-instance noise must be non-negative"));
        }
        if !(self.score_noise_sigma >= 0.0 && self.score_noise_sigma.is_finite()) {
            return Err(Error::invalid("score noise must be non-negative"));
        }
        if self.anchor_separation <= 6.0 * self.intra_noise_sigma {
            log::warn!(
                "anchor separation {} is within 6 sigma of the intra-instance noise {}",
                self.anchor_separation,
                self.intra_noise_sigma
            );
        }
        Ok(())
    }
}

// Independent random streams, so changing one noise level leaves the draws
// of the others untouched.
const ANCHOR_STREAM: u64 = 0;
const EMBEDDING_STREAM: u64 = 1;
const SCORE_STREAM: u64 = 2;

const MAX_ANCHOR_ATTEMPTS: usize = 100_000;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Places `count` anchors uniformly in a ball of radius
/// `10·separation`, rejecting any closer than `separation` to an earlier one.
pub fn place_anchors(count: usize, params: &OracleParams) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    let mut rng = stream(params.seed, ANCHOR_STREAM);
    let radius = 10.0 * params.anchor_separation;
    let min_sq = params.anchor_separation * params.anchor_separation;
    let mut anchors: Vec<Vec<f64>> = Vec::with_capacity(count);
    while anchors.len() < count {
        let mut placed = false;
        for _ in 0..MAX_ANCHOR_ATTEMPTS {
            let mut v: Vec<f64> = (0..params.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let r = radius * rng.random::<f64>().powf(1.0 / params.dim as f64);
            v.iter_mut().for_each(|x| *x *= r / norm);
            let clear = anchors.iter().all(|a| {
                a.iter().zip(&v).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() >= min_sq
            });
            if clear {
                anchors.push(v);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::invalid(format!(
                "could not place {count} anchors {} apart",
                params.anchor_separation
            )));
        }
    }
    Ok(anchors)
}

/// Synthesizes embeddings and predicted scores for a fully labeled scene.
///
/// Each point's embedding is its instance anchor plus isotropic Gaussian
/// noise whose expected squared norm is `intra_noise_sigma²` (per-axis
/// deviation `sigma / sqrt(dim)`). Its predicted score is the ground-truth
/// center score plus Gaussian noise, clamped to `[0, 1]`.
pub fn oracle_embed(scene: &Scene, params: &OracleParams) -> Result<EmbeddedScene> {
    params.validate()?;
    if !scene.is_fully_labeled() {
        return Err(Error::invalid("oracle embeddings need every point labeled and every center known"));
    }
    let ids: Vec<u32> = scene.instances().keys().copied().collect();
    let anchors = place_anchors(ids.len(), params)?;
    let gt = score_scene(scene, &CenterScoreParams::new(params.beta, scene.d_max())?)?;

    let mut emb_rng = stream(params.seed, EMBEDDING_STREAM);
    let mut score_rng = stream(params.seed, SCORE_STREAM);
    let n = scene.len();
    let per_axis = params.intra_noise_sigma / (params.dim as f64).sqrt();
    let mut embeddings = Array2::<f64>::zeros((n, params.dim));
    for (i, point) in scene.points().iter().enumerate() {
        let id = point.instance_id.expect("checked fully labeled");
        let anchor = &anchors[ids.binary_search(&id).expect("id from instances()")];
        for (e, a) in embeddings.row_mut(i).iter_mut().zip(anchor) {
            let z: f64 = StandardNormal.sample(&mut emb_rng);
            *e = a + per_axis * z;
        }
    }
    let pred: Vec<f64> = gt
        .iter()
        .map(|&s| {
            let z: f64 = StandardNormal.sample(&mut score_rng);
            (s + params.score_noise_sigma * z).clamp(0.0, 1.0)
        })
        .collect();
    EmbeddedScene::new(embeddings, Some(pred))
}

/// Loads an embedding file and checks it has one row per scene point.
pub fn load_embeddings(path: impl AsRef<Path>, expected_n: usize) -> Result<EmbeddedScene> {
    let e = crate::io::read_embeddings(path.as_ref())?;
    if e.len() != expected_n {
        return Err(Error::invalid(format!(
            "{}: {} embedding rows, scene has {expected_n} points",
            path.as_ref().display(),
            e.len()
        )));
    }
    if !e.has_scores() {
        log::warn!("{}: no predicted score column", path.as_ref().display());
    }
    Ok(e)
}
