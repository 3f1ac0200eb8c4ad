//! Ground-truth center scores, the pairwise matrices used to weight the
//! embedding loss, and forward-only reference implementations of both loss
//! terms.
//!
//! Matrix construction is parallel over rows. Every entry is computed
//! independently and every row total is accumulated in column order, so the
//! results do not depend on the number of threads.

use nalgebra::Point3;
use ndarray::{Array2, ArrayView2, Axis, Zip};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scene::{euclidean_distance, PointBlock, Scene};

pub const DEFAULT_BETA: f64 = 2.0;
pub const DEFAULT_EPSILON_1: f64 = 5.0;
pub const DEFAULT_EPSILON_2: f64 = 10.0;
pub const DEFAULT_ALPHA: f64 = 30.0;

/// Relative tolerance on `d_max` so rounding from rigid transforms does not
/// reject points that lie on the boundary.
const D_MAX_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterScoreParams {
    pub beta: f64,
    pub d_max: f64,
}

impl CenterScoreParams {
    pub fn new(beta: f64, d_max: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid(format!("beta must be positive, got {beta}")));
        }
        if !(d_max.is_finite() && d_max > 0.0) {
            return Err(Error::invalid(format!("d_max must be positive, got {d_max}")));
        }
        Ok(Self { beta, d_max })
    }

    pub fn for_scene(scene: &Scene) -> Self {
        Self {
            beta: DEFAULT_BETA,
            d_max: scene.d_max(),
        }
    }
}

/// How the weighted pair sum is reduced to a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossNormalization {
    /// Plain double sum over all ordered pairs.
    #[default]
    Sum,
    /// Double sum divided by the total pair weight. Not part of the original
    /// formulation; useful to compare blocks of different sizes.
    WeightedMean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParams {
    pub epsilon_1: f64,
    pub epsilon_2: f64,
    pub alpha: f64,
    pub use_vdm: bool,
    pub use_asm: bool,
    pub normalization: LossNormalization,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            epsilon_1: DEFAULT_EPSILON_1,
            epsilon_2: DEFAULT_EPSILON_2,
            alpha: DEFAULT_ALPHA,
            use_vdm: true,
            use_asm: true,
            normalization: LossNormalization::Sum,
        }
    }
}

impl LossParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_1 > 0.0 && self.epsilon_1 < self.epsilon_2 && self.epsilon_2.is_finite()) {
            return Err(Error::invalid(format!(
                "margins must satisfy 0 < epsilon_1 < epsilon_2, got {} and {}",
                self.epsilon_1, self.epsilon_2
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }

    /// The three weighting setups of the ablation: no weights, pair
    /// validity only, and validity times attention.
    pub fn ablation_configs(&self) -> [LossParams; 3] {
        [
            LossParams { use_vdm: false, use_asm: false, ..*self },
            LossParams { use_vdm: true, use_asm: false, ..*self },
            LossParams { use_vdm: true, use_asm: true, ..*self },
        ]
    }
}

/// `1 − (‖point − center‖ / d_max)^β`.
///
/// Points farther than `d_max` from their center are rejected; values are
/// clamped to `[0, 1]` to absorb rounding at the boundary.
pub fn center_score(point: &Point3<f64>, center: &Point3<f64>, params: &CenterScoreParams) -> Result<f64> {
    let d = euclidean_distance(point, center);
    if d > params.d_max * (1.0 + D_MAX_SLACK) {
        return Err(Error::OutOfRange {
            what: format!("point ({}, {}, {})", point.x, point.y, point.z),
            distance: d,
            d_max: params.d_max,
        });
    }
    Ok(score_from_distance(d, params))
}

fn score_from_distance(d: f64, params: &CenterScoreParams) -> f64 {
    (1.0 - (d / params.d_max).powf(params.beta)).clamp(0.0, 1.0)
}

/// Ground-truth center score of every point. Unlabeled points score 0.
pub fn score_scene(scene: &Scene, params: &CenterScoreParams) -> Result<Vec<f64>> {
    let centers = scene.instance_centers();
    scene
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| match p.instance_id {
            None => Ok(0.0),
            Some(id) => {
                let c = centers
                    .and_then(|m| m.get(&id))
                    .ok_or_else(|| Error::invalid(format!("point {i}: instance {id} has no center")))?;
                let d = euclidean_distance(&p.position, c);
                if d > params.d_max * (1.0 + D_MAX_SLACK) {
                    return Err(Error::OutOfRange {
                        what: format!("point {i} of instance {id}"),
                        distance: d,
                        d_max: params.d_max,
                    });
                }
                Ok(score_from_distance(d, params))
            }
        })
        .collect()
}

/// Pairwise L2 distances between embedding rows.
pub fn feature_distance_matrix(embeddings: ArrayView2<f64>) -> Array2<f64> {
    let n = embeddings.nrows();
    let mut out = Array2::<f64>::zeros((n, n));
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let ei = embeddings.row(i);
            for (j, v) in row.iter_mut().enumerate() {
                if i != j {
                    let ej = embeddings.row(j);
                    let sq: f64 = ei.iter().zip(ej.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                    *v = sq.sqrt();
                }
            }
        });
    out
}

/// `true` iff two points lie strictly closer than `2·d_max`.
pub fn valid_distance_matrix(positions: &[Point3<f64>], d_max: f64) -> Array2<bool> {
    let n = positions.len();
    let cutoff = 2.0 * d_max;
    let mut out = Array2::from_elem((n, n), false);
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = euclidean_distance(&positions[i], &positions[j]) < cutoff;
            }
        });
    out
}

/// `S_A(i, j) = s_i + s_j`.
pub fn attention_score_matrix(center_scores: &[f64]) -> Result<Array2<f64>> {
    if let Some((i, s)) = center_scores
        .iter()
        .enumerate()
        .find(|(_, s)| !(0.0..=1.0).contains(*s))
    {
        return Err(Error::invalid(format!("center score {s} at {i} outside [0, 1]")));
    }
    let n = center_scores.len();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| center_scores[i] + center_scores[j]))
}

/// Elementwise product of the validity mask and the attention scores, with
/// either factor replaced by ones when its switch is off.
pub fn weight_matrix(valid: &Array2<bool>, attention: &Array2<f64>, params: &LossParams) -> Result<Array2<f64>> {
    if valid.dim() != attention.dim() || valid.nrows() != valid.ncols() {
        return Err(Error::invalid(format!(
            "weight shapes differ: {:?} vs {:?}",
            valid.dim(),
            attention.dim()
        )));
    }
    let mut w = Array2::<f64>::zeros(valid.dim());
    Zip::from(&mut w)
        .and(valid)
        .and(attention)
        .par_for_each(|w, &v, &a| {
            let dv = if !params.use_vdm || v { 1.0 } else { 0.0 };
            let sa = if params.use_asm { a } else { 1.0 };
            *w = dv * sa;
        });
    Ok(w)
}

/// `same(i, j)` is true iff both points carry the same instance label.
/// Unlabeled points only match themselves.
pub fn same_instance_matrix(labels: &[Option<u32>]) -> Array2<bool> {
    let n = labels.len();
    Array2::from_shape_fn((n, n), |(i, j)| {
        i == j || matches!((labels[i], labels[j]), (Some(a), Some(b)) if a == b)
    })
}

fn check_square(name: &str, dim: (usize, usize), n: usize) -> Result<()> {
    if dim != (n, n) {
        return Err(Error::invalid(format!("{name} is {dim:?}, expected ({n}, {n})")));
    }
    Ok(())
}

/// Hinge term of one pair: pull inside `epsilon_1` for same-instance pairs,
/// push beyond `epsilon_2` otherwise.
#[inline]
pub fn pair_hinge(feature_distance: f64, same_instance: bool, params: &LossParams) -> f64 {
    if same_instance {
        (feature_distance - params.epsilon_1).max(0.0)
    } else {
        (params.epsilon_2 - feature_distance).max(0.0)
    }
}

/// Per-pair contributions `W(i, j)·κ(i, j)` of the embedding loss.
pub fn pair_losses(
    feature_distance: &Array2<f64>,
    weights: &Array2<f64>,
    same_instance: &Array2<bool>,
    params: &LossParams,
) -> Result<Array2<f64>> {
    let n = feature_distance.nrows();
    check_square("feature distance matrix", feature_distance.dim(), n)?;
    check_square("weight matrix", weights.dim(), n)?;
    check_square("same-instance matrix", same_instance.dim(), n)?;
    let mut out = Array2::<f64>::zeros((n, n));
    Zip::from(&mut out)
        .and(feature_distance)
        .and(weights)
        .and(same_instance)
        .par_for_each(|o, &d, &w, &s| *o = w * pair_hinge(d, s, params));
    Ok(out)
}

/// Weighted double-sum embedding loss over all ordered pairs, diagonal
/// included.
pub fn embedded_feature_loss(
    feature_distance: &Array2<f64>,
    weights: &Array2<f64>,
    same_instance: &Array2<bool>,
    params: &LossParams,
) -> Result<f64> {
    let terms = pair_losses(feature_distance, weights, same_instance, params)?;
    let row_sums: Vec<f64> = terms
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|row| row.iter().sum::<f64>())
        .collect();
    let total: f64 = row_sums.iter().sum();
    match params.normalization {
        LossNormalization::Sum => Ok(total),
        LossNormalization::WeightedMean => {
            let wsum: f64 = weights
                .axis_iter(Axis(0))
                .map(|row| row.iter().sum::<f64>())
                .sum();
            Ok(if wsum > 0.0 { total / wsum } else { 0.0 })
        }
    }
}

pub fn smooth_l1(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        0.5 * a * a
    } else {
        a - 0.5
    }
}

/// Mean smooth-L1 error between ground-truth and predicted center scores.
pub fn center_score_loss(gt_scores: &[f64], pred_scores: &[f64]) -> Result<f64> {
    if gt_scores.len() != pred_scores.len() {
        return Err(Error::invalid(format!(
            "{} ground-truth scores vs {} predictions",
            gt_scores.len(),
            pred_scores.len()
        )));
    }
    if gt_scores.is_empty() {
        return Err(Error::invalid("no scores"));
    }
    let sum: f64 = gt_scores
        .iter()
        .zip(pred_scores)
        .map(|(g, p)| smooth_l1(g - p))
        .sum();
    Ok(sum / gt_scores.len() as f64)
}

pub fn total_loss(l_ef: f64, l_cs: f64, params: &LossParams) -> f64 {
    l_ef + params.alpha * l_cs
}

/// The four pair matrices of one point block.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrices {
    pub feature_distance: Array2<f64>,
    pub valid_distance: Array2<bool>,
    pub attention_score: Array2<f64>,
    pub weight: Array2<f64>,
}

impl PairMatrices {
    pub fn compute(
        positions: &[Point3<f64>],
        embeddings: ArrayView2<f64>,
        center_scores: &[f64],
        d_max: f64,
        params: &LossParams,
    ) -> Result<Self> {
        let n = positions.len();
        if embeddings.nrows() != n || center_scores.len() != n {
            return Err(Error::invalid(format!(
                "{n} positions, {} embeddings, {} scores",
                embeddings.nrows(),
                center_scores.len()
            )));
        }
        let feature_distance = feature_distance_matrix(embeddings);
        let valid_distance = valid_distance_matrix(positions, d_max);
        let attention_score = attention_score_matrix(center_scores)?;
        let weight = weight_matrix(&valid_distance, &attention_score, params)?;
        Ok(Self {
            feature_distance,
            valid_distance,
            attention_score,
            weight,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockLoss {
    pub embedded_feature: f64,
    pub center_score: f64,
    pub total: f64,
}

/// Both loss terms on one block of a labeled scene.
///
/// `gt_scores` are the ground-truth center scores of the whole scene and feed
/// the attention matrix; `pred_scores` are the predicted ones.
pub fn block_loss(
    scene: &Scene,
    embeddings: ArrayView2<f64>,
    gt_scores: &[f64],
    pred_scores: &[f64],
    block: &PointBlock,
    params: &LossParams,
) -> Result<BlockLoss> {
    params.validate()?;
    let n = scene.len();
    if embeddings.nrows() != n || gt_scores.len() != n || pred_scores.len() != n {
        return Err(Error::invalid("scene, embeddings and scores differ in length"));
    }
    if let Some(&bad) = block.indices.iter().find(|&&i| i >= n) {
        return Err(Error::invalid(format!("block index {bad} out of range")));
    }
    let points = scene.points();
    let positions: Vec<_> = block.indices.iter().map(|&i| points[i].position).collect();
    let labels: Vec<_> = block.indices.iter().map(|&i| points[i].instance_id).collect();
    let emb = embeddings.select(Axis(0), &block.indices);
    let gt: Vec<f64> = block.indices.iter().map(|&i| gt_scores[i]).collect();
    let pred: Vec<f64> = block.indices.iter().map(|&i| pred_scores[i]).collect();

    let m = PairMatrices::compute(&positions, emb.view(), &gt, scene.d_max(), params)?;
    let same = same_instance_matrix(&labels);
    let l_ef = embedded_feature_loss(&m.feature_distance, &m.weight, &same, params)?;
    let l_cs = center_score_loss(&gt, &pred)?;
    Ok(BlockLoss {
        embedded_feature: l_ef,
        center_score: l_cs,
        total: total_loss(l_ef, l_cs, params),
    })
}
