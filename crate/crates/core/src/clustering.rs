//! Inference-time clustering.
//!
//! Center points are picked by greedy non-maximum suppression on predicted
//! center scores: drop every point scoring at or below `theta_th`, then
//! repeatedly keep the best survivor and discard all survivors within
//! `d_max` of it. Each remaining point joins the center nearest to it in
//! embedding space, unless that center is farther than `d_max` in 3D, in
//! which case the point is noise.

use std::collections::HashMap;

use nalgebra::Point3;
use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::squared_l2;
use crate::scene::{euclidean_distance, Scene};

pub const DEFAULT_THETA_TH: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmsParams {
    pub theta_th: f64,
    pub d_max: f64,
}

impl NmsParams {
    pub fn new(theta_th: f64, d_max: f64) -> Result<Self> {
        if !(theta_th > 0.0 && theta_th < 1.0) {
            return Err(Error::invalid(format!("theta_th must lie in (0, 1), got {theta_th}")));
        }
        if !(d_max.is_finite() && d_max > 0.0) {
            return Err(Error::invalid(format!("d_max must be positive, got {d_max}")));
        }
        Ok(Self { theta_th, d_max })
    }

    pub fn for_scene(scene: &Scene) -> Self {
        Self {
            theta_th: DEFAULT_THETA_TH,
            d_max: scene.d_max(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentationStatus {
    Ok,
    /// No point scored above the threshold; every point is noise.
    NoCenters,
}

/// Per-point instance assignment.
///
/// Instance `k` is the one grown from `center_indices[k]`; instances are
/// ordered by descending confidence. `None` marks noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub center_indices: Vec<usize>,
    pub assignments: Vec<Option<usize>>,
    pub confidences: Vec<f64>,
    pub status: SegmentationStatus,
}

impl SegmentationResult {
    pub fn num_instances(&self) -> usize {
        self.center_indices.len()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Point indices of each instance, in instance order.
    pub fn instance_members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.center_indices.len()];
        for (i, a) in self.assignments.iter().enumerate() {
            if let Some(k) = *a {
                out[k].push(i);
            }
        }
        out
    }

    pub fn noise_count(&self) -> usize {
        self.assignments.iter().filter(|a| a.is_none()).count()
    }

    /// Replaces instance confidences with the per-point scores of the centers.
    pub fn with_center_confidences(mut self, scores: &[f64]) -> Result<Self> {
        if scores.len() != self.assignments.len() {
            return Err(Error::invalid(format!(
                "{} scores for {} points",
                scores.len(),
                self.assignments.len()
            )));
        }
        self.confidences = self.center_indices.iter().map(|&c| scores[c]).collect();
        Ok(self)
    }
}

type Cell = (i64, i64, i64);

/// Uniform hash grid over a subset of points. Cells are slightly wider than
/// the query radius so every neighbor within the radius lies in the 27 cells
/// around the query.
struct PointGrid {
    inv_cell: f64,
    cells: HashMap<Cell, Vec<usize>>,
}

impl PointGrid {
    fn new(positions: &[Point3<f64>], members: &[usize], radius: f64) -> Self {
        let inv_cell = 1.0 / (radius * (1.0 + 1e-9));
        let mut cells: HashMap<Cell, Vec<usize>> = HashMap::new();
        for &i in members {
            cells.entry(Self::cell_of(inv_cell, &positions[i])).or_default().push(i);
        }
        Self { inv_cell, cells }
    }

    fn cell_of(inv_cell: f64, p: &Point3<f64>) -> Cell {
        (
            (p.x * inv_cell).floor() as i64,
            (p.y * inv_cell).floor() as i64,
            (p.z * inv_cell).floor() as i64,
        )
    }

    fn for_each_near(&self, p: &Point3<f64>, mut f: impl FnMut(usize)) {
        let (cx, cy, cz) = Self::cell_of(self.inv_cell, p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(v) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        v.iter().copied().for_each(&mut f);
                    }
                }
            }
        }
    }
}

/// Greedy point NMS. Returns center indices in selection order, i.e. by
/// descending score with ties going to the lower index.
pub fn select_centers(positions: &[Point3<f64>], scores: &[f64], params: &NmsParams) -> Result<Vec<usize>> {
    if positions.len() != scores.len() {
        return Err(Error::invalid(format!(
            "{} positions vs {} scores",
            positions.len(),
            scores.len()
        )));
    }
    let mut candidates: Vec<usize> = (0..scores.len())
        .filter(|&i| scores[i] > params.theta_th)
        .collect();
    if candidates.iter().any(|&i| positions[i].iter().any(|c| !c.is_finite())) {
        return Err(Error::invalid("candidate point with non-finite coordinate"));
    }
    candidates.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let grid = PointGrid::new(positions, &candidates, params.d_max);
    let mut removed = vec![false; positions.len()];
    let mut centers = Vec::new();
    for &c in &candidates {
        if removed[c] {
            continue;
        }
        centers.push(c);
        removed[c] = true;
        let pc = positions[c];
        grid.for_each_near(&pc, |j| {
            if !removed[j] && euclidean_distance(&pc, &positions[j]) <= params.d_max {
                removed[j] = true;
            }
        });
    }
    Ok(centers)
}

/// Assigns every point to its feature-nearest center, gated by 3D distance.
///
/// `scores` supplies the confidence of each center. Only the nearest center
/// in embedding space is considered; if it lies farther than `d_max` the
/// point is noise even when another center is close.
pub fn assign_points(
    positions: &[Point3<f64>],
    embeddings: ArrayView2<f64>,
    scores: &[f64],
    center_indices: &[usize],
    params: &NmsParams,
) -> Result<SegmentationResult> {
    let n = positions.len();
    if embeddings.nrows() != n || scores.len() != n {
        return Err(Error::invalid(format!(
            "{n} positions, {} embeddings, {} scores",
            embeddings.nrows(),
            scores.len()
        )));
    }
    if let Some(&bad) = center_indices.iter().find(|&&c| c >= n) {
        return Err(Error::invalid(format!("center index {bad} out of range")));
    }
    if center_indices.is_empty() {
        log::warn!("no centers selected; all {n} points are noise");
        return Ok(SegmentationResult {
            center_indices: Vec::new(),
            assignments: vec![None; n],
            confidences: Vec::new(),
            status: SegmentationStatus::NoCenters,
        });
    }

    let emb = embeddings.as_standard_layout();
    let dim = emb.ncols();
    if dim == 0 {
        return Err(Error::invalid("embeddings have zero columns"));
    }
    let rows = emb.as_slice().expect("standard layout");
    let center_rows: Vec<f64> = center_indices
        .iter()
        .flat_map(|&c| rows[c * dim..(c + 1) * dim].iter().copied())
        .collect();

    let mut center_of = vec![None; n];
    for (k, &c) in center_indices.iter().enumerate() {
        center_of[c].get_or_insert(k);
    }

    let assignments: Vec<Option<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if let Some(k) = center_of[i] {
                return Some(k);
            }
            let row = &rows[i * dim..(i + 1) * dim];
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (k, c) in center_rows.chunks_exact(dim).enumerate() {
                let d = squared_l2(row, c).sqrt();
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            let gate = euclidean_distance(&positions[i], &positions[center_indices[best]]);
            (gate <= params.d_max).then_some(best)
        })
        .collect();

    Ok(SegmentationResult {
        center_indices: center_indices.to_vec(),
        assignments,
        confidences: center_indices.iter().map(|&c| scores[c]).collect(),
        status: SegmentationStatus::Ok,
    })
}

/// Center selection followed by assignment.
pub fn segment(
    scene: &Scene,
    embeddings: ArrayView2<f64>,
    pred_scores: &[f64],
    params: &NmsParams,
) -> Result<SegmentationResult> {
    let positions = scene.positions();
    let centers = select_centers(&positions, pred_scores, params)?;
    assign_points(&positions, embeddings, pred_scores, &centers, params)
}
