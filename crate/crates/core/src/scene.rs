//! Point and scene data model, the shifted/normalized input representation,
//! and the fixed-size block sampler used to feed point blocks to a network.

use std::collections::BTreeMap;

use nalgebra::Point3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default number of points per block fed to the feature extractor.
pub const DEFAULT_BLOCK_SIZE: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenePoint {
    pub position: Point3<f64>,
    pub instance_id: Option<u32>,
    pub gt_center_score: Option<f64>,
}

impl ScenePoint {
    pub fn new(position: Point3<f64>, instance_id: Option<u32>) -> Self {
        Self {
            position,
            instance_id,
            gt_center_score: None,
        }
    }
}

/// A single-class point cloud with optional instance labels.
///
/// `d_max` is the largest distance from an object's geometric center to its
/// farthest surface point. It drives the suppression radius, the noise gate
/// and the pair-validity cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    points: Vec<ScenePoint>,
    d_max: f64,
    instance_centers: Option<BTreeMap<u32, Point3<f64>>>,
}

impl Scene {
    pub fn new(
        points: Vec<ScenePoint>,
        d_max: f64,
        instance_centers: Option<BTreeMap<u32, Point3<f64>>>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("scene has no points"));
        }
        if !(d_max.is_finite() && d_max > 0.0) {
            return Err(Error::invalid(format!("d_max must be positive, got {d_max}")));
        }
        for (i, p) in points.iter().enumerate() {
            if !is_finite(&p.position) {
                return Err(Error::invalid(format!("point {i} has a non-finite coordinate")));
            }
            if let Some(s) = p.gt_center_score {
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::invalid(format!(
                        "point {i} has center score {s} outside [0, 1]"
                    )));
                }
            }
        }
        if let Some(centers) = &instance_centers {
            for (id, c) in centers {
                if !is_finite(c) {
                    return Err(Error::invalid(format!("center of instance {id} is not finite")));
                }
            }
            for (i, p) in points.iter().enumerate() {
                if let Some(id) = p.instance_id {
                    if !centers.contains_key(&id) {
                        return Err(Error::invalid(format!(
                            "point {i} references instance {id} which has no center"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            points,
            d_max,
            instance_centers,
        })
    }

    pub fn points(&self) -> &[ScenePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn instance_centers(&self) -> Option<&BTreeMap<u32, Point3<f64>>> {
        self.instance_centers.as_ref()
    }

    pub fn positions(&self) -> Vec<Point3<f64>> {
        self.points.iter().map(|p| p.position).collect()
    }

    pub fn labels(&self) -> Vec<Option<u32>> {
        self.points.iter().map(|p| p.instance_id).collect()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.instance_centers.is_some() && self.points.iter().all(|p| p.instance_id.is_some())
    }

    /// Point indices of every labeled instance, keyed by instance id.
    pub fn instances(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut out: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, p) in self.points.iter().enumerate() {
            if let Some(id) = p.instance_id {
                out.entry(id).or_default().push(i);
            }
        }
        out
    }

    /// Returns a copy with `d_max` replaced, e.g. for scenes without a model.
    pub fn with_d_max(&self, d_max: f64) -> Result<Self> {
        Scene::new(self.points.clone(), d_max, self.instance_centers.clone())
    }

    /// Attaches ground-truth center scores, one per point.
    pub fn with_center_scores(mut self, scores: &[f64]) -> Result<Self> {
        if scores.len() != self.points.len() {
            return Err(Error::invalid(format!(
                "{} scores for {} points",
                scores.len(),
                self.points.len()
            )));
        }
        for (p, &s) in self.points.iter_mut().zip(scores) {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::invalid(format!("center score {s} outside [0, 1]")));
            }
            p.gt_center_score = Some(s);
        }
        Ok(self)
    }
}

fn is_finite(p: &Point3<f64>) -> bool {
    p.iter().all(|c| c.is_finite())
}

/// A point in the network input representation: coordinates shifted so every
/// axis starts at zero, plus the location normalized to the scene extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepresentedPoint {
    pub shifted: [f64; 3],
    pub normalized: [f64; 3],
}

impl RepresentedPoint {
    /// The 6-vector `(x̄, ȳ, z̄, Nx, Ny, Nz)`.
    pub fn as_6d(&self) -> [f64; 6] {
        let [x, y, z] = self.shifted;
        let [nx, ny, nz] = self.normalized;
        [x, y, z, nx, ny, nz]
    }
}

/// Shifts every axis by its scene minimum and normalizes each axis by its
/// range. An axis with zero range normalizes to 0.
pub fn normalize_scene(scene: &Scene) -> Result<Vec<RepresentedPoint>> {
    normalize_positions(&scene.positions())
}

pub fn normalize_positions(positions: &[Point3<f64>]) -> Result<Vec<RepresentedPoint>> {
    if positions.is_empty() {
        return Err(Error::invalid("no points to normalize"));
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for (i, p) in positions.iter().enumerate() {
        if !is_finite(p) {
            return Err(Error::invalid(format!("point {i} has a non-finite coordinate")));
        }
        for axis in 0..3 {
            lo[axis] = lo[axis].min(p[axis]);
            hi[axis] = hi[axis].max(p[axis]);
        }
    }
    let range: [f64; 3] = std::array::from_fn(|a| hi[a] - lo[a]);

    Ok(positions
        .iter()
        .map(|p| {
            let shifted: [f64; 3] = std::array::from_fn(|a| p[a] - lo[a]);
            let normalized = std::array::from_fn(|a| {
                if range[a] > 0.0 {
                    (shifted[a] / range[a]).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            });
            RepresentedPoint { shifted, normalized }
        })
        .collect())
}

/// A fixed-size set of scene point indices.
///
/// The last `pad_count` entries of `indices` are fill duplicates drawn from the
/// block's own distinct points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointBlock {
    pub indices: Vec<usize>,
    pub pad_count: usize,
}

impl PointBlock {
    /// Indices that are not padding; unique within one sampling pass.
    pub fn distinct(&self) -> &[usize] {
        &self.indices[..self.indices.len() - self.pad_count]
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Partitions the scene into blocks of `block_size` points sampled without
/// replacement. A remainder of `r` points forms one last block padded up to
/// `block_size` by resampling its own points with replacement.
pub fn sample_blocks(scene: &Scene, block_size: usize, seed: u64) -> Result<Vec<PointBlock>> {
    sample_index_blocks(scene.len(), block_size, seed)
}

pub fn sample_index_blocks(n: usize, block_size: usize, seed: u64) -> Result<Vec<PointBlock>> {
    if n == 0 {
        return Err(Error::invalid("cannot sample blocks from an empty scene"));
    }
    if block_size == 0 {
        return Err(Error::invalid("block size must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut blocks: Vec<PointBlock> = order
        .chunks_exact(block_size)
        .map(|c| PointBlock {
            indices: c.to_vec(),
            pad_count: 0,
        })
        .collect();

    let rest = order.chunks_exact(block_size).remainder();
    if !rest.is_empty() {
        let pad_count = block_size - rest.len();
        let mut indices = Vec::with_capacity(block_size);
        indices.extend_from_slice(rest);
        for _ in 0..pad_count {
            indices.push(rest[rng.random_range(0..rest.len())]);
        }
        blocks.push(PointBlock { indices, pad_count });
    }
    Ok(blocks)
}

pub fn euclidean_distance(a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

pub fn centroid(points: &[Point3<f64>]) -> Option<Point3<f64>> {
    if points.is_empty() {
        return None;
    }
    let sum = points
        .iter()
        .fold(nalgebra::Vector3::zeros(), |acc, p| acc + p.coords);
    Some(Point3::from(sum / points.len() as f64))
}

/// Largest distance from the centroid of `model_points` to any of them.
///
/// A single point yields 0, which is logged as degenerate since every
/// consumer needs a positive value.
pub fn compute_d_max(model_points: &[Point3<f64>]) -> Result<f64> {
    let c = centroid(model_points).ok_or_else(|| Error::invalid("no model points"))?;
    if model_points.iter().any(|p| !is_finite(p)) {
        return Err(Error::invalid("model point with non-finite coordinate"));
    }
    let d = model_points
        .iter()
        .map(|p| euclidean_distance(p, &c))
        .fold(0.0_f64, f64::max);
    if d == 0.0 {
        log::warn!("degenerate model: d_max is 0");
    }
    Ok(d)
}
