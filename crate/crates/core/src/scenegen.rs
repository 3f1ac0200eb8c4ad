//! Synthetic bin-picking scenes.
//!
//! Copies of one object model are dropped into a box-shaped bin at random
//! orientations and positions. There is no physics: instance centers are
//! kept at least `min_center_spacing` apart, which is enough to give every
//! point an unambiguous label and center. An optional top-down depth grid
//! removes points hidden below the topmost surface in each column.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use nalgebra::{Point3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scene::{centroid, compute_d_max, Scene, ScenePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Sphere,
    Box,
    /// Elongated cylinder, radius `0.25·scale` and length `2·scale`.
    Cylinder,
    /// Two perpendicular plates sharing an edge.
    LBracket,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Sphere, ModelKind::Box, ModelKind::Cylinder, ModelKind::LBracket];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Sphere => "sphere",
            ModelKind::Box => "box",
            ModelKind::Cylinder => "cylinder",
            ModelKind::LBracket => "l_bracket",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectModel {
    pub name: String,
    surface_points: Vec<Point3<f64>>,
    centroid: Point3<f64>,
    d_max: f64,
}

impl ObjectModel {
    pub fn from_points(name: impl Into<String>, surface_points: Vec<Point3<f64>>) -> Result<Self> {
        let d_max = compute_d_max(&surface_points)?;
        if d_max <= 0.0 {
            return Err(Error::invalid("model has zero extent"));
        }
        let centroid = centroid(&surface_points).expect("non-empty after compute_d_max");
        Ok(Self {
            name: name.into(),
            surface_points,
            centroid,
            d_max,
        })
    }

    pub fn surface_points(&self) -> &[Point3<f64>] {
        &self.surface_points
    }

    pub fn centroid(&self) -> Point3<f64> {
        self.centroid
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }
}

/// Axis-aligned box `[lo, hi]` used to build the primitives.
#[derive(Clone, Copy)]
struct Cuboid {
    lo: Vector3<f64>,
    hi: Vector3<f64>,
}

impl Cuboid {
    fn face_areas(&self) -> [f64; 6] {
        let e = self.hi - self.lo;
        let (yz, xz, xy) = (e.y * e.z, e.x * e.z, e.x * e.y);
        [yz, yz, xz, xz, xy, xy]
    }

    fn area(&self) -> f64 {
        self.face_areas().iter().sum()
    }

    fn sample_surface(&self, rng: &mut impl Rng) -> Point3<f64> {
        let areas = self.face_areas();
        let mut pick = rng.random::<f64>() * self.area();
        let mut face = 5;
        for (i, a) in areas.iter().enumerate() {
            if pick < *a {
                face = i;
                break;
            }
            pick -= a;
        }
        let axis = face / 2;
        let mut p = Vector3::zeros();
        for a in 0..3 {
            p[a] = if a == axis {
                if face % 2 == 0 { self.lo[a] } else { self.hi[a] }
            } else {
                rng.random_range(self.lo[a]..=self.hi[a])
            };
        }
        Point3::from(p)
    }

    fn strictly_contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|a| p[a] > self.lo[a] && p[a] < self.hi[a])
    }
}

/// Samples `samples` points uniformly over the surface of a primitive.
pub fn builtin_model(kind: ModelKind, scale: f64, samples: usize, seed: u64) -> Result<ObjectModel> {
    if samples < 50 {
        return Err(Error::invalid(format!("need at least 50 surface samples, got {samples}")));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid(format!("scale must be positive, got {scale}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Point3<f64>> = match kind {
        ModelKind::Sphere => (0..samples)
            .map(|_| {
                let [x, y, z]: [f64; 3] = UnitSphere.sample(&mut rng);
                Point3::new(x, y, z) * scale
            })
            .collect(),
        ModelKind::Box => {
            let h = 0.5 * scale;
            let c = Cuboid {
                lo: Vector3::repeat(-h),
                hi: Vector3::repeat(h),
            };
            (0..samples).map(|_| c.sample_surface(&mut rng)).collect()
        }
        ModelKind::Cylinder => {
            let r = 0.25 * scale;
            let half = scale;
            let lateral = 2.0 * PI * r * (2.0 * half);
            let cap = PI * r * r;
            (0..samples)
                .map(|_| {
                    let u = rng.random::<f64>() * (lateral + 2.0 * cap);
                    let theta = rng.random_range(0.0..2.0 * PI);
                    if u < lateral {
                        let z = rng.random_range(-half..=half);
                        Point3::new(r * theta.cos(), r * theta.sin(), z)
                    } else {
                        let rho = r * rng.random::<f64>().sqrt();
                        let z = if u < lateral + cap { -half } else { half };
                        Point3::new(rho * theta.cos(), rho * theta.sin(), z)
                    }
                })
                .collect()
        }
        ModelKind::LBracket => {
            let w = 0.5 * scale;
            let t = 0.15 * scale;
            let base = Cuboid {
                lo: Vector3::zeros(),
                hi: Vector3::new(scale, w, t),
            };
            let upright = Cuboid {
                lo: Vector3::zeros(),
                hi: Vector3::new(t, w, scale),
            };
            let (a0, a1) = (base.area(), upright.area());
            let mut out = Vec::with_capacity(samples);
            while out.len() < samples {
                let (from, other) = if rng.random::<f64>() * (a0 + a1) < a0 {
                    (base, upright)
                } else {
                    (upright, base)
                };
                let p = from.sample_surface(&mut rng);
                if !other.strictly_contains(&p) {
                    out.push(p);
                }
            }
            out
        }
    };
    ObjectModel::from_points(kind.name(), pts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CenterMode {
    /// Transformed centroid of the full model, independent of occlusion.
    #[default]
    ModelCentroid,
    /// Centroid of the points that survive occlusion culling.
    VisibleCentroid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneGenParams {
    pub bin_extent: Vector3<f64>,
    pub instance_count: RangeInclusive<usize>,
    pub points_per_instance: RangeInclusive<usize>,
    /// Minimum distance between instance centers; `None` means `1.05·d_max`.
    pub min_center_spacing: Option<f64>,
    pub occlusion: bool,
    pub cell_size: f64,
    pub center_mode: CenterMode,
    pub seed: u64,
}

impl Default for SceneGenParams {
    fn default() -> Self {
        Self {
            bin_extent: Vector3::new(10.0, 10.0, 4.0),
            instance_count: 10..=40,
            points_per_instance: 500..=1500,
            min_center_spacing: None,
            occlusion: false,
            cell_size: 0.05,
            center_mode: CenterMode::ModelCentroid,
            seed: 0,
        }
    }
}

pub const DEFAULT_SPACING_FACTOR: f64 = 1.05;
const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

impl SceneGenParams {
    pub fn spacing(&self, d_max: f64) -> f64 {
        self.min_center_spacing.unwrap_or(DEFAULT_SPACING_FACTOR * d_max)
    }

    fn validate(&self, d_max: f64) -> Result<()> {
        if self.bin_extent.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::invalid("bin extent must be positive"));
        }
        if self.bin_extent.iter().any(|e| *e < 2.0 * d_max) {
            return Err(Error::invalid(format!(
                "bin extent {:?} cannot hold an object of radius {d_max}",
                self.bin_extent.as_slice()
            )));
        }
        if self.instance_count.is_empty() || *self.instance_count.start() == 0 {
            return Err(Error::invalid("instance count range must be non-empty and positive"));
        }
        if self.points_per_instance.is_empty() || *self.points_per_instance.start() == 0 {
            return Err(Error::invalid("points-per-instance range must be non-empty and positive"));
        }
        if self.occlusion && !(self.cell_size.is_finite() && self.cell_size > 0.0) {
            return Err(Error::invalid("cell size must be positive"));
        }
        if self.min_center_spacing.is_some_and(|s| !(s.is_finite() && s >= 0.0)) {
            return Err(Error::invalid("center spacing must be non-negative"));
        }
        Ok(())
    }
}

/// What a generation run managed to do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationReport {
    pub requested_instances: usize,
    pub placed_instances: usize,
    pub culled_points: usize,
    pub warnings: Vec<String>,
}

fn random_rotation(rng: &mut impl Rng) -> Rotation3<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Quaternion::new(
        b * (2.0 * PI * u3).cos(),
        a * (2.0 * PI * u2).sin(),
        a * (2.0 * PI * u2).cos(),
        b * (2.0 * PI * u3).sin(),
    );
    UnitQuaternion::from_quaternion(q).to_rotation_matrix()
}

/// Keeps a point iff it lies within `cell` of the highest point in its
/// `(x, y)` column.
pub fn visible_mask(positions: &[Point3<f64>], cell: f64) -> Vec<bool> {
    let key = |p: &Point3<f64>| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
    let mut top: HashMap<(i64, i64), f64> = HashMap::new();
    for p in positions {
        let e = top.entry(key(p)).or_insert(f64::NEG_INFINITY);
        *e = e.max(p.z);
    }
    positions.iter().map(|p| p.z >= top[&key(p)] - cell).collect()
}

pub fn generate_scene(model: &ObjectModel, params: &SceneGenParams) -> Result<(Scene, GenerationReport)> {
    let d_max = model.d_max();
    params.validate(d_max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let requested = rng.random_range(params.instance_count.clone());
    let spacing = params.spacing(d_max);
    let spacing_sq = spacing * spacing;
    let mut warnings = Vec::new();

    let mut centers: Vec<Point3<f64>> = Vec::with_capacity(requested);
    'place: while centers.len() < requested {
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let t = Point3::from(Vector3::from_fn(|a, _| {
                rng.random_range(d_max..=params.bin_extent[a] - d_max)
            }));
            if centers.iter().all(|c| (c - t).norm_squared() >= spacing_sq) {
                centers.push(t);
                continue 'place;
            }
        }
        let msg = format!(
            "placed {} of {requested} instances; no free spot {spacing} apart after {MAX_PLACEMENT_ATTEMPTS} attempts",
            centers.len()
        );
        log::warn!("{msg}");
        warnings.push(msg);
        break;
    }

    let model_pts = model.surface_points();
    let origin = model.centroid();
    let mut points: Vec<ScenePoint> = Vec::new();
    let mut instance_centers = BTreeMap::new();
    let mut clamped = false;
    for (id, t) in centers.iter().enumerate() {
        let id = id as u32;
        let rot = random_rotation(&mut rng);
        let want = rng.random_range(params.points_per_instance.clone());
        let take = want.min(model_pts.len());
        clamped |= take < want;
        let mut picked = index::sample(&mut rng, model_pts.len(), take).into_vec();
        picked.sort_unstable();
        for i in picked {
            let p = t + rot * (model_pts[i] - origin);
            points.push(ScenePoint::new(p, Some(id)));
        }
        instance_centers.insert(id, *t);
    }
    if clamped {
        warnings.push(format!("instances capped at the model's {} surface samples", model_pts.len()));
    }

    let mut culled = 0;
    if params.occlusion {
        let positions: Vec<_> = points.iter().map(|p| p.position).collect();
        let keep = visible_mask(&positions, params.cell_size);
        let before = points.len();
        points = points.into_iter().zip(keep).filter_map(|(p, k)| k.then_some(p)).collect();
        culled = before - points.len();
    }

    if params.center_mode == CenterMode::VisibleCentroid {
        let mut groups: BTreeMap<u32, Vec<Point3<f64>>> = BTreeMap::new();
        for p in &points {
            groups.entry(p.instance_id.expect("generated")).or_default().push(p.position);
        }
        for (id, pts) in groups {
            instance_centers.insert(id, centroid(&pts).expect("non-empty group"));
        }
    }

    let report = GenerationReport {
        requested_instances: requested,
        placed_instances: centers.len(),
        culled_points: culled,
        warnings,
    };
    Ok((Scene::new(points, d_max, Some(instance_centers))?, report))
}

/// Seed of the `index`-th scene in a batch.
pub fn derive_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng.random()
}

/// Generates `count` scenes in parallel, scene `i` using `derive_seed(seed, i)`.
pub fn generate_batch(
    model: &ObjectModel,
    params: &SceneGenParams,
    count: usize,
) -> Result<Vec<(Scene, GenerationReport)>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let p = SceneGenParams {
                seed: derive_seed(params.seed, i),
                ..params.clone()
            };
            generate_scene(model, &p)
        })
        .collect()
}
