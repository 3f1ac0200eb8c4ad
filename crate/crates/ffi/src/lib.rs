//! C interface to `fpcc`.
//!
//! Objects are opaque heap handles created by `fpcc_*_read`, `*_generate`,
//! `*_from_arrays` and friends and released with the matching `*_free`.
//! Every fallible call returns an [`FpccStatus`]; on failure the message is
//! available from [`fpcc_last_error`] on the same thread. Array outputs are
//! written into caller buffers whose capacity (in elements) is passed
//! alongside; a short buffer yields `FPCC_STATUS_BUFFER_TOO_SMALL`.
//! Panics never cross the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fpcc::clustering::{segment, NmsParams, SegmentationResult};
use fpcc::embedding::{oracle_embed, EmbeddedScene, OracleParams};
use fpcc::eval::{average_precision, SceneResult};
use nalgebra::Point3;
use ndarray::Array2;
use fpcc::scenegen::{builtin_model, generate_scene, ModelKind, SceneGenParams};
use fpcc::scoring::{center_score, score_scene, smooth_l1, CenterScoreParams};
use fpcc::{io, Error, Scene, ScenePoint};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpccStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    OutOfRange = 3,
    Parse = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Values accepted by `fpcc_scene_generate`'s `model` argument.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpccModel {
    Sphere = 0,
    Box = 1,
    Cylinder = 2,
    LBracket = 3,
}

pub struct FpccScene(Scene);
pub struct FpccEmbeddings(EmbeddedScene);
pub struct FpccSegmentation(SegmentationResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(FpccStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidInput(_) => FpccStatus::InvalidInput,
            Error::OutOfRange { .. } => FpccStatus::OutOfRange,
            Error::Parse(_) => FpccStatus::Parse,
            Error::Io { .. } => FpccStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> FpccStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FpccStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FpccStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(FpccStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg<'a>(p: *const c_char) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(FpccStatus::InvalidInput, "path is not valid UTF-8".into()))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T: Copy>(values: &[T], out: *mut T, capacity: usize) -> FfiResult<()> {
    if values.len() > capacity {
        return Err(Failure(
            FpccStatus::BufferTooSmall,
            format!("need {} elements, buffer holds {capacity}", values.len()),
        ));
    }
    if values.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fpcc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn fpcc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ------------------------------------------------------------------ scenes

#[no_mangle]
pub unsafe extern "C" fn fpcc_scene_read(path: *const c_char, out: *mut *mut FpccScene) -> FpccStatus {
    guard(|| put(out, FpccScene(io::read_scene(path_arg(path)?)?)))
}

#[no_mangle]
pub unsafe extern "C" fn fpcc_scene_write(scene: *const FpccScene, path: *const c_char) -> FpccStatus {
    guard(|| Ok(io::write_scene(&as_ref(scene, "scene")?.0, path_arg(path)?)?))
}

/// Builds a scene from `n` xyz triples. `labels` may be NULL (all
/// unlabeled); otherwise -1 marks an unlabeled point. Centers are optional
/// (`n_centers` = 0) and given as ids plus xyz triples.
#[no_mangle]
pub unsafe extern "C" fn fpcc_scene_from_arrays(
    xyz: *const f64,
    labels: *const i64,
    n: usize,
    d_max: f64,
    center_ids: *const u32,
    center_xyz: *const f64,
    n_centers: usize,
    out: *mut *mut FpccScene,
) -> FpccStatus {
    guard(|| {
        let xyz = slice_arg(xyz, n * 3, "xyz")?;
        let labels = if labels.is_null() { None } else { Some(slice_arg(labels, n, "labels")?) };
        let mut points = Vec::with_capacity(n);
        for i in 0..n {
            let id = match labels.map(|l| l[i]) {
                None | Some(-1) => None,
                Some(v) if (0..=u32::MAX as i64).contains(&v) => Some(v as u32),
                Some(v) => return Err(Failure(FpccStatus::InvalidInput, format!("point {i}: bad label {v}"))),
            };
            points.push(ScenePoint::new(Point3::new(xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]), id));
        }
        let centers = if n_centers == 0 {
            None
        } else {
            let ids = slice_arg(center_ids, n_centers, "center_ids")?;
            let c = slice_arg(center_xyz, n_centers * 3, "center_xyz")?;
            Some(
                ids.iter()
                    .enumerate()
                    .map(|(k, &id)| (id, Point3::new(c[3 * k], c[3 * k + 1], c[3 * k + 2])))
                    .collect(),
            )
        };
        put(out, FpccScene(Scene::new(points, d_max, centers)?))
    })
}

/// Generates one scene of `model` copies in the default 10 x 10 x 4 bin.
#[no_mangle]
pub unsafe extern "C" fn fpcc_scene_generate(
    model: u32,
    scale: f64,
    model_samples: usize,
    min_instances: usize,
    max_instances: usize,
    min_points: usize,
    max_points: usize,
    occlusion: bool,
    seed: u64,
    out: *mut *mut FpccScene,
) -> FpccStatus {
    guard(|| {
        let kind = match model {
            0 => ModelKind::Sphere,
            1 => ModelKind::Box,
            2 => ModelKind::Cylinder,
            3 => ModelKind::LBracket,
            m => return Err(Failure(FpccStatus::InvalidInput, format!("unknown model {m}"))),
        };
        let m = builtin_model(kind, scale, model_samples, seed)?;
        let params = SceneGenParams {
            instance_count: min_instances..=max_instances,
            points_per_instance: min_points..=max_points,
            occlusion,
            seed,
            ..Default::default()
        };
        let (scene, _) = generate_scene(&m, &params)?;
        put(out, FpccScene(scene))
    })
}

/// Number of points, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn fpcc_scene_len(scene: *const FpccScene) -> usize {
    scene.as_ref().map_or(0, |s| s.0.len())
}

/// `d_max` of the scene, or NaN for NULL.
#[no_mangle]
pub unsafe extern "C" fn fpcc_scene_d_max(scene: *const FpccScene) -> f64 {
    scene.as_ref().map_or(f64::NAN, |s| s.0.d_max())
}

/// Copies `3·len` coordinates.
#[no_mangle]
pub unsafe extern "C" fn fpcc_scene_positions(scene: *const FpccScene, out: *mut f64, capacity: usize) -> FpccStatus {
    guard(|| {
        let s = &as_ref(scene, "scene")?.0;
        let xyz: Vec<f64> = s.points().iter().flat_map(|p| [p.position.x, p.position.y, p.position.z]).collect();
        write_out(&xyz, out, capacity)
    })
}

/// Copies one label per point, -1 for unlabeled.
#[no_mangle]
pub unsafe extern "C" fn fpcc_scene_labels(scene: *const FpccScene, out: *mut i64, capacity: usize) -> FpccStatus {
    guard(|| {
        let s = &as_ref(scene, "scene")?.0;
        let labels: Vec<i64> = s.points().iter().map(|p| p.instance_id.map_or(-1, i64::from)).collect();
        write_out(&labels, out, capacity)
    })
}

#[no_mangle]
pub unsafe extern "C" fn fpcc_scene_free(scene: *mut FpccScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Ground-truth center score of every point.
#[no_mangle]
pub unsafe extern "C" fn fpcc_score_scene(
    scene: *const FpccScene,
    beta: f64,
    out: *mut f64,
    capacity: usize,
) -> FpccStatus {
    guard(|| {
        let s = &as_ref(scene, "scene")?.0;
        let scores = score_scene(s, &CenterScoreParams::new(beta, s.d_max())?)?;
        write_out(&scores, out, capacity)
    })
}

// -------------------------------------------------------------- embeddings

#[no_mangle]
pub unsafe extern "C" fn fpcc_oracle_embed(
    scene: *const FpccScene,
    dim: usize,
    anchor_separation: f64,
    intra_noise_sigma: f64,
    score_noise_sigma: f64,
    seed: u64,
    out: *mut *mut FpccEmbeddings,
) -> FpccStatus {
    guard(|| {
        let params = OracleParams {
            dim,
            anchor_separation,
            intra_noise_sigma,
            score_noise_sigma,
            seed,
            ..Default::default()
        };
        put(out, FpccEmbeddings(oracle_embed(&as_ref(scene, "scene")?.0, &params)?))
    })
}

/// Wraps `n·dim` row-major values. `scores` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn fpcc_embeddings_from_arrays(
    values: *const f64,
    n: usize,
    dim: usize,
    scores: *const f64,
    out: *mut *mut FpccEmbeddings,
) -> FpccStatus {
    guard(|| {
        let v = slice_arg(values, n * dim, "values")?.to_vec();
        let e = Array2::from_shape_vec((n, dim), v).map_err(|e| Failure(FpccStatus::InvalidInput, e.to_string()))?;
        let s = if scores.is_null() { None } else { Some(slice_arg(scores, n, "scores")?.to_vec()) };
        put(out, FpccEmbeddings(EmbeddedScene::new(e, s)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn fpcc_embeddings_read(path: *const c_char, out: *mut *mut FpccEmbeddings) -> FpccStatus {
    guard(|| put(out, FpccEmbeddings(io::read_embeddings(path_arg(path)?)?)))
}

#[no_mangle]
pub unsafe extern "C" fn fpcc_embeddings_write(emb: *const FpccEmbeddings, path: *const c_char) -> FpccStatus {
    guard(|| Ok(io::write_embeddings(&as_ref(emb, "embeddings")?.0, path_arg(path)?)?))
}

#[no_mangle]
pub unsafe extern "C" fn fpcc_embeddings_len(emb: *const FpccEmbeddings) -> usize {
    emb.as_ref().map_or(0, |e| e.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn fpcc_embeddings_dim(emb: *const FpccEmbeddings) -> usize {
    emb.as_ref().map_or(0, |e| e.0.dim())
}

/// Copies the predicted center scores; fails if the embeddings carry none.
#[no_mangle]
pub unsafe extern "C" fn fpcc_embeddings_scores(emb: *const FpccEmbeddings, out: *mut f64, capacity: usize) -> FpccStatus {
    guard(|| write_out(as_ref(emb, "embeddings")?.0.scores()?, out, capacity))
}

#[no_mangle]
pub unsafe extern "C" fn fpcc_embeddings_free(emb: *mut FpccEmbeddings) {
    if !emb.is_null() {
        drop(Box::from_raw(emb));
    }
}

// ------------------------------------------------------------ segmentation

/// Center selection at threshold `theta` followed by point assignment.
#[no_mangle]
pub unsafe extern "C" fn fpcc_segment(
    scene: *const FpccScene,
    emb: *const FpccEmbeddings,
    theta: f64,
    out: *mut *mut FpccSegmentation,
) -> FpccStatus {
    guard(|| {
        let s = &as_ref(scene, "scene")?.0;
        let e = &as_ref(emb, "embeddings")?.0;
        if e.len() != s.len() {
            return Err(Failure(
                FpccStatus::InvalidInput,
                format!("{} embeddings for {} points", e.len(), s.len()),
            ));
        }
        let params = NmsParams::new(theta, s.d_max())?;
        put(out, FpccSegmentation(segment(s, e.embeddings.view(), e.scores()?, &params)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn fpcc_segmentation_read(path: *const c_char, out: *mut *mut FpccSegmentation) -> FpccStatus {
    guard(|| put(out, FpccSegmentation(io::read_segmentation(path_arg(path)?)?)))
}

#[no_mangle]
pub unsafe extern "C" fn fpcc_segmentation_write(seg: *const FpccSegmentation, path: *const c_char) -> FpccStatus {
    guard(|| Ok(io::write_segmentation(&as_ref(seg, "segmentation")?.0, path_arg(path)?)?))
}

#[no_mangle]
pub unsafe extern "C" fn fpcc_segmentation_len(seg: *const FpccSegmentation) -> usize {
    seg.as_ref().map_or(0, |s| s.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn fpcc_segmentation_num_instances(seg: *const FpccSegmentation) -> usize {
    seg.as_ref().map_or(0, |s| s.0.num_instances())
}

/// Copies one instance index per point, -1 for noise.
#[no_mangle]
pub unsafe extern "C" fn fpcc_segmentation_assignments(
    seg: *const FpccSegmentation,
    out: *mut i64,
    capacity: usize,
) -> FpccStatus {
    guard(|| {
        let s = &as_ref(seg, "segmentation")?.0;
        let a: Vec<i64> = s.assignments.iter().map(|a| a.map_or(-1, |k| k as i64)).collect();
        write_out(&a, out, capacity)
    })
}

/// Copies the point index of each instance's center.
#[no_mangle]
pub unsafe extern "C" fn fpcc_segmentation_centers(
    seg: *const FpccSegmentation,
    out: *mut usize,
    capacity: usize,
) -> FpccStatus {
    guard(|| write_out(&as_ref(seg, "segmentation")?.0.center_indices, out, capacity))
}

#[no_mangle]
pub unsafe extern "C" fn fpcc_segmentation_confidences(
    seg: *const FpccSegmentation,
    out: *mut f64,
    capacity: usize,
) -> FpccStatus {
    guard(|| write_out(&as_ref(seg, "segmentation")?.0.confidences, out, capacity))
}

#[no_mangle]
pub unsafe extern "C" fn fpcc_segmentation_free(seg: *mut FpccSegmentation) {
    if !seg.is_null() {
        drop(Box::from_raw(seg));
    }
}

// ---------------------------------------------------------------- scalars

/// `1 − (distance / d_max)^β`; fails with `FPCC_STATUS_OUT_OF_RANGE` when
/// `distance` exceeds `d_max`.
#[no_mangle]
pub unsafe extern "C" fn fpcc_center_score(distance: f64, d_max: f64, beta: f64, out: *mut f64) -> FpccStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if distance.is_nan() || distance < 0.0 {
            return Err(Failure(FpccStatus::InvalidInput, format!("distance {distance} is negative or NaN")));
        }
        let params = CenterScoreParams::new(beta, d_max)?;
        let origin = Point3::origin();
        *out = center_score(&Point3::new(distance, 0.0, 0.0), &origin, &params)?;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn fpcc_smooth_l1(x: f64) -> f64 {
    smooth_l1(x)
}

/// Pooled AP over `count` scene/segmentation pairs.
#[no_mangle]
pub unsafe extern "C" fn fpcc_average_precision(
    scenes: *const *const FpccScene,
    segs: *const *const FpccSegmentation,
    count: usize,
    iou_threshold: f64,
    out: *mut f64,
) -> FpccStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let scenes = slice_arg(scenes, count, "scenes")?;
        let segs = slice_arg(segs, count, "segmentations")?;
        let results = scenes
            .iter()
            .zip(segs)
            .map(|(&s, &g)| {
                Ok(SceneResult {
                    scene: &as_ref(s, "scene")?.0,
                    segmentation: &as_ref(g, "segmentation")?.0,
                })
            })
            .collect::<FfiResult<Vec<_>>>()?;
        *out = average_precision(&results, iou_threshold)?;
        Ok(())
    })
}
