//! Instance matching, average precision, precision@m and score histograms.
//!
//! AP pools predictions from all scenes, ranks them by confidence (ties go
//! to the earlier scene, then the lower instance index), and matches each
//! one greedily to the unmatched ground-truth instance of highest IoU in its
//! own scene. A ground-truth instance is consumed only by a true positive.
//! The precision-recall curve is integrated with all-point interpolation.

pub mod bench;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::clustering::SegmentationResult;
use crate::error::{Error, Result};
use crate::scene::Scene;

pub use bench::{benchmark, BenchConfig, BenchRow, HostInfo, StageStats};

/// Thresholds reported when none are given.
pub const DEFAULT_IOU_THRESHOLDS: [f64; 2] = [0.5, 0.75];
pub const MAX_M: usize = 10;

/// `|pred ∩ gt| / |pred ∪ gt|` over point-index sets. Duplicates are ignored.
pub fn instance_iou(pred: &[usize], gt: &[usize]) -> Result<f64> {
    let mut a = pred.to_vec();
    let mut b = gt.to_vec();
    a.sort_unstable();
    a.dedup();
    b.sort_unstable();
    b.dedup();
    if a.is_empty() && b.is_empty() {
        return Err(Error::invalid("IoU of two empty sets"));
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(inter as f64 / (a.len() + b.len() - inter) as f64)
}

/// How a predicted instance's confidence is derived from per-point scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConfidenceMode {
    /// Score of the instance's center point.
    #[default]
    CenterScore,
    /// Mean score over the instance's assigned points.
    MeanScore,
}

pub fn instance_confidences(seg: &SegmentationResult, scores: &[f64], mode: ConfidenceMode) -> Result<Vec<f64>> {
    if scores.len() != seg.len() {
        return Err(Error::invalid(format!("{} scores for {} points", scores.len(), seg.len())));
    }
    Ok(match mode {
        ConfidenceMode::CenterScore => seg.center_indices.iter().map(|&c| scores[c]).collect(),
        ConfidenceMode::MeanScore => seg
            .instance_members()
            .iter()
            .map(|m| m.iter().map(|&i| scores[i]).sum::<f64>() / m.len() as f64)
            .collect(),
    })
}

/// One scene's prediction paired with its ground truth.
#[derive(Debug, Clone, Copy)]
pub struct SceneResult<'a> {
    pub scene: &'a Scene,
    pub segmentation: &'a SegmentationResult,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceMatch {
    pub scene: usize,
    pub pred: usize,
    pub gt: u32,
    pub iou: f64,
}

/// Outcome of greedy matching within one scene.
#[derive(Debug, Clone, PartialEq)]
struct SceneMatching {
    /// Prediction indices in ranking order.
    order: Vec<usize>,
    /// Whether `order[r]` is a true positive.
    hits: Vec<bool>,
    matches: Vec<InstanceMatch>,
    gt_count: usize,
}

fn check_result(r: &SceneResult<'_>) -> Result<()> {
    let seg = r.segmentation;
    if seg.len() != r.scene.len() {
        return Err(Error::invalid(format!(
            "segmentation covers {} points, scene has {}",
            seg.len(),
            r.scene.len()
        )));
    }
    if seg.confidences.len() != seg.num_instances() {
        return Err(Error::invalid("segmentation lacks one confidence per instance"));
    }
    if seg.confidences.iter().any(|c| c.is_nan()) {
        return Err(Error::invalid("NaN confidence"));
    }
    if seg.assignments.iter().flatten().any(|&k| k >= seg.num_instances()) {
        return Err(Error::invalid("assignment refers to a missing instance"));
    }
    Ok(())
}

/// IoU table `[pred][gt]`, with gt instances in ascending id order.
/// Points without a ground-truth label are left out of predicted sets.
fn iou_table(scene: &Scene, seg: &SegmentationResult) -> (Vec<u32>, Vec<Vec<f64>>) {
    let gt = scene.instances();
    let ids: Vec<u32> = gt.keys().copied().collect();
    let slot: BTreeMap<u32, usize> = ids.iter().enumerate().map(|(s, &id)| (id, s)).collect();
    let k = seg.num_instances();
    let mut inter = vec![vec![0usize; ids.len()]; k];
    let mut pred_size = vec![0usize; k];
    for (p, a) in scene.points().iter().zip(&seg.assignments) {
        if let (Some(pi), Some(id)) = (*a, p.instance_id) {
            pred_size[pi] += 1;
            inter[pi][slot[&id]] += 1;
        }
    }
    let table = (0..k)
        .map(|pi| {
            ids.iter()
                .enumerate()
                .map(|(s, id)| {
                    let i = inter[pi][s];
                    let union = pred_size[pi] + gt[id].len() - i;
                    i as f64 / union as f64
                })
                .collect()
        })
        .collect();
    (ids, table)
}

fn rank_order(confidences: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..confidences.len()).collect();
    order.sort_by(|&a, &b| confidences[b].total_cmp(&confidences[a]).then(a.cmp(&b)));
    order
}

fn match_scene(index: usize, r: &SceneResult<'_>, threshold: f64) -> SceneMatching {
    let (ids, table) = iou_table(r.scene, r.segmentation);
    let order = rank_order(&r.segmentation.confidences);
    let mut used = vec![false; ids.len()];
    let mut hits = Vec::with_capacity(order.len());
    let mut matches = Vec::new();
    for &pi in &order {
        let best = (0..ids.len())
            .filter(|&s| !used[s])
            .fold(None, |acc: Option<usize>, s| match acc {
                Some(b) if table[pi][b] >= table[pi][s] => Some(b),
                _ => Some(s),
            });
        let hit = best.is_some_and(|s| table[pi][s] >= threshold);
        if let (true, Some(s)) = (hit, best) {
            used[s] = true;
            matches.push(InstanceMatch {
                scene: index,
                pred: pi,
                gt: ids[s],
                iou: table[pi][s],
            });
        }
        hits.push(hit);
    }
    SceneMatching {
        order,
        hits,
        matches,
        gt_count: ids.len(),
    }
}

fn match_all(results: &[SceneResult<'_>], threshold: f64) -> Result<Vec<SceneMatching>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!("IoU threshold {threshold} outside [0, 1]")));
    }
    results.iter().try_for_each(check_result)?;
    Ok(results
        .par_iter()
        .enumerate()
        .map(|(i, r)| match_scene(i, r, threshold))
        .collect())
}

/// All-point interpolated area under the PR curve of a ranked hit list.
fn interpolated_ap(hits: &[bool], gt_total: usize) -> f64 {
    let mut precision = Vec::with_capacity(hits.len());
    let mut tp = 0usize;
    for (k, &h) in hits.iter().enumerate() {
        tp += h as usize;
        precision.push(tp as f64 / (k + 1) as f64);
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    // Each hit adds a recall step of 1/gt_total; dividing once at the end
    // keeps a perfect ranking at exactly 1.
    let area: f64 = hits.iter().zip(&precision).filter(|(h, _)| **h).map(|(_, p)| p).sum();
    area / gt_total as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApResult {
    pub iou_threshold: f64,
    pub ap: f64,
    pub true_positives: usize,
    pub predictions: usize,
    pub gt_instances: usize,
    pub matches: Vec<InstanceMatch>,
}

pub fn average_precision_detailed(results: &[SceneResult<'_>], iou_threshold: f64) -> Result<ApResult> {
    let per_scene = match_all(results, iou_threshold)?;
    let gt_total: usize = per_scene.iter().map(|m| m.gt_count).sum();
    if gt_total == 0 {
        return Err(Error::invalid("no ground-truth instances"));
    }
    let mut pooled: Vec<(f64, usize, usize, bool)> = Vec::new();
    for (s, m) in per_scene.iter().enumerate() {
        let conf = &results[s].segmentation.confidences;
        for (&pi, &hit) in m.order.iter().zip(&m.hits) {
            pooled.push((conf[pi], s, pi, hit));
        }
    }
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let hits: Vec<bool> = pooled.iter().map(|p| p.3).collect();
    let matches: Vec<InstanceMatch> = per_scene.into_iter().flat_map(|m| m.matches).collect();
    Ok(ApResult {
        iou_threshold,
        ap: interpolated_ap(&hits, gt_total),
        true_positives: matches.len(),
        predictions: hits.len(),
        gt_instances: gt_total,
        matches,
    })
}

pub fn average_precision(results: &[SceneResult<'_>], iou_threshold: f64) -> Result<f64> {
    Ok(average_precision_detailed(results, iou_threshold)?.ap)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionAtM {
    pub m: usize,
    pub precision: f64,
    /// Predictions actually ranked; below `m` when the scene has fewer.
    pub used: usize,
}

impl PrecisionAtM {
    pub fn is_short(&self) -> bool {
        self.used < self.m
    }
}

/// Fraction of the `m` most confident predictions of one scene that match
/// at `iou_threshold`. A scene without predictions scores 0.
pub fn precision_at_m(result: &SceneResult<'_>, m: usize, iou_threshold: f64) -> Result<PrecisionAtM> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let matching = match_all(std::slice::from_ref(result), iou_threshold)?.remove(0);
    Ok(precision_from_hits(&matching.hits, m))
}

fn precision_from_hits(hits: &[bool], m: usize) -> PrecisionAtM {
    let used = m.min(hits.len());
    let tp = hits[..used].iter().filter(|h| **h).count();
    PrecisionAtM {
        m,
        precision: if used == 0 { 0.0 } else { tp as f64 / used as f64 },
        used,
    }
}

/// Counts per uniform bin over `[0, 1]`; values outside are clamped into
/// the edge bins and 1.0 falls in the last bin.
pub fn score_histogram(scores: &[f64], bins: usize) -> Result<Vec<usize>> {
    if bins < 2 {
        return Err(Error::invalid(format!("need at least 2 bins, got {bins}")));
    }
    let mut out = vec![0usize; bins];
    for &s in scores {
        if s.is_nan() {
            return Err(Error::invalid("NaN score"));
        }
        let b = ((s.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        out[b] += 1;
    }
    Ok(out)
}

/// Ordinary least squares `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("need at least two (x, y) pairs"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("all x values are equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageTiming {
    pub stage: String,
    pub points: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scenes: usize,
    pub ap: Vec<ApResult>,
    /// Mean over scenes of precision@m at `precision_iou`.
    pub precision_at_m: Vec<(usize, f64)>,
    pub precision_iou: f64,
    /// Scenes with fewer than `m` predictions, per `m`.
    pub short_scenes: Vec<(usize, usize)>,
    pub timings: Vec<StageTiming>,
    pub score_histogram: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub iou_thresholds: Vec<f64>,
    pub precision_iou: f64,
    pub max_m: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            iou_thresholds: DEFAULT_IOU_THRESHOLDS.to_vec(),
            precision_iou: 0.5,
            max_m: MAX_M,
        }
    }
}

pub fn evaluate(results: &[SceneResult<'_>], opts: &EvalOptions) -> Result<EvalReport> {
    if opts.iou_thresholds.is_empty() {
        return Err(Error::invalid("no IoU thresholds"));
    }
    let ap = opts
        .iou_thresholds
        .iter()
        .map(|&t| average_precision_detailed(results, t))
        .collect::<Result<Vec<_>>>()?;

    let matchings = match_all(results, opts.precision_iou)?;
    let mut precision_at_m = Vec::with_capacity(opts.max_m);
    let mut short_scenes = Vec::with_capacity(opts.max_m);
    for m in 1..=opts.max_m {
        let per: Vec<PrecisionAtM> = matchings.iter().map(|s| precision_from_hits(&s.hits, m)).collect();
        let mean = if per.is_empty() {
            0.0
        } else {
            per.iter().map(|p| p.precision).sum::<f64>() / per.len() as f64
        };
        precision_at_m.push((m, mean));
        short_scenes.push((m, per.iter().filter(|p| p.is_short()).count()));
    }
    Ok(EvalReport {
        scenes: results.len(),
        ap,
        precision_at_m,
        precision_iou: opts.precision_iou,
        short_scenes,
        timings: Vec::new(),
        score_histogram: None,
    })
}

impl EvalReport {
    pub fn ap_at(&self, threshold: f64) -> Option<f64> {
        self.ap.iter().find(|r| r.iou_threshold == threshold).map(|r| r.ap)
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let gt = self.ap.first().map_or(0, |r| r.gt_instances);
        let preds = self.ap.first().map_or(0, |r| r.predictions);
        let _ = writeln!(s, "scenes: {}  gt instances: {gt}  predictions: {preds}", self.scenes);
        let _ = writeln!(s, "\n{:>8}  {:>8}  {:>6}", "IoU", "AP", "TP");
        for r in &self.ap {
            let _ = writeln!(s, "{:>8.3}  {:>8.4}  {:>6}", r.iou_threshold, r.ap, r.true_positives);
        }
        let _ = writeln!(s, "\nprecision@m (IoU {:.2})", self.precision_iou);
        for ((m, p), (_, short)) in self.precision_at_m.iter().zip(&self.short_scenes) {
            let flag = if *short > 0 { format!("  ({short} scenes short)") } else { String::new() };
            let _ = writeln!(s, "{m:>4}  {p:.4}{flag}");
        }
        if let Some(h) = &self.score_histogram {
            let _ = writeln!(s, "\ncenter-score histogram");
            let w = 1.0 / h.len() as f64;
            for (i, c) in h.iter().enumerate() {
                let _ = writeln!(s, "{:.3}-{:.3}  {c}", i as f64 * w, (i + 1) as f64 * w);
            }
        }
        if !self.timings.is_empty() {
            let _ = writeln!(s, "\n{:<12} {:>9} {:>11}", "stage", "points", "ms");
            for t in &self.timings {
                let _ = writeln!(s, "{:<12} {:>9} {:>11.3}", t.stage, t.points, t.seconds * 1e3);
            }
        }
        s
    }

    /// Tab-separated `metric  param  value` rows.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("metric\tparam\tvalue\n");
        let _ = writeln!(s, "scenes\t-\t{}", self.scenes);
        for r in &self.ap {
            let t = r.iou_threshold;
            let _ = writeln!(s, "ap\t{t}\t{:.6}", r.ap);
            let _ = writeln!(s, "true_positives\t{t}\t{}", r.true_positives);
            let _ = writeln!(s, "predictions\t{t}\t{}", r.predictions);
            let _ = writeln!(s, "gt_instances\t{t}\t{}", r.gt_instances);
        }
        for ((m, p), (_, short)) in self.precision_at_m.iter().zip(&self.short_scenes) {
            let _ = writeln!(s, "precision_at_m\t{m}\t{p:.6}");
            let _ = writeln!(s, "short_scenes\t{m}\t{short}");
        }
        if let Some(h) = &self.score_histogram {
            for (i, c) in h.iter().enumerate() {
                let _ = writeln!(s, "histogram\t{i}/{}\t{c}", h.len());
            }
        }
        for t in &self.timings {
            let _ = writeln!(s, "timing_ms\t{}:{}\t{:.6}", t.stage, t.points, t.seconds * 1e3);
        }
        for r in &self.ap {
            for m in &r.matches {
                let _ = writeln!(
                    s,
                    "match@{}\t{}:{}:{}\t{:.6}",
                    r.iou_threshold, m.scene, m.pred, m.gt, m.iou
                );
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::SegmentationStatus;
    use crate::scene::ScenePoint;
    use nalgebra::Point3;
    use proptest::prelude::*;

    /// Scene whose points carry the given labels; geometry is irrelevant here.
    fn labeled(labels: &[Option<u32>]) -> Scene {
        let pts = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| ScenePoint::new(Point3::new(i as f64, 0.0, 0.0), l))
            .collect();
        let centers = labels
            .iter()
            .flatten()
            .map(|&id| (id, Point3::origin()))
            .collect();
        Scene::new(pts, 1000.0, Some(centers)).unwrap()
    }

    fn seg(assign: &[Option<usize>], conf: &[f64]) -> SegmentationResult {
        let k = conf.len();
        let center_indices = (0..k)
            .map(|c| assign.iter().position(|a| *a == Some(c)).unwrap())
            .collect();
        SegmentationResult {
            center_indices,
            assignments: assign.to_vec(),
            confidences: conf.to_vec(),
            status: SegmentationStatus::Ok,
        }
    }

    #[test]
    fn iou_examples() {
        assert_eq!(instance_iou(&[1, 2, 3], &[3, 2, 1]).unwrap(), 1.0);
        assert_eq!(instance_iou(&[1, 2], &[3, 4]).unwrap(), 0.0);
        assert_eq!(instance_iou(&[0, 1, 2, 3], &[1, 2, 3, 4, 5, 6]).unwrap(), 3.0 / 7.0);
        assert_eq!(instance_iou(&[], &[1]).unwrap(), 0.0);
        assert!(instance_iou(&[], &[]).is_err());
    }

    #[test]
    fn perfect_segmentation_ap_one() {
        let s = labeled(&[Some(0), Some(0), Some(1), Some(1), Some(2)]);
        let g = seg(&[Some(0), Some(0), Some(1), Some(1), Some(2)], &[0.9, 0.8, 0.7]);
        let r = [SceneResult { scene: &s, segmentation: &g }];
        assert_eq!(average_precision(&r, 0.5).unwrap(), 1.0);
        assert_eq!(average_precision(&r, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn half_perfect_half_disjoint_is_half() {
        // gt: {0,1} and {2,3}; point 4,5 unlabeled. Prediction 0 is perfect,
        // prediction 1 covers only unlabeled points.
        let s = labeled(&[Some(0), Some(0), Some(1), Some(1), None, None]);
        let g = seg(&[Some(0), Some(0), None, None, Some(1), Some(1)], &[0.9, 0.4]);
        let r = [SceneResult { scene: &s, segmentation: &g }];
        // PR points: (r=0.5, p=1), (r=0.5, p=0.5) -> area 0.5
        assert_eq!(average_precision(&r, 0.5).unwrap(), 0.5);
    }

    #[test]
    fn low_confidence_false_positive_after_hits() {
        let s = labeled(&[Some(0), Some(0), Some(1), Some(1)]);
        // pred 0 perfect on gt 1, pred 1 half of gt 0 (IoU 0.5), pred 2 IoU 0.5 too
        let g = seg(&[Some(1), Some(2), Some(0), Some(0)], &[0.9, 0.2, 0.5]);
        let r = [SceneResult { scene: &s, segmentation: &g }];
        // order: p0 (hit gt1), p2 (IoU vs gt0 = 1/2 -> hit @0.5), p1 (gt0 used; gt1 used -> miss)
        assert_eq!(average_precision(&r, 0.5).unwrap(), 1.0);
        // @0.75: p0 hit, p2 miss, p1 miss -> 0.5
        assert_eq!(average_precision(&r, 0.75).unwrap(), 0.5);
    }

    #[test]
    fn gt_consumed_only_by_hits() {
        // Prediction 0 (most confident) overlaps gt 0 with IoU 1/4 and misses;
        // gt 0 must stay available for prediction 1 (IoU 3/4).
        let s = labeled(&[Some(0), Some(0), Some(0), Some(0), Some(1), None]);
        let g = seg(&[Some(0), Some(1), Some(1), Some(1), None, Some(0)], &[0.9, 0.8]);
        let r = [SceneResult { scene: &s, segmentation: &g }];
        let d = average_precision_detailed(&r, 0.5).unwrap();
        assert_eq!(d.true_positives, 1);
        assert_eq!(d.matches[0].pred, 1);
        assert_eq!(d.matches[0].iou, 0.75);
        // PR: miss then hit over 2 gt -> 0.5 · 0.5
        assert_eq!(d.ap, 0.25);
        assert_eq!(average_precision_detailed(&r, 0.8).unwrap().true_positives, 0);
    }

    #[test]
    fn pooling_ranks_across_scenes() {
        let s = labeled(&[Some(0), Some(0)]);
        let hit = seg(&[Some(0), Some(0)], &[0.3]);
        let s2 = labeled(&[Some(0), Some(0), None]);
        let miss = seg(&[None, None, Some(0)], &[0.9]);
        let r = [
            SceneResult { scene: &s, segmentation: &hit },
            SceneResult { scene: &s2, segmentation: &miss },
        ];
        // pooled order: miss (0.9), hit (0.3); 2 gt. PR: (0,0), (0.5, 0.5)
        assert_eq!(average_precision(&r, 0.5).unwrap(), 0.25);
    }

    #[test]
    fn no_gt_is_error() {
        let s = labeled(&[None, None]);
        let g = seg(&[Some(0), Some(0)], &[0.9]);
        let r = [SceneResult { scene: &s, segmentation: &g }];
        assert!(average_precision(&r, 0.5).is_err());
        assert!(average_precision(&[], 0.5).is_err());
    }

    #[test]
    fn missing_confidences_rejected() {
        let s = labeled(&[Some(0)]);
        let mut g = seg(&[Some(0)], &[0.9]);
        g.confidences.clear();
        assert!(average_precision(&[SceneResult { scene: &s, segmentation: &g }], 0.5).is_err());
    }

    #[test]
    fn precision_at_m_examples() {
        let s = labeled(&[Some(0), Some(0), Some(1), Some(1), None]);
        let all = seg(&[Some(0), Some(0), Some(1), Some(1), None], &[0.9, 0.8]);
        let r = SceneResult { scene: &s, segmentation: &all };
        for m in 1..=10 {
            assert_eq!(precision_at_m(&r, m, 0.5).unwrap().precision, 1.0);
        }
        assert!(precision_at_m(&r, 3, 0.5).unwrap().is_short());
        let half = seg(&[Some(0), Some(0), None, None, Some(1)], &[0.9, 0.8]);
        let r = SceneResult { scene: &s, segmentation: &half };
        assert_eq!(precision_at_m(&r, 1, 0.5).unwrap().precision, 1.0);
        assert_eq!(precision_at_m(&r, 2, 0.5).unwrap().precision, 0.5);
        assert!(precision_at_m(&r, 0, 0.5).is_err());
    }

    #[test]
    fn histogram_examples() {
        assert_eq!(score_histogram(&[0.0; 7], 4).unwrap(), vec![7, 0, 0, 0]);
        assert_eq!(score_histogram(&[1.0, 0.5, 0.49], 2).unwrap(), vec![1, 2]);
        assert!(score_histogram(&[0.1], 1).is_err());
        assert!(score_histogram(&[f64::NAN], 3).is_err());
    }

    #[test]
    fn uniform_scores_flat_histogram() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let scores: Vec<f64> = (0..20_000).map(|_| rng.random()).collect();
        let h = score_histogram(&scores, 10).unwrap();
        let e = 2000.0;
        let chi2: f64 = h.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 9 dof, 99.9th percentile is about 27.9
        assert!(chi2 < 27.9, "chi2 {chi2}");
    }

    #[test]
    fn linear_fit_exact_line() {
        let f = linear_fit(&[1.0, 2.0, 3.0, 4.0], &[3.0, 5.0, 7.0, 9.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn report_contains_every_threshold() {
        let s = labeled(&[Some(0), Some(0), Some(1), Some(1)]);
        let g = seg(&[Some(0), Some(0), Some(1), Some(1)], &[0.9, 0.8]);
        let r = [SceneResult { scene: &s, segmentation: &g }];
        let rep = evaluate(&r, &EvalOptions::default()).unwrap();
        assert_eq!(rep.ap_at(0.5), Some(1.0));
        assert_eq!(rep.ap_at(0.75), Some(1.0));
        let tsv = rep.to_tsv();
        assert!(tsv.contains("ap\t0.5\t1.000000") && tsv.contains("ap\t0.75\t1.000000"));
        assert_eq!(rep.precision_at_m.len(), 10);
        assert!(rep.to_table().contains("0.750"));
    }

    #[test]
    fn mean_score_confidence() {
        let g = seg(&[Some(0), Some(0), Some(1)], &[0.0, 0.0]);
        let c = instance_confidences(&g, &[0.2, 0.4, 0.9], ConfidenceMode::MeanScore).unwrap();
        assert!((c[0] - 0.3).abs() < 1e-15 && c[1] == 0.9);
        let c = instance_confidences(&g, &[0.2, 0.4, 0.9], ConfidenceMode::CenterScore).unwrap();
        assert_eq!(c, vec![0.2, 0.9]);
    }

    fn random_case(labels: Vec<Option<u32>>, assign_raw: Vec<u8>, conf: Vec<f64>) -> (Scene, SegmentationResult) {
        let k = conf.len();
        let mut assign: Vec<Option<usize>> = assign_raw
            .iter()
            .map(|&a| ((a as usize) < k).then_some(a as usize))
            .collect();
        // every instance needs at least its center point
        for (c, a) in assign.iter_mut().take(k).enumerate() {
            *a = Some(c);
        }
        let s = labeled(&labels);
        let center_indices = (0..k).collect();
        (
            s,
            SegmentationResult {
                center_indices,
                assignments: assign,
                confidences: conf,
                status: SegmentationStatus::Ok,
            },
        )
    }

    fn case_strategy() -> impl Strategy<Value = (Vec<Option<u32>>, Vec<u8>, Vec<f64>)> {
        (6usize..40, 1usize..6).prop_flat_map(|(n, k)| {
            (
                prop::collection::vec(prop::option::weighted(0.9, 0u32..5), n),
                prop::collection::vec(0u8..8, n),
                prop::collection::vec(0.0f64..1.0, k),
            )
        })
    }

    proptest! {
        #[test]
        fn ap_invariants((labels, raw, conf) in case_strategy()) {
            prop_assume!(labels.iter().any(|l| l.is_some()));
            let (s, g) = random_case(labels, raw, conf.clone());
            let r = [SceneResult { scene: &s, segmentation: &g }];
            let d5 = average_precision_detailed(&r, 0.5).unwrap();
            let d75 = average_precision_detailed(&r, 0.75).unwrap();
            prop_assert!((0.0..=1.0).contains(&d5.ap));
            prop_assert!(d75.ap <= d5.ap + 1e-12);
            let mut seen = std::collections::BTreeSet::new();
            for m in &d5.matches {
                prop_assert!(m.iou >= 0.5);
                prop_assert!(seen.insert(m.gt));
            }
            // strictly monotone transform of confidences
            let mut g2 = g.clone();
            g2.confidences = conf.iter().map(|c| (3.0 * c).exp() - 7.0).collect();
            let r2 = [SceneResult { scene: &s, segmentation: &g2 }];
            prop_assert_eq!(average_precision(&r2, 0.5).unwrap(), d5.ap);
            for m in 1..=10 {
                let p = precision_at_m(&r[0], m, 0.5).unwrap().precision;
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
    }
}
