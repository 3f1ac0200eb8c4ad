//! Wall-clock timing of the inference stages on generated scenes.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::Vector3;

use crate::clustering::{assign_points, select_centers, segment, NmsParams};
use crate::embedding::{oracle_embed, EmbeddedScene, OracleParams};
use crate::error::{Error, Result};
use crate::scene::Scene;
use crate::scenegen::{builtin_model, generate_scene, ModelKind, SceneGenParams};
use crate::scoring::{score_scene, CenterScoreParams};

pub const MIN_WARMUP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub points: usize,
    pub instances: usize,
    pub dim: usize,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(points: usize, instances: usize) -> Self {
        Self {
            points,
            instances,
            dim: 128,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageStats {
    pub stage: &'static str,
    /// Seconds per repetition, in run order.
    pub samples: Vec<f64>,
    pub median: f64,
    pub p95: f64,
}

impl StageStats {
    pub fn from_samples(stage: &'static str, samples: Vec<f64>) -> Self {
        let mut s = samples.clone();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let median = match n {
            0 => f64::NAN,
            _ if n % 2 == 1 => s[n / 2],
            _ => 0.5 * (s[n / 2 - 1] + s[n / 2]),
        };
        let p95 = if n == 0 { f64::NAN } else { s[((0.95 * n as f64).ceil() as usize).max(1) - 1] };
        Self {
            stage,
            samples,
            median,
            p95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostInfo {
    pub os: String,
    pub arch: String,
    pub cpu_model: String,
    pub logical_cpus: usize,
    pub threads: usize,
}

impl HostInfo {
    pub fn current() -> Self {
        let cpu_model = std::fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|t| {
                t.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split(':').nth(1))
                    .map(|m| m.trim().to_string())
            })
            .unwrap_or_else(|| "unknown".into());
        Self {
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            cpu_model,
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub config: BenchConfig,
    /// Points actually generated (`instances · ⌊points / instances⌋`).
    pub points: usize,
    pub stages: Vec<StageStats>,
    pub host: HostInfo,
}

impl BenchRow {
    pub fn stage(&self, name: &str) -> Option<&StageStats> {
        self.stages.iter().find(|s| s.stage == name)
    }
}

/// A cylinder pile with exactly `instances` instances and oracle embeddings.
pub fn bench_scene(config: &BenchConfig) -> Result<(Scene, EmbeddedScene)> {
    if config.instances == 0 || config.points < config.instances {
        return Err(Error::invalid(format!(
            "cannot spread {} points over {} instances",
            config.points, config.instances
        )));
    }
    let per = config.points / config.instances;
    let model = builtin_model(ModelKind::Cylinder, 1.0, per.max(2000), config.seed)?;
    let side = 10.0 * (config.instances as f64 / 40.0).sqrt().max(1.0);
    let params = SceneGenParams {
        bin_extent: Vector3::new(side, side, 4.0),
        instance_count: config.instances..=config.instances,
        points_per_instance: per..=per,
        seed: config.seed,
        ..Default::default()
    };
    let (scene, report) = generate_scene(&model, &params)?;
    if report.placed_instances != config.instances {
        return Err(Error::invalid(format!(
            "placed only {} of {} instances",
            report.placed_instances, config.instances
        )));
    }
    let oracle = OracleParams {
        dim: config.dim,
        seed: config.seed,
        ..Default::default()
    };
    let emb = oracle_embed(&scene, &oracle)?;
    Ok((scene, emb))
}

fn time_stage(stage: &'static str, warmup: usize, reps: usize, mut f: impl FnMut() -> Result<()>) -> Result<StageStats> {
    let mut samples = Vec::with_capacity(reps);
    for r in 0..warmup + reps {
        let t = Instant::now();
        f()?;
        let dt = t.elapsed().as_secs_f64();
        if r >= warmup {
            samples.push(dt);
        }
    }
    Ok(StageStats::from_samples(stage, samples))
}

/// Times scoring, NMS, assignment and NMS+assignment for each configuration.
pub fn benchmark(configs: &[BenchConfig], reps: usize, warmup: usize) -> Result<Vec<BenchRow>> {
    if warmup < MIN_WARMUP {
        return Err(Error::invalid(format!("need at least {MIN_WARMUP} warm-up iterations, got {warmup}")));
    }
    if reps == 0 {
        return Err(Error::invalid("need at least one repetition"));
    }
    let host = HostInfo::current();
    configs
        .iter()
        .map(|config| {
            let (scene, emb) = bench_scene(config)?;
            let positions = scene.positions();
            let scores = emb.scores()?;
            let nms = NmsParams::for_scene(&scene);
            let score_params = CenterScoreParams::for_scene(&scene);
            let centers = select_centers(&positions, scores, &nms)?;
            log::info!(
                "bench {} points / {} instances: {} centers",
                scene.len(),
                config.instances,
                centers.len()
            );
            let stages = vec![
                time_stage("scoring", warmup, reps, || score_scene(&scene, &score_params).map(drop))?,
                time_stage("nms", warmup, reps, || select_centers(&positions, scores, &nms).map(drop))?,
                time_stage("assignment", warmup, reps, || {
                    assign_points(&positions, emb.embeddings.view(), scores, &centers, &nms).map(drop)
                })?,
                time_stage("clustering", warmup, reps, || {
                    segment(&scene, emb.embeddings.view(), scores, &nms).map(drop)
                })?,
            ];
            Ok(BenchRow {
                config: *config,
                points: scene.len(),
                stages,
                host: host.clone(),
            })
        })
        .collect()
}

pub fn bench_rows_to_tsv(rows: &[BenchRow]) -> String {
    let mut s = String::from("points\tinstances\tdim\tstage\treps\tmedian_ms\tp95_ms\tos\tarch\tlogical_cpus\tthreads\tcpu_model\n");
    for r in rows {
        for st in &r.stages {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{}\t{}\t{}\t{}\t{}",
                r.points,
                r.config.instances,
                r.config.dim,
                st.stage,
                st.samples.len(),
                st.median * 1e3,
                st.p95 * 1e3,
                r.host.os,
                r.host.arch,
                r.host.logical_cpus,
                r.host.threads,
                r.host.cpu_model
            );
        }
    }
    s
}

pub fn bench_rows_to_table(rows: &[BenchRow]) -> String {
    let mut s = String::new();
    if let Some(h) = rows.first().map(|r| &r.host) {
        let _ = writeln!(
            s,
            "host: {} {} / {} ({} logical cpus, {} threads)",
            h.os, h.arch, h.cpu_model, h.logical_cpus, h.threads
        );
    }
    let _ = writeln!(s, "{:>8} {:>4} {:<11} {:>11} {:>11}", "points", "K", "stage", "median ms", "p95 ms");
    for r in rows {
        for st in &r.stages {
            let _ = writeln!(
                s,
                "{:>8} {:>4} {:<11} {:>11.3} {:>11.3}",
                r.points,
                r.config.instances,
                st.stage,
                st.median * 1e3,
                st.p95 * 1e3
            );
        }
    }
    s
}
