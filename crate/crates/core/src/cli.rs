//! Command-line front end: `generate`, `score`, `embed`, `cluster`, `eval`,
//! `bench` and `loss`.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 parse, 5 invalid input.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;

use crate::clustering::{segment, NmsParams, DEFAULT_THETA_TH};
use crate::embedding::{load_embeddings, oracle_embed, OracleParams};
use crate::error::{Error, Result};
use crate::eval::bench::{bench_rows_to_table, bench_rows_to_tsv, MIN_WARMUP};
use crate::eval::{self, BenchConfig, ConfidenceMode, EvalOptions, SceneResult};
use crate::io;
use crate::scene::{sample_blocks, Scene, DEFAULT_BLOCK_SIZE};
use crate::scenegen::{self, builtin_model, CenterMode, ModelKind, SceneGenParams};
use crate::scoring::{
    block_loss, score_scene, CenterScoreParams, LossNormalization, LossParams, DEFAULT_ALPHA, DEFAULT_BETA,
    DEFAULT_EPSILON_1, DEFAULT_EPSILON_2,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_PARSE: i32 = 4;
pub const EXIT_INVALID: i32 = 5;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        Error::Parse(_) => EXIT_PARSE,
        Error::InvalidInput(_) | Error::OutOfRange { .. } => EXIT_INVALID,
    }
}

#[derive(Debug, Parser)]
#[command(name = "fpcc", version, about = "Point cloud instance segmentation by center-point clustering")]
pub struct Cli {
    /// Cap on worker threads (default: all cores)
    #[arg(long, global = true, env = "FPCC_THREADS")]
    pub threads: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic bin-picking scenes
    Generate(GenerateArgs),
    /// Write ground-truth center scores of a scene
    Score(ScoreArgs),
    /// Write oracle embeddings and predicted scores for a labeled scene
    Embed(EmbedArgs),
    /// Select centers and assign points
    Cluster(ClusterArgs),
    /// Compute AP, precision@m and score histograms
    Eval(EvalArgs),
    /// Time scoring, NMS and assignment
    Bench(BenchArgs),
    /// Compute the embedded-feature, center-score and total losses
    Loss(LossArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutDir {
    /// Directory for outputs without an explicit path
    #[arg(long, env = "FPCC_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

impl OutDir {
    fn resolve(&self, explicit: &Option<PathBuf>, default_name: String) -> Result<PathBuf> {
        let path = explicit.clone().unwrap_or_else(|| self.out_dir.join(default_name));
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        Ok(path)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CenterModeArg {
    Model,
    Visible,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelArg {
    Sphere,
    Box,
    Cylinder,
    LBracket,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Sphere => ModelKind::Sphere,
            ModelArg::Box => ModelKind::Box,
            ModelArg::Cylinder => ModelKind::Cylinder,
            ModelArg::LBracket => ModelKind::LBracket,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub out: OutDir,
    /// Number of scenes
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// File name prefix; scenes are written as <prefix>_<i>.fpcc-scene
    #[arg(long, default_value = "scene")]
    pub prefix: String,
    #[arg(long, value_enum, default_value = "cylinder")]
    pub model: ModelArg,
    /// Model size; for the cylinder, its half-length
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Surface samples drawn from the model
    #[arg(long, default_value_t = 4000)]
    pub model_samples: usize,
    #[arg(long, default_value_t = 10.0)]
    pub bin_x: f64,
    #[arg(long, default_value_t = 10.0)]
    pub bin_y: f64,
    #[arg(long, default_value_t = 4.0)]
    pub bin_z: f64,
    #[arg(long, default_value_t = 10)]
    pub min_instances: usize,
    #[arg(long, default_value_t = 40)]
    pub max_instances: usize,
    #[arg(long, default_value_t = 500)]
    pub min_points: usize,
    #[arg(long, default_value_t = 1500)]
    pub max_points: usize,
    /// Minimum center spacing (default: 1.05·d_max)
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Drop points hidden from above
    #[arg(long)]
    pub occlusion: bool,
    /// Column width and depth tolerance of the occlusion grid
    #[arg(long, default_value_t = 0.05)]
    pub cell_size: f64,
    #[arg(long, value_enum, default_value = "model")]
    pub center_mode: CenterModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub out: OutDir,
    #[arg(long)]
    pub scene: PathBuf,
    /// Output path (default: <out-dir>/<scene stem>.fpcc-scores)
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Center-score exponent β
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    /// Override the scene's d_max
    #[arg(long)]
    pub d_max: Option<f64>,
    /// Print a histogram of the scores with this many bins
    #[arg(long)]
    pub histogram_bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub out: OutDir,
    #[arg(long)]
    pub scene: PathBuf,
    /// Output path (default: <out-dir>/<scene stem>.fpcc-emb)
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    /// Minimum distance between instance anchors
    #[arg(long, default_value_t = 12.0)]
    pub anchor_separation: f64,
    /// Expected norm of the per-point embedding noise
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// Std of the noise added to predicted center scores
    #[arg(long, default_value_t = 0.0)]
    pub score_sigma: f64,
    /// Center-score exponent β
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    /// Override the scene's d_max
    #[arg(long)]
    pub d_max: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub out: OutDir,
    #[arg(long)]
    pub scene: PathBuf,
    /// Embeddings with predicted scores
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Output path (default: <out-dir>/<scene stem>.fpcc-seg)
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Center-score threshold θ_th
    #[arg(long, default_value_t = DEFAULT_THETA_TH)]
    pub theta: f64,
    /// Override the scene's d_max
    #[arg(long)]
    pub d_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ConfidenceArg {
    Center,
    Mean,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub out: OutDir,
    /// Ground-truth scene (repeat, paired in order with --seg)
    #[arg(long = "scene", required = true)]
    pub scenes: Vec<PathBuf>,
    /// Segmentation (repeat, paired in order with --scene)
    #[arg(long = "seg", required = true)]
    pub segs: Vec<PathBuf>,
    /// Embeddings supplying instance confidences (repeat, paired with --scene).
    /// Without them instances are ranked by center order in the file.
    #[arg(long = "embeddings")]
    pub embeddings: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "center")]
    pub confidence: ConfidenceArg,
    /// IoU threshold (repeat for several)
    #[arg(long = "iou", default_values_t = vec![0.5])]
    pub iou: Vec<f64>,
    /// IoU threshold of the precision@m curve
    #[arg(long, default_value_t = 0.5)]
    pub precision_iou: f64,
    /// Add a ground-truth center-score histogram with this many bins
    #[arg(long)]
    pub histogram_bins: Option<usize>,
    /// Center-score exponent β for the histogram
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    /// TSV report path (default: <out-dir>/report.tsv)
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub out: OutDir,
    /// Scene sizes (comma separated)
    #[arg(long, value_delimiter = ',', default_values_t = vec![60_000])]
    pub points: Vec<usize>,
    /// Instance counts (comma separated); every pair with --points is run
    #[arg(long, value_delimiter = ',', default_values_t = vec![40])]
    pub instances: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Untimed iterations before measuring (at least 3)
    #[arg(long, default_value_t = MIN_WARMUP)]
    pub warmup: usize,
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// TSV output path (default: <out-dir>/bench.tsv)
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormalizationArg {
    Sum,
    Mean,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    #[command(flatten)]
    pub out: OutDir,
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Same-instance margin ε₁
    #[arg(long, default_value_t = DEFAULT_EPSILON_1)]
    pub epsilon1: f64,
    /// Cross-instance margin ε₂
    #[arg(long, default_value_t = DEFAULT_EPSILON_2)]
    pub epsilon2: f64,
    /// Weight α of the center-score loss
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Center-score exponent β
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    /// Override the scene's d_max
    #[arg(long)]
    pub d_max: Option<f64>,
    /// Disable the valid distance mask
    #[arg(long)]
    pub no_vdm: bool,
    /// Disable the attention score weights
    #[arg(long)]
    pub no_asm: bool,
    /// Report all three mask configurations
    #[arg(long)]
    pub ablation: bool,
    #[arg(long, value_enum, default_value = "sum")]
    pub normalization: NormalizationArg,
    #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
    pub block_size: usize,
    /// Seed of the block sampler
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the losses as TSV
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();

    let result = match cli.threads {
        Some(0) => Err(Error::invalid("--threads must be at least 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| dispatch(&cli.command))),
        None => dispatch(&cli.command),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: &Command) -> Result<String> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Score(a) => score(a),
        Command::Embed(a) => embed(a),
        Command::Cluster(a) => cluster(a),
        Command::Eval(a) => evaluate(a),
        Command::Bench(a) => bench(a),
        Command::Loss(a) => loss(a),
    }
}

fn stem(path: &Path) -> String {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let name = name.strip_suffix(".gz").unwrap_or(name);
    name.split('.').next().unwrap_or(name).to_string()
}

fn load_scene(path: &Path, d_max: Option<f64>) -> Result<Scene> {
    let scene = io::read_scene(path)?;
    match d_max {
        Some(d) => scene.with_d_max(d),
        None => Ok(scene),
    }
}

fn generate(a: &GenerateArgs) -> Result<String> {
    if a.count == 0 {
        return Err(Error::invalid("--count must be at least 1"));
    }
    let model = builtin_model(a.model.into(), a.scale, a.model_samples, a.seed)?;
    let params = SceneGenParams {
        bin_extent: Vector3::new(a.bin_x, a.bin_y, a.bin_z),
        instance_count: a.min_instances..=a.max_instances,
        points_per_instance: a.min_points..=a.max_points,
        min_center_spacing: a.spacing,
        occlusion: a.occlusion,
        cell_size: a.cell_size,
        center_mode: match a.center_mode {
            CenterModeArg::Model => CenterMode::ModelCentroid,
            CenterModeArg::Visible => CenterMode::VisibleCentroid,
        },
        seed: a.seed,
    };
    let scenes = scenegen::generate_batch(&model, &params, a.count)?;
    let mut out = format!("model {} d_max {:.6}\n", model.name, model.d_max());
    for (i, (scene, report)) in scenes.iter().enumerate() {
        let path = a.out.resolve(&None, format!("{}_{i:03}.fpcc-scene", a.prefix))?;
        io::write_scene(scene, &path)?;
        let _ = writeln!(
            out,
            "{}: {} points, {}/{} instances, {} culled",
            path.display(),
            scene.len(),
            report.placed_instances,
            report.requested_instances,
            report.culled_points
        );
        for w in &report.warnings {
            let _ = writeln!(out, "  warning: {w}");
        }
    }
    Ok(out)
}

fn score(a: &ScoreArgs) -> Result<String> {
    let scene = load_scene(&a.scene, a.d_max)?;
    let params = CenterScoreParams::new(a.beta, scene.d_max())?;
    let scores = score_scene(&scene, &params)?;
    let path = a.out.resolve(&a.output, format!("{}.fpcc-scores", stem(&a.scene)))?;
    let header = format!("center scores\nbeta {}\nd_max {}\npoints {}", a.beta, scene.d_max(), scores.len());
    io::write_scores(&header, &scores, &path)?;
    let mut out = format!("{}: {} scores\n", path.display(), scores.len());
    if let Some(bins) = a.histogram_bins {
        let h = eval::score_histogram(&scores, bins)?;
        append_histogram(&mut out, &h);
    }
    Ok(out)
}

fn append_histogram(out: &mut String, h: &[usize]) {
    let w = 1.0 / h.len() as f64;
    for (i, c) in h.iter().enumerate() {
        let _ = writeln!(out, "{:.3}-{:.3}  {c}", i as f64 * w, (i + 1) as f64 * w);
    }
}

fn embed(a: &EmbedArgs) -> Result<String> {
    let scene = load_scene(&a.scene, a.d_max)?;
    let params = OracleParams {
        dim: a.dim,
        anchor_separation: a.anchor_separation,
        intra_noise_sigma: a.sigma,
        score_noise_sigma: a.score_sigma,
        beta: a.beta,
        seed: a.seed,
    };
    let emb = oracle_embed(&scene, &params)?;
    let path = a.out.resolve(&a.output, format!("{}.fpcc-emb", stem(&a.scene)))?;
    io::write_embeddings(&emb, &path)?;
    Ok(format!("{}: {} x {}\n", path.display(), emb.len(), emb.dim()))
}

fn cluster(a: &ClusterArgs) -> Result<String> {
    let scene = load_scene(&a.scene, a.d_max)?;
    let emb = load_embeddings(&a.embeddings, scene.len())?;
    let params = NmsParams::new(a.theta, scene.d_max())?;
    let seg = segment(&scene, emb.embeddings.view(), emb.scores()?, &params)?;
    let path = a.out.resolve(&a.output, format!("{}.fpcc-seg", stem(&a.scene)))?;
    io::write_segmentation(&seg, &path)?;
    Ok(format!(
        "{}: {} instances, {} noise points\n",
        path.display(),
        seg.num_instances(),
        seg.noise_count()
    ))
}

fn evaluate(a: &EvalArgs) -> Result<String> {
    if a.scenes.len() != a.segs.len() {
        return Err(Error::invalid(format!("{} --scene but {} --seg", a.scenes.len(), a.segs.len())));
    }
    if !a.embeddings.is_empty() && a.embeddings.len() != a.scenes.len() {
        return Err(Error::invalid(format!(
            "{} --embeddings for {} scenes",
            a.embeddings.len(),
            a.scenes.len()
        )));
    }
    let mode = match a.confidence {
        ConfidenceArg::Center => ConfidenceMode::CenterScore,
        ConfidenceArg::Mean => ConfidenceMode::MeanScore,
    };
    let mut scenes = Vec::with_capacity(a.scenes.len());
    let mut segs = Vec::with_capacity(a.scenes.len());
    for (i, (sp, gp)) in a.scenes.iter().zip(&a.segs).enumerate() {
        let scene = io::read_scene(sp)?;
        let mut seg = io::read_segmentation(gp)?;
        if let Some(ep) = a.embeddings.get(i) {
            let emb = load_embeddings(ep, scene.len())?;
            seg.confidences = eval::instance_confidences(&seg, emb.scores()?, mode)?;
        }
        scenes.push(scene);
        segs.push(seg);
    }
    let results: Vec<SceneResult<'_>> = scenes
        .iter()
        .zip(&segs)
        .map(|(scene, segmentation)| SceneResult { scene, segmentation })
        .collect();
    let opts = EvalOptions {
        iou_thresholds: a.iou.clone(),
        precision_iou: a.precision_iou,
        ..Default::default()
    };
    let mut report = eval::evaluate(&results, &opts)?;
    if let Some(bins) = a.histogram_bins {
        let mut all = Vec::new();
        for s in &scenes {
            all.extend(score_scene(s, &CenterScoreParams::new(a.beta, s.d_max())?)?);
        }
        report.score_histogram = Some(eval::score_histogram(&all, bins)?);
    }
    let path = a.out.resolve(&a.report, "report.tsv".into())?;
    io::write_report(&report.to_tsv(), &path)?;
    Ok(report.to_table())
}

fn bench(a: &BenchArgs) -> Result<String> {
    let configs: Vec<BenchConfig> = a
        .points
        .iter()
        .flat_map(|&points| {
            a.instances.iter().map(move |&instances| BenchConfig {
                points,
                instances,
                dim: a.dim,
                seed: a.seed,
            })
        })
        .collect();
    let rows = eval::benchmark(&configs, a.reps, a.warmup)?;
    let path = a.out.resolve(&a.output, "bench.tsv".into())?;
    io::write_report(&bench_rows_to_tsv(&rows), &path)?;
    Ok(bench_rows_to_table(&rows))
}

fn loss(a: &LossArgs) -> Result<String> {
    let scene = load_scene(&a.scene, a.d_max)?;
    let emb = load_embeddings(&a.embeddings, scene.len())?;
    let gt = score_scene(&scene, &CenterScoreParams::new(a.beta, scene.d_max())?)?;
    let pred = match emb.pred_scores.as_deref() {
        Some(p) => p,
        None => {
            log::warn!("no predicted scores; center-score loss uses ground truth and is 0");
            &gt
        }
    };
    let base = LossParams {
        epsilon_1: a.epsilon1,
        epsilon_2: a.epsilon2,
        alpha: a.alpha,
        use_vdm: !a.no_vdm,
        use_asm: !a.no_asm,
        normalization: match a.normalization {
            NormalizationArg::Sum => LossNormalization::Sum,
            NormalizationArg::Mean => LossNormalization::WeightedMean,
        },
    };
    base.validate()?;
    let configs: Vec<(String, LossParams)> = if a.ablation {
        let names = ["none", "vdm", "vdm+asm"];
        names.iter().map(|n| n.to_string()).zip(base.ablation_configs()).collect()
    } else {
        let name = match (base.use_vdm, base.use_asm) {
            (false, false) => "none",
            (true, false) => "vdm",
            (false, true) => "asm",
            (true, true) => "vdm+asm",
        };
        vec![(name.to_string(), base)]
    };
    let blocks = sample_blocks(&scene, a.block_size, a.seed)?;
    let mut table = format!("{} blocks of {}\n{:<8} {:>16} {:>16} {:>16}\n", blocks.len(), a.block_size, "config", "L_EF", "L_CS", "L");
    let mut tsv = String::from("config\tblocks\tl_ef\tl_cs\tl\n");
    for (name, params) in &configs {
        let mut sums = [0.0; 3];
        for b in &blocks {
            let l = block_loss(&scene, emb.embeddings.view(), &gt, pred, b, params)?;
            sums[0] += l.embedded_feature;
            sums[1] += l.center_score;
            sums[2] += l.total;
        }
        let n = blocks.len() as f64;
        let [ef, cs, t] = sums.map(|s| s / n);
        let _ = writeln!(table, "{name:<8} {ef:>16.6} {cs:>16.9} {t:>16.6}");
        let _ = writeln!(tsv, "{name}\t{}\t{ef:.9e}\t{cs:.9e}\t{t:.9e}", blocks.len());
    }
    if let Some(p) = &a.output {
        let path = a.out.resolve(&Some(p.clone()), String::new())?;
        io::write_report(&tsv, &path)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn help_shows_defaults() {
        let mut cmd = Cli::command();
        let loss = cmd.find_subcommand_mut("loss").unwrap().render_long_help().to_string();
        for needle in ["--epsilon1", "default: 5", "--epsilon2", "default: 10", "--alpha", "default: 30", "--beta", "default: 2", "default: 4096"] {
            assert!(loss.contains(needle), "{needle} missing from loss help");
        }
        let cluster = cmd.find_subcommand_mut("cluster").unwrap().render_long_help().to_string();
        assert!(cluster.contains("--theta") && cluster.contains("default: 0.6"));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["fpcc", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["fpcc", "score", "--bogus"]), EXIT_USAGE);
    }

    #[test]
    fn missing_file_exits_io() {
        assert_eq!(run(["fpcc", "score", "--scene", "/nonexistent/x.fpcc-scene"]), EXIT_IO);
    }

    #[test]
    fn bench_warmup_floor() {
        assert_eq!(run(["fpcc", "bench", "--points", "500", "--instances", "2", "--warmup", "2"]), EXIT_INVALID);
    }

    #[test]
    fn stems() {
        assert_eq!(stem(Path::new("/a/scene_001.fpcc-scene.gz")), "scene_001");
        assert_eq!(stem(Path::new("x.fpcc-scene")), "x");
    }
}
