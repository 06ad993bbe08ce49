use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Deserialize;

use depthbox_core::bench::{bench_scene, hardware_description};
use depthbox_core::evaluation::{evaluate_scene, EvalConfig, EvalReport};
use depthbox_core::fusion::{FusionConfig, DEFAULT_MERGE_THRESHOLD, DEFAULT_VOXEL_SIZE};
use depthbox_core::mask_pipeline::DEFAULT_TAU;
use depthbox_core::nav::{column_scenarios, run_navigation, ApfConfig, RobotState, WorldModel2D};
use depthbox_core::oracle::{
    annotate_scene, five_object_view, make_synthetic_scene, three_box_scene, two_cube_scene,
    PerturbationConfig, SyntheticSceneSpec,
};
use depthbox_core::pipeline::{detect_scene, PipelineConfig};
use depthbox_core::projection::ReconstructConfig;
use depthbox_core::scene_io::{
    load_instances, load_scene, read_boxes, read_ground_truth, write_instances,
};

#[derive(Parser)]
#[command(
    name = "depthbox",
    version,
    about = "3D object boxes from posed depth views and 2D instance masks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct and fuse object instances for a scene.
    Detect {
        scene: PathBuf,
        out: PathBuf,
        #[command(flatten)]
        geometry: GeometryArgs,
    },
    /// Score predicted instances against ground truth.
    Eval {
        /// Prediction directory written by `detect`; repeat for several scenes.
        #[arg(long, required = true)]
        pred: Vec<PathBuf>,
        /// Ground-truth directory (or a scene directory containing `gt/`),
        /// one per `--pred`.
        #[arg(long, required = true)]
        gt: Vec<PathBuf>,
        /// Where to write report.json and report.txt (defaults to the first --pred).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = positive)]
        voxel_size: Option<f64>,
    },
    /// Time the geometry stages per scene and per view.
    Bench {
        scene: PathBuf,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
        repeats: u32,
        #[command(flatten)]
        geometry: GeometryArgs,
    },
    /// Write a synthetic box scene with oracle detections.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// JSON scene description (boxes, intrinsics, trajectory).
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        spec: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// TOML perturbation config for the oracle detections.
        #[arg(long)]
        noise: Option<PathBuf>,
    },
    /// Drive the simulated wheelchair toward a target and export the trajectory.
    Navsim {
        /// JSON world file (obstacles, target, goal_radius).
        #[arg(
            long,
            conflicts_with = "scenario",
            required_unless_present = "scenario"
        )]
        world: Option<PathBuf>,
        #[arg(long, value_enum)]
        scenario: Option<Scenario>,
        /// boxes.json from `detect`; the box with `--label` becomes the target.
        #[arg(long, requires = "label")]
        boxes: Option<PathBuf>,
        #[arg(long)]
        label: Option<String>,
        /// Start pose as x,y,heading.
        #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
        start: Option<(f64, f64, f64)>,
        #[arg(long, default_value_t = 4000)]
        max_steps: usize,
        /// TOML controller config (any ApfConfig field).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GeometryArgs {
    /// Z-score threshold [default: 2.0].
    #[arg(long, value_parser = positive)]
    tau: Option<f64>,
    /// Voxel edge for cloud deduplication in meters [default: 0.02].
    #[arg(long, value_parser = positive)]
    voxel_size: Option<f64>,
    /// Same-class boxes merge above this IoU [default: 0.8].
    #[arg(long, value_parser = unit_interval)]
    merge_threshold: Option<f64>,
    /// TOML file with any of tau, voxel_size, merge_threshold; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    ThreeBoxes,
    TwoCubes,
    FiveObjects,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    Open,
    Column,
    Offset,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryFile {
    tau: Option<f64>,
    voxel_size: Option<f64>,
    merge_threshold: Option<f64>,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be > 0, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v <= 1.0 => Ok(v),
        Ok(v) => Err(format!("must lie in (0, 1], got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_pose(s: &str) -> Result<(f64, f64, f64), String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, th] => Ok((x, y, th)),
        _ => Err(format!("expected x,y,heading, got '{s}'")),
    }
}

impl GeometryArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let file = match &self.config {
            Some(p) => {
                let text =
                    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str::<GeometryFile>(&text)
                    .with_context(|| format!("parsing {}", p.display()))?
            }
            None => GeometryFile::default(),
        };
        let tau = self.tau.or(file.tau).unwrap_or(DEFAULT_TAU);
        let voxel_size = self
            .voxel_size
            .or(file.voxel_size)
            .unwrap_or(DEFAULT_VOXEL_SIZE);
        let merge_threshold = self
            .merge_threshold
            .or(file.merge_threshold)
            .unwrap_or(DEFAULT_MERGE_THRESHOLD);
        if tau.is_nan() || tau <= 0.0 {
            bail!("tau must be > 0, got {tau}");
        }
        if voxel_size.is_nan() || voxel_size <= 0.0 {
            bail!("voxel_size must be > 0, got {voxel_size}");
        }
        if !(merge_threshold > 0.0 && merge_threshold <= 1.0) {
            bail!("merge_threshold must lie in (0, 1], got {merge_threshold}");
        }
        Ok(PipelineConfig {
            reconstruct: ReconstructConfig {
                tau,
                ..Default::default()
            },
            fusion: FusionConfig {
                merge_threshold,
                voxel_size,
            },
        })
    }
}

fn detect(scene_dir: &Path, out: &Path, geometry: &GeometryArgs) -> Result<()> {
    let config = geometry.resolve()?;
    let scene =
        load_scene(scene_dir).with_context(|| format!("loading scene {}", scene_dir.display()))?;
    let (instances, counts) = detect_scene(&scene, &config, true);
    let boxes = write_instances(&instances, out)?;
    println!("views:          {}", counts.views);
    println!("detections in:  {}", counts.detections_in);
    println!("dropped:        {}", counts.dropped);
    println!("per-view boxes: {}", counts.per_view_instances);
    println!("instances out:  {}", counts.instances_out);
    info!("wrote {}", boxes.display());
    Ok(())
}

fn gt_dir(p: &Path) -> PathBuf {
    if p.join("instances.json").is_file() {
        p.to_path_buf()
    } else {
        p.join("gt")
    }
}

fn eval(
    pred: &[PathBuf],
    gt: &[PathBuf],
    out: Option<&Path>,
    voxel_size: Option<f64>,
) -> Result<()> {
    if pred.len() != gt.len() {
        bail!("need one --gt per --pred ({} vs {})", gt.len(), pred.len());
    }
    let mut reports = Vec::with_capacity(pred.len());
    for (p, g) in pred.iter().zip(gt) {
        let predictions =
            load_instances(p).with_context(|| format!("loading predictions {}", p.display()))?;
        let truth = read_ground_truth(&gt_dir(g))
            .with_context(|| format!("loading ground truth {}", g.display()))?;
        let config = EvalConfig {
            voxel_size: voxel_size.unwrap_or(DEFAULT_VOXEL_SIZE),
            vocabulary: truth
                .vocabulary
                .map(|v| v.into_iter().collect::<BTreeSet<_>>()),
            ..Default::default()
        };
        let report = evaluate_scene(&predictions, &truth.instances, &config)
            .with_context(|| format!("evaluating {}", p.display()))?;
        reports.push(report);
    }
    let report =
        EvalReport::macro_average(&reports).ok_or_else(|| anyhow!("nothing to evaluate"))?;
    let table = report.to_table();
    print!("{table}");
    let out = out.unwrap_or(&pred[0]);
    fs::create_dir_all(out)?;
    fs::write(
        out.join("report.json"),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;
    fs::write(out.join("report.txt"), table)?;
    Ok(())
}

fn bench(scene_dir: &Path, repeats: u32, geometry: &GeometryArgs) -> Result<()> {
    let config = geometry.resolve()?;
    let scene =
        load_scene(scene_dir).with_context(|| format!("loading scene {}", scene_dir.display()))?;
    let report = bench_scene(&scene, &config, repeats as usize);
    println!("# hardware: {}", hardware_description());
    print!("{}", report.to_table());
    Ok(())
}

fn synth(
    out: &Path,
    spec: Option<&Path>,
    preset: Option<Preset>,
    noise: Option<&Path>,
) -> Result<()> {
    let spec: SyntheticSceneSpec = match (spec, preset) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        (None, Some(Preset::ThreeBoxes)) => three_box_scene(),
        (None, Some(Preset::TwoCubes)) => two_cube_scene(),
        (None, Some(Preset::FiveObjects)) => five_object_view(),
        (None, None) => bail!("need --spec or --preset"),
    };
    let noise = match noise {
        Some(p) => PerturbationConfig::load(p)?,
        None => PerturbationConfig::default(),
    };
    make_synthetic_scene(&spec, out)?;
    let n = annotate_scene(out, &noise)?;
    println!("views:      {}", spec.trajectory.len());
    println!("objects:    {}", spec.boxes.len());
    println!("detections: {n}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn navsim(
    world: Option<&Path>,
    scenario: Option<Scenario>,
    boxes: Option<&Path>,
    label: Option<&str>,
    start: Option<(f64, f64, f64)>,
    max_steps: usize,
    config: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let (mut world, mut state) = match (world, scenario) {
        (Some(p), _) => (WorldModel2D::load(p)?, RobotState::at(0.0, 0.0, 0.0)),
        (None, Some(s)) => {
            let idx = match s {
                Scenario::Open => 0,
                Scenario::Column => 1,
                Scenario::Offset => 2,
            };
            let sc = column_scenarios().swap_remove(idx);
            (sc.world, sc.start)
        }
        (None, None) => bail!("need --world or --scenario"),
    };
    if let Some((x, y, th)) = start {
        state = RobotState::at(x, y, th);
    }
    if let (Some(path), Some(label)) = (boxes, label) {
        let records = read_boxes(path)?;
        let rec = records
            .iter()
            .filter(|r| r.label == label)
            .max_by(|a, b| a.score.total_cmp(&b.score))
            .ok_or_else(|| anyhow!("no box labeled '{label}' in {}", path.display()))?;
        world = WorldModel2D::with_box_target(world.obstacles, &rec.bbox(), world.goal_radius)?;
    }
    let cfg: ApfConfig = match config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ApfConfig::default(),
    };
    let traj = run_navigation(&world, &state, &cfg, max_steps)?;
    traj.write_csv(out)?;
    println!("outcome:       {}", traj.outcome);
    println!("steps:         {}", traj.step_count());
    println!("path length:   {:.3} m", traj.path_length());
    println!("min clearance: {:.3} m", traj.min_clearance);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Detect {
            scene,
            out,
            geometry,
        } => detect(&scene, &out, &geometry),
        Command::Eval {
            pred,
            gt,
            out,
            voxel_size,
        } => eval(&pred, &gt, out.as_deref(), voxel_size),
        Command::Bench {
            scene,
            repeats,
            geometry,
        } => bench(&scene, repeats, &geometry),
        Command::Synth {
            out,
            spec,
            preset,
            noise,
        } => synth(&out, spec.as_deref(), preset, noise.as_deref()),
        Command::Navsim {
            world,
            scenario,
            boxes,
            label,
            start,
            max_steps,
            config,
            out,
        } => navsim(
            world.as_deref(),
            scenario,
            boxes.as_deref(),
            label.as_deref(),
            start,
            max_steps,
            config.as_deref(),
            &out,
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
