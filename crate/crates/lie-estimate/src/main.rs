//! `lie-estimate`: simulate walks, run estimators over sensor logs, score
//! trajectories and average rotations or poses.
//!
//! Exit codes: 0 ok, 2 usage, 3 bad input, 4 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use legged::config::EstimatorConfig;
use legged::estimators::{EstimatorKind, Initial};
use legged::evaluation::{align_first_pose, evaluate, MetricsReport, Side};
use legged::io::{load_chain, load_json, load_trajectory, read_log, save_chain, save_trajectory, write_log, TrajectoryRow};
use legged::kinematics::{quat_to_rotation, rotation_to_quat};
use legged::replay::{perturb_initial, Replay};
use legged::robot::RobotModel;
use legged::simdata::{biped_chain, generate_walk, sensor_log, SimNoise, WalkProfile};
use lie_core::averaging::{karcher_mean, AveragingConfig};
use lie_core::groups::rotation_to_rpy;
use lie_core::{GroupElement64, GroupTag, LieError, Pose64};
use log::info;
use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const LOG_ENV: &str = "LIE_ESTIMATE_LOG_LEVEL";

#[derive(Parser)]
#[command(name = "lie-estimate", version, about = "Lie group state estimation for legged systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic biped walk: sensor log, truth trajectory and chain.
    Simulate(SimulateArgs),
    /// Run an estimator over a sensor log.
    Run(RunArgs),
    /// Compare an estimated trajectory with the truth; prints JSON.
    Evaluate(EvaluateArgs),
    /// Karcher mean of rotations or poses; prints JSON.
    Average(AverageArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Output directory; receives log.jsonl, truth.csv and chain.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Walk profile JSON; the flags below override its fields.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// s
    #[arg(long)]
    duration: Option<f64>,
    /// Sample period, s.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// m
    #[arg(long)]
    step_length: Option<f64>,
    /// Noise tables for the emulated sensors.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Emit exact sensor readings.
    #[arg(long)]
    zero_noise: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_parser = parse_kind)]
    estimator: EstimatorKind,
    /// Sensor log (JSON Lines).
    #[arg(long)]
    log: PathBuf,
    /// Output trajectory CSV. With several trials, `_NNN` is added to the stem.
    #[arg(long)]
    out: PathBuf,
    /// Kinematic chain JSON; defaults to the simulated biped.
    #[arg(long)]
    chain: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trajectory CSV whose first row is the initial state.
    #[arg(long)]
    initial: Option<PathBuf>,
    /// Truth trajectory; when given, metrics are printed per trial.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Run the trials on all cores.
    #[arg(long)]
    parallel: bool,
    /// Initial roll and pitch errors ~ U(-a, a), deg.
    #[arg(long, default_value_t = 0.0)]
    max_tilt_deg: f64,
    /// Initial velocity errors ~ U(-a, a) per axis, m/s.
    #[arg(long, default_value_t = 0.0)]
    max_vel: f64,
    #[arg(long, default_value_t = 100)]
    rpe_interval: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long, default_value_t = 100)]
    rpe_interval: usize,
    #[arg(long, value_enum, default_value_t = ErrorSide::Left)]
    side: ErrorSide,
    /// Move the estimate so that its first pose matches the truth.
    #[arg(long)]
    align: bool,
}

#[derive(Args)]
struct AverageArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    /// JSON array of `{"q": [w, x, y, z], "p": [x, y, z], "weight": w}`;
    /// `p` is needed for poses, `weight` defaults to 1.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    step_size: f64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ErrorSide {
    Left,
    Right,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Mode {
    Rotation,
    Pose,
}

fn parse_kind(s: &str) -> Result<EstimatorKind, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = EstimatorKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown estimator '{s}', expected one of {}", names.join(", "))
    })
}

/// An error with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<legged::error::Error> for Failure {
    fn from(e: legged::error::Error) -> Self {
        Self { code: if e.is_numeric() { 4 } else { 3 }, message: e.to_string() }
    }
}

impl From<LieError> for Failure {
    fn from(e: LieError) -> Self {
        Self { code: 4, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_logging() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Run(a) => run(&a),
        Command::Evaluate(a) => evaluate_cmd(&a),
        Command::Average(a) => average(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn init_logging() -> Result<(), String> {
    let level = std::env::var(LOG_ENV).unwrap_or_else(|_| "warn".into());
    if !["error", "warn", "info", "debug"].contains(&level.as_str()) {
        return Err(format!("{LOG_ENV} must be one of error, warn, info, debug; got '{level}'"));
    }
    env_logger::Builder::new().parse_filters(&level).format_timestamp(None).init();
    Ok(())
}

fn load_config(path: Option<&Path>) -> Outcome<EstimatorConfig> {
    Ok(match path {
        Some(p) => EstimatorConfig::load(p)?,
        None => EstimatorConfig::default(),
    })
}

fn print_json<T: Serialize>(value: &T) -> Outcome<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::input(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn simulate(a: &SimulateArgs) -> Outcome<()> {
    let cfg = load_config(a.config.as_deref())?;
    let mut profile: WalkProfile = match &a.profile {
        Some(p) => load_json(p)?,
        None => WalkProfile::default(),
    };
    if let Some(v) = a.duration {
        profile.duration = v;
    }
    if let Some(v) = a.dt {
        profile.dt = v;
    }
    if let Some(v) = a.steps {
        profile.steps = v;
    }
    if let Some(v) = a.step_length {
        profile.step_length = v;
    }
    profile.validate().map_err(|e| Failure { code: 2, message: e.to_string() })?;
    let robot = RobotModel::new(biped_chain(cfg.robot.foot_length, cfg.robot.foot_width)?, &cfg.robot)?;
    let traj = generate_walk(&robot, &profile, a.seed)?;
    let noise = if a.zero_noise { SimNoise::zero() } else { SimNoise::from_config(&cfg) };
    let log = sensor_log(&traj, &noise, &cfg.gravity(), a.seed)?;
    let truth: Vec<TrajectoryRow> =
        traj.samples.iter().map(|s| TrajectoryRow { t: s.t, pose: s.base, v: s.v, extras: vec![] }).collect();

    fs::create_dir_all(&a.out)?;
    write_log(&a.out.join("log.jsonl"), &log)?;
    save_trajectory(&a.out.join("truth.csv"), &truth)?;
    save_chain(&a.out.join("chain.json"), &robot.chain)?;
    info!("wrote {} records and {} truth samples to {}", log.len(), truth.len(), a.out.display());
    Ok(())
}

/// Output path of trial `i` out of `n`.
fn trial_path(out: &Path, i: u64, n: u64) -> PathBuf {
    if n == 1 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectory");
    let name = match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{i:03}.{ext}"),
        None => format!("{stem}_{i:03}"),
    };
    out.with_file_name(name)
}

#[derive(Serialize)]
struct TrialReport {
    trial: u64,
    seed: u64,
    output: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<MetricsReport>,
}

fn run(a: &RunArgs) -> Outcome<()> {
    let cfg = load_config(a.config.as_deref())?;
    let chain = match &a.chain {
        Some(p) => load_chain(p)?,
        None => biped_chain(cfg.robot.foot_length, cfg.robot.foot_width)?,
    };
    let robot = Arc::new(RobotModel::new(chain, &cfg.robot)?);
    let records = read_log(&a.log)?;
    let replay = Replay::from_records(&records, &cfg)?;
    let init = match &a.initial {
        Some(p) => {
            let first = load_trajectory(p)?.into_iter().next().ok_or_else(|| Failure::input(format!("{}: no rows", p.display())))?;
            Initial::new(first.pose, first.v)
        }
        None => {
            let rot = replay.imu[0].orientation.unwrap_or_else(nalgebra::Matrix3::identity);
            Initial::new(Pose64::new(rot, Vector3::zeros()), Vector3::zeros())
        }
    };
    let truth = a.truth.as_deref().map(load_trajectory).transpose()?;
    let perturbed = a.max_tilt_deg > 0.0 || a.max_vel > 0.0;

    let trial = |i: u64| -> Outcome<TrialReport> {
        let seed = a.seed + i;
        let start = if perturbed { perturb_initial(&init, seed, a.max_tilt_deg, a.max_vel)? } else { init.clone() };
        let rows = replay.run(a.estimator, robot.clone(), &cfg, &start)?;
        let output = trial_path(&a.out, i, a.trials);
        save_trajectory(&output, &rows)?;
        let metrics = truth.as_ref().map(|t| evaluate(t, &rows, a.rpe_interval, Side::Left)).transpose()?;
        info!("trial {i}: {} rows to {}", rows.len(), output.display());
        Ok(TrialReport { trial: i, seed, output, metrics })
    };
    let reports: Vec<TrialReport> = if a.parallel {
        (0..a.trials).into_par_iter().map(trial).collect::<Outcome<_>>()?
    } else {
        (0..a.trials).map(trial).collect::<Outcome<_>>()?
    };
    if truth.is_some() {
        print_json(&reports)?;
    }
    Ok(())
}

fn evaluate_cmd(a: &EvaluateArgs) -> Outcome<()> {
    let truth = load_trajectory(&a.truth)?;
    let mut estimate = load_trajectory(&a.estimate)?;
    if a.align {
        estimate = align_first_pose(&truth, &estimate)?;
    }
    let side = match a.side {
        ErrorSide::Left => Side::Left,
        ErrorSide::Right => Side::Right,
    };
    print_json(&evaluate(&truth, &estimate, a.rpe_interval, side)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightedElement {
    q: [f64; 4],
    #[serde(default)]
    p: Option<[f64; 3]>,
    #[serde(default = "unit_weight")]
    weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Serialize)]
struct Fused {
    q: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<[f64; 3]>,
    rpy_deg: [f64; 3],
}

fn average(a: &AverageArgs) -> Outcome<()> {
    let items: Vec<WeightedElement> = load_json(&a.input)?;
    if items.is_empty() {
        return Err(Failure::input(format!("{}: no elements", a.input.display())));
    }
    let mut elements = Vec::with_capacity(items.len());
    for (i, it) in items.iter().enumerate() {
        let norm = it.q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 1e-9 && norm.is_finite()) || !(it.weight > 0.0 && it.weight.is_finite()) {
            return Err(Failure::input(format!("element {i}: needs a nonzero quaternion and a positive weight")));
        }
        let rot = quat_to_rotation(it.q);
        elements.push(match a.mode {
            Mode::Rotation => GroupElement64::new(GroupTag::SO3, DMatrix::from_column_slice(3, 3, rot.as_slice()))?,
            Mode::Pose => {
                let p = it.p.ok_or_else(|| Failure::input(format!("element {i}: pose mode needs p")))?;
                Pose64::new(rot, Vector3::from(p)).to_element()
            }
        });
    }
    let weights: Vec<f64> = items.iter().map(|it| it.weight).collect();
    let cfg = AveragingConfig { step_size: a.step_size, tolerance: a.tolerance, max_iters: a.max_iters };
    let mean = karcher_mean(&elements, &weights, &cfg)?;
    let m = mean.matrix();
    let rot = m.fixed_view::<3, 3>(0, 0).into_owned();
    let (r, p, y) = rotation_to_rpy(&rot)?;
    print_json(&Fused {
        q: rotation_to_quat(&rot),
        p: (a.mode == Mode::Pose).then(|| [m[(0, 3)], m[(1, 3)], m[(2, 3)]]),
        rpy_deg: [r.to_degrees(), p.to_degrees(), y.to_degrees()],
    })
}
