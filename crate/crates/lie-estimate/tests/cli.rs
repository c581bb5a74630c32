//! End-to-end runs of the binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use legged::io::{load_trajectory, save_trajectory};
use lie_core::groups::rpy_to_rotation;
use lie_core::uncertainty::{GaussianOnGroup, Side};
use lie_core::{GroupElement64, GroupTag};
use nalgebra::{DMatrix, Matrix3, Vector3};
use serde_json::{json, Value};
use tempfile::{tempdir, TempDir};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lie-estimate")).args(args).env_remove("LIE_ESTIMATE_LOG_LEVEL").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A zero-noise four-step walk in a fresh directory.
fn simulated() -> TempDir {
    let dir = tempdir().unwrap();
    ok(&["simulate", "--out", p(dir.path()), "--duration", "5", "--steps", "4", "--zero-noise", "--seed", "2"]);
    dir
}

fn metrics(truth: &Path, estimate: &Path) -> Value {
    serde_json::from_str(&ok(&["evaluate", "--truth", p(truth), "--estimate", p(estimate), "--rpe-interval", "10"])).unwrap()
}

#[test]
fn simulate_writes_one_truth_row_per_sample() {
    let dir = tempdir().unwrap();
    ok(&["simulate", "--out", p(dir.path()), "--duration", "10", "--seed", "1"]);
    let truth = load_trajectory(&dir.path().join("truth.csv")).unwrap();
    assert_eq!(truth.len(), 1000);
    assert!(dir.path().join("log.jsonl").exists() && dir.path().join("chain.json").exists());
}

#[test]
fn simulate_is_deterministic() {
    let (a, b) = (tempdir().unwrap(), tempdir().unwrap());
    for d in [&a, &b] {
        ok(&["simulate", "--out", p(d.path()), "--duration", "4", "--seed", "9"]);
    }
    for f in ["log.jsonl", "truth.csv", "chain.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn ten_steps_of_ten_centimetres_cover_a_metre() {
    let dir = tempdir().unwrap();
    ok(&["simulate", "--out", p(dir.path()), "--steps", "10", "--step-length", "0.1", "--duration", "12"]);
    let truth = load_trajectory(&dir.path().join("truth.csv")).unwrap();
    let dx = truth.last().unwrap().pose.trans.x - truth[0].pose.trans.x;
    assert!((dx - 1.0).abs() < 0.01, "{dx}");
}

#[test]
fn bad_simulation_arguments_are_usage_errors() {
    let dir = tempdir().unwrap();
    assert_eq!(code(&bin(&["simulate", "--out", p(dir.path()), "--dt", "-0.01"])), 2);
    assert_eq!(code(&bin(&["simulate", "--out", p(dir.path()), "--steps", "many"])), 2);
    assert_eq!(code(&bin(&["simulate"])), 2);
}

#[test]
fn legged_odometry_reproduces_a_zero_noise_walk() {
    let dir = simulated();
    let (log, truth, est) = (dir.path().join("log.jsonl"), dir.path().join("truth.csv"), dir.path().join("lo.csv"));
    let chain = dir.path().join("chain.json");
    ok(&["run", "--estimator", "legged-odometry", "--log", p(&log), "--chain", p(&chain), "--initial", p(&truth), "--out", p(&est)]);
    let m = metrics(&truth, &est);
    assert!(m["ate_pos"].as_f64().unwrap() < 1e-6, "{m}");
    assert!(m["ate_rot"].as_f64().unwrap() < 1e-6, "{m}");
    assert_eq!(m["samples"], 500);

    let header = fs::read_to_string(&est).unwrap().lines().next().unwrap().to_owned();
    assert!(header.starts_with("t,px,py,pz,qw,qx,qy,qz,vx,vy,vz"));
}

#[test]
fn runs_are_repeatable() {
    let dir = simulated();
    let (log, truth) = (dir.path().join("log.jsonl"), dir.path().join("truth.csv"));
    let outs = ["a.csv", "b.csv"].map(|f| dir.path().join(f));
    for out in &outs {
        ok(&["run", "--estimator", "diligent-kio-rie", "--log", p(&log), "--initial", p(&truth), "--out", p(out)]);
    }
    assert_eq!(fs::read(&outs[0]).unwrap(), fs::read(&outs[1]).unwrap());
}

#[test]
fn run_reports_bad_names_and_inputs() {
    let dir = simulated();
    let log = dir.path().join("log.jsonl");
    let out = dir.path().join("x.csv");
    assert_eq!(code(&bin(&["run", "--estimator", "kalman", "--log", p(&log), "--out", p(&out)])), 2);
    assert_eq!(code(&bin(&["run", "--estimator", "swa", "--log", "/no/such/log", "--out", p(&out)])), 3);

    let broken = dir.path().join("broken.jsonl");
    fs::write(&broken, "{\"t\": 0, \"kind\": \"imu\"\n").unwrap();
    assert_eq!(code(&bin(&["run", "--estimator", "swa", "--log", p(&broken), "--out", p(&out)])), 3);

    let config = dir.path().join("cfg.json");
    fs::write(&config, "{\"imu\": {\"gyroscope\": -1}}").unwrap();
    assert_eq!(code(&bin(&["run", "--estimator", "swa", "--log", p(&log), "--config", p(&config), "--out", p(&out)])), 3);

    assert_eq!(code(&bin(&["run", "--estimator", "swa", "--log", p(&log), "--out", p(&out), "--trials", "0"])), 2);
}

#[test]
fn trials_run_in_parallel_with_their_own_seeds() {
    let dir = simulated();
    let (log, truth) = (dir.path().join("log.jsonl"), dir.path().join("truth.csv"));
    let run = |out: &str, parallel: bool| -> Value {
        let out = dir.path().join(out);
        let mut args = vec!["run", "--estimator", "diligent-kio", "--log", p(&log), "--initial", p(&truth), "--truth", p(&truth)];
        args.extend(["--out", p(&out), "--trials", "3", "--max-tilt-deg", "20", "--max-vel", "0.3", "--seed", "40"]);
        if parallel {
            args.push("--parallel");
        }
        serde_json::from_str(&ok(&args)).unwrap()
    };
    let serial = run("s.csv", false);
    let parallel = run("p.csv", true);
    let reports = serial.as_array().unwrap();
    assert_eq!(reports.len(), 3);
    assert_eq!(reports.iter().map(|r| r["seed"].as_u64().unwrap()).collect::<Vec<_>>(), [40, 41, 42]);
    for (a, b) in reports.iter().zip(parallel.as_array().unwrap()) {
        assert_eq!(a["metrics"], b["metrics"]);
    }
    assert_ne!(reports[0]["metrics"], reports[1]["metrics"]);
    for i in 0..3 {
        let (s, q) = (dir.path().join(format!("s_{i:03}.csv")), dir.path().join(format!("p_{i:03}.csv")));
        assert_eq!(fs::read(s).unwrap(), fs::read(q).unwrap());
    }
}

#[test]
fn evaluate_scores_copies_and_shifts() {
    let dir = simulated();
    let truth_path = dir.path().join("truth.csv");
    let m = metrics(&truth_path, &truth_path);
    for key in ["ate_rot", "ate_pos", "ate_vel", "rpe_rot", "rpe_pos"] {
        assert!(m[key].as_f64().unwrap() < 1e-12, "{key}: {m}");
    }

    // the left position error is expressed in the estimate's body frame
    let mut shifted = load_trajectory(&truth_path).unwrap();
    let c = Vector3::new(0.3, -0.4, 0.0);
    for row in &mut shifted {
        row.pose.trans += row.pose.rot * c;
    }
    let shifted_path = dir.path().join("shifted.csv");
    save_trajectory(&shifted_path, &shifted).unwrap();
    let m = metrics(&truth_path, &shifted_path);
    assert!((m["ate_pos"].as_f64().unwrap() - 0.5).abs() < 1e-9, "{m}");

    let aligned = ok(&["evaluate", "--truth", p(&truth_path), "--estimate", p(&shifted_path), "--align", "--side", "right"]);
    let aligned: Value = serde_json::from_str(&aligned).unwrap();
    assert_eq!(aligned["side"], "right");

    let short = dir.path().join("short.csv");
    save_trajectory(&short, &shifted[..10]).unwrap();
    assert_eq!(code(&bin(&["evaluate", "--truth", p(&truth_path), "--estimate", p(&short)])), 3);
}

fn quat(r: &Matrix3<f64>) -> [f64; 4] {
    legged::kinematics::rotation_to_quat(r)
}

fn average(dir: &TempDir, mode: &str, items: Value, extra: &[&str]) -> Value {
    let input = dir.path().join("items.json");
    fs::write(&input, items.to_string()).unwrap();
    let mut args = vec!["average", "--mode", mode, "--input", p(&input)];
    args.extend(extra);
    serde_json::from_str(&ok(&args)).unwrap()
}

#[test]
fn average_of_one_element_is_that_element() {
    let dir = tempdir().unwrap();
    let r = rpy_to_rotation(0.1, -0.2, 0.3);
    let out = average(&dir, "pose", json!([{ "q": quat(&r), "p": [1.0, 2.0, 3.0] }]), &[]);
    let q: Vec<f64> = serde_json::from_value(out["q"].clone()).unwrap();
    for (a, b) in q.iter().zip(quat(&r)) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(out["p"], json!([1.0, 2.0, 3.0]));
}

const TIGHT: &[&str] = &["--step-size", "1", "--tolerance", "1e-12"];

#[test]
fn average_of_two_rotations_is_the_midpoint() {
    let dir = tempdir().unwrap();
    let a = rpy_to_rotation(0.0, 0.0, 0.0);
    let b = rpy_to_rotation(0.0, 0.0, 40f64.to_radians());
    let out = average(&dir, "rotation", json!([{ "q": quat(&a) }, { "q": quat(&b) }]), TIGHT);
    let yaw = out["rpy_deg"][2].as_f64().unwrap();
    assert!((yaw - 20.0).abs() < 1e-3, "{out}");

    // a 3:1 weighting moves the mean a quarter of the way
    let out = average(&dir, "rotation", json!([{ "q": quat(&a), "weight": 3.0 }, { "q": quat(&b) }]), TIGHT);
    assert!((out["rpy_deg"][2].as_f64().unwrap() - 10.0).abs() < 1e-3, "{out}");
}

#[test]
fn averaging_a_thousand_noisy_rotations() {
    let t = 10f64.to_radians();
    let mean = GroupElement64::new(GroupTag::SO3, DMatrix::from_column_slice(3, 3, rpy_to_rotation(t, t, t).as_slice())).unwrap();
    let cgd = GaussianOnGroup::new(mean, DMatrix::identity(3, 3) * 0.05f64.powi(2), Side::LocalRight).unwrap();
    let items: Vec<Value> = cgd
        .sample_seeded(1000, 7)
        .unwrap()
        .iter()
        .map(|x| json!({ "q": quat(&x.matrix().fixed_view::<3, 3>(0, 0).into_owned()) }))
        .collect();
    let dir = tempdir().unwrap();
    let out = average(&dir, "rotation", Value::Array(items), &[]);
    for i in 0..3 {
        let deg = out["rpy_deg"][i].as_f64().unwrap();
        assert!((deg - 10.0).abs() < 0.3, "{out}");
    }
}

#[test]
fn average_rejects_bad_inputs() {
    let dir = tempdir().unwrap();
    let input = dir.path().join("items.json");
    for bad in ["[]", "[{\"q\": [0, 0, 0, 0]}]", "[{\"q\": [1, 0, 0, 0], \"weight\": -1}]", "[{\"q\": [1, 0, 0, 0]}]", "{"] {
        fs::write(&input, bad).unwrap();
        assert_eq!(code(&bin(&["average", "--mode", "pose", "--input", p(&input)])), 3, "{bad}");
    }
    assert_eq!(code(&bin(&["average", "--mode", "screw", "--input", p(&input)])), 2);
}

#[test]
fn log_level_comes_from_the_environment() {
    let dir = tempdir().unwrap();
    let run = |level: &str| {
        Command::new(env!("CARGO_BIN_EXE_lie-estimate"))
            .args(["simulate", "--out", p(dir.path()), "--duration", "1"])
            .env("LIE_ESTIMATE_LOG_LEVEL", level)
            .output()
            .unwrap()
    };
    let info = run("info");
    assert_eq!(code(&info), 0);
    assert!(String::from_utf8_lossy(&info.stderr).contains("wrote"));
    assert!(run("error").stderr.is_empty());
    assert_eq!(code(&run("verbose")), 2);
}
