#![allow(dead_code)]

pub mod fd;

use std::sync::Arc;

use legged::estimators::diligent::DiligentState;
use legged::estimators::human::HumanState;
use legged::estimators::Initial;
use legged::io::TrajectoryRow;
use legged::robot::RobotModel;
use legged::simdata::{biped_robot, generate_walk, Trajectory, WalkProfile};
use lie_core::groups::so3;
use lie_core::Pose64;
use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn vec3(rng: &mut ChaCha8Rng, scale: f64) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.random_range(-scale..scale))
}

pub fn rotation(rng: &mut ChaCha8Rng) -> nalgebra::Matrix3<f64> {
    so3::exp(&vec3(rng, 1.5))
}

pub fn pose(rng: &mut ChaCha8Rng) -> Pose64 {
    Pose64::new(rotation(rng), vec3(rng, 2.0))
}

pub fn diligent_state(rng: &mut ChaCha8Rng, landmarks: usize) -> DiligentState {
    DiligentState {
        p: vec3(rng, 2.0),
        r: rotation(rng),
        v: vec3(rng, 1.0),
        feet: [pose(rng), pose(rng)],
        landmarks: (0..landmarks).map(|_| pose(rng)).collect(),
        ba: vec3(rng, 0.1),
        bg: vec3(rng, 0.05),
    }
}

pub fn human_state(rng: &mut ChaCha8Rng) -> HumanState {
    HumanState {
        p: vec3(rng, 2.0),
        r: rotation(rng),
        v: vec3(rng, 1.0),
        d: std::array::from_fn(|_| vec3(rng, 2.0)),
        omega: vec3(rng, 1.0),
        feet: [rotation(rng), rotation(rng)],
    }
}

pub fn unit(dim: usize, i: usize, h: f64) -> DVector<f64> {
    let mut e = DVector::zeros(dim);
    e[i] = h;
    e
}

/// Central differences of `f` along each tangent direction.
pub fn central(dim: usize, h: f64, f: impl Fn(&DVector<f64>) -> DVector<f64>) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = (0..dim).map(|i| (f(&unit(dim, i, h)) - f(&unit(dim, i, -h))) / (2.0 * h)).collect();
    DMatrix::from_columns(&cols)
}

/// Entrywise gap relative to `max(1, |analytic|)`.
pub fn relative_gap(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape());
    analytic.zip_map(numeric, |a, n| (a - n).abs() / a.abs().max(1.0)).max()
}

pub fn robot() -> Arc<RobotModel> {
    Arc::new(biped_robot().unwrap())
}

/// Four steps at 100 Hz.
pub fn short_walk() -> WalkProfile {
    WalkProfile { steps: 4, duration: 5.0, stand_time: 0.5, ..WalkProfile::default() }
}

pub fn walk(robot: &RobotModel, profile: &WalkProfile) -> Trajectory {
    generate_walk(robot, profile, 3).unwrap()
}

pub fn truth_rows(traj: &Trajectory) -> Vec<TrajectoryRow> {
    traj.samples.iter().map(|x| TrajectoryRow { t: x.t, pose: x.base, v: x.v, extras: vec![] }).collect()
}

pub fn initial(traj: &Trajectory) -> Initial {
    Initial::new(traj.samples[0].base, traj.samples[0].v)
}

/// A robot standing still on level ground.
pub fn standing(duration: f64) -> WalkProfile {
    WalkProfile {
        step_length: 0.0,
        steps: 0,
        duration,
        stand_time: duration,
        sway: 0.0,
        attitude_amplitude_deg: [0.0; 3],
        ..WalkProfile::default()
    }
}

/// Symmetric with non-negative eigenvalues up to `tol` of the largest.
pub fn symmetric_psd(p: &DMatrix<f64>, tol: f64) -> bool {
    let scale = p.amax().max(f64::MIN_POSITIVE);
    let asym = (p - p.transpose()).amax() / scale;
    let eig = nalgebra::SymmetricEigen::new((p + p.transpose()) * 0.5).eigenvalues;
    asym < 1e-9 && eig.iter().all(|l| *l >= -tol * scale)
}
