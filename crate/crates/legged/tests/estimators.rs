//! Kinematic-inertial filters: fixed points, pure integration, updates,
//! landmarks and time discretization.

mod common;

use common::{initial, robot, standing, symmetric_psd, walk};
use legged::config::EstimatorConfig;
use legged::estimators::diligent::{bias_offset, Diligent, MotionInput, Variant};
use legged::estimators::{Contacts, EncoderSample, EstimatorKind, ImuSample, Initial};
use legged::replay::Replay;
use legged::simdata::{sensor_log, SimNoise};
use lie_core::groups::rpy_to_rotation;
use lie_core::Pose64;
use nalgebra::{DMatrix, DVector, Matrix6, Vector3};

const VARIANTS: [Variant; 4] = [Variant::DILIGENT, Variant::DILIGENT_RIE, Variant::CODILIGENT, Variant::CODILIGENT_RIE];

fn tilted() -> Initial {
    Initial::new(Pose64::new(rpy_to_rotation(0.1, -0.2, 0.7), Vector3::new(0.3, -0.1, 0.7)), Vector3::zeros())
}

fn joints() -> DVector<f64> {
    let robot = robot();
    walk(&robot, &standing(0.1)).samples[0].s.clone()
}

fn at_rest(init: &Initial, cfg: &EstimatorConfig) -> MotionInput {
    MotionInput { acc: -init.pose.rot.transpose() * cfg.gravity(), gyro: Vector3::zeros(), dt: 0.01, contacts: [true; 2] }
}

#[test]
fn every_estimator_holds_a_resting_state() {
    let robot = robot();
    let traj = walk(&robot, &standing(1.0));
    let cfg = EstimatorConfig::default();
    let x0 = &traj.samples[0];
    let enc = EncoderSample { s: x0.s.clone(), sdot: DVector::zeros(x0.s.len()) };
    let imu = ImuSample { acc: -x0.base.rot.transpose() * cfg.gravity(), gyro: Vector3::zeros(), orientation: Some(x0.base.rot) };
    let contacts = Contacts { feet: [true; 2], vertices: [[true; 4]; 2] };
    for kind in EstimatorKind::ALL {
        let mut est = kind.build(robot.clone(), &cfg, &initial(&traj), &enc).unwrap();
        est.correct(&imu, &enc, &contacts).unwrap();
        for _ in 0..100 {
            est.predict(&imu, 0.01, &contacts, &enc).unwrap();
            est.correct(&imu, &enc, &contacts).unwrap();
        }
        let e = est.estimate();
        let pos = (e.pose.trans - x0.base.trans).amax();
        let rot = (e.pose.rot - x0.base.rot).amax();
        assert!(pos < 1e-8 && rot < 1e-8 && e.v.amax() < 1e-8, "{kind}: {pos:e} {rot:e} {:e}", e.v.amax());
    }
}

#[test]
fn free_fall_gains_one_g_of_speed_per_second() {
    let cfg = EstimatorConfig::default();
    for variant in VARIANTS {
        let mut f = Diligent::new(robot(), cfg.clone(), variant, &tilted(), &joints()).unwrap();
        let u = MotionInput { acc: Vector3::zeros(), gyro: Vector3::zeros(), dt: 0.01, contacts: [false; 2] };
        for _ in 0..100 {
            f.propagate(&u).unwrap();
        }
        let dv = f.state().v - Vector3::new(0.0, 0.0, -9.80665);
        assert!(dv.amax() < 1e-12, "{variant:?}: {dv}");
        let dp = f.state().p - tilted().pose.trans - Vector3::new(0.0, 0.0, -0.5 * 9.80665);
        assert!(dp.amax() < 0.05, "{variant:?}: {dp}");
    }
}

#[test]
fn consistent_kinematics_only_shrink_the_covariance() {
    let cfg = EstimatorConfig::default();
    let s = joints();
    for variant in VARIANTS {
        let mut f = Diligent::new(robot(), cfg.clone(), variant, &tilted(), &s).unwrap();
        f.propagate(&at_rest(&tilted(), &cfg)).unwrap();
        let before = f.belief().clone();
        f.update_feet(&s, &[0, 1]).unwrap();
        let after = f.belief();
        assert!((after.mean.matrix() - before.mean.matrix()).amax() < 1e-12, "{variant:?}");
        let drop = &before.cov - &after.cov;
        assert!(symmetric_psd(&drop, 1e-9), "{variant:?}");
        assert!(after.cov.trace() < before.cov.trace());
    }
}

#[test]
fn landmark_round_trip_restores_the_covariance() {
    let cfg = EstimatorConfig::default();
    let mut f = Diligent::new(robot(), cfg.clone(), Variant::DILIGENT, &tilted(), &joints()).unwrap();
    for _ in 0..5 {
        f.propagate(&at_rest(&tilted(), &cfg)).unwrap();
    }
    let original = f.belief().clone();
    let cov6 = Matrix6::from_diagonal_element(0.04);
    let pose = Pose64::new(rpy_to_rotation(0.0, 0.0, 0.3), Vector3::new(1.0, 2.0, 0.0));
    let first = f.augment_landmark(pose, &cov6).unwrap();
    let second = f.augment_landmark(pose, &(cov6 * 2.0)).unwrap();
    assert_eq!((first, second), (0, 1));

    let p = &f.belief().cov;
    assert_eq!(p.nrows(), 39);
    for (at, scale) in [(21, 1.0), (27, 2.0)] {
        assert_eq!(p.view((at, at), (6, 6)), cov6 * scale);
        let cross = p.view((at, 0), (6, 39)).iter().enumerate().filter(|(k, _)| !(at..at + 6).contains(&(k / 6))).all(|(_, v)| *v == 0.0);
        assert!(cross);
    }
    assert_eq!(f.state().landmarks.len(), 2);

    f.marginalize_landmark(1).unwrap();
    f.marginalize_landmark(0).unwrap();
    assert_eq!(f.belief().cov, original.cov);
    assert_eq!(f.belief().mean.matrix(), original.mean.matrix());
    assert!(f.marginalize_landmark(0).is_err());
}

#[test]
fn marginalizing_keeps_the_remaining_blocks() {
    let cfg = EstimatorConfig::default();
    let mut f = Diligent::new(robot(), cfg.clone(), Variant::DILIGENT_RIE, &tilted(), &joints()).unwrap();
    let pose = Pose64::identity();
    f.augment_landmark(pose, &Matrix6::identity()).unwrap();
    f.augment_landmark(pose, &Matrix6::identity()).unwrap();
    for _ in 0..10 {
        f.propagate(&at_rest(&tilted(), &cfg)).unwrap();
        f.update_feet(&joints(), &[0, 1]).unwrap();
    }
    let full = f.belief().cov.clone();
    f.marginalize_landmark(0).unwrap();
    let keep: Vec<usize> = (0..39).filter(|i| !(21..27).contains(i)).collect();
    let expected = DMatrix::from_fn(33, 33, |r, c| full[(keep[r], keep[c])]);
    assert_eq!(f.belief().cov, expected);
}

fn quiet() -> EstimatorConfig {
    let mut cfg = EstimatorConfig::default();
    cfg.imu.accelerometer = 0.0;
    cfg.imu.gyroscope = 0.0;
    cfg.imu.accelerometer_bias = 0.0;
    cfg.imu.gyroscope_bias = 0.0;
    cfg.kinematics.foot_linear_velocity = 0.0;
    cfg.kinematics.foot_angular_velocity = 0.0;
    cfg
}

/// Frobenius gap between the discrete and first-order covariances after 1 s.
fn discretization_gap(dt: f64, left: bool) -> f64 {
    let cfg = quiet();
    let (d, c) = if left { (Variant::DILIGENT, Variant::CODILIGENT) } else { (Variant::DILIGENT_RIE, Variant::CODILIGENT_RIE) };
    let mut a = Diligent::new(robot(), cfg.clone(), d, &tilted(), &joints()).unwrap();
    let mut b = Diligent::new(robot(), cfg, c, &tilted(), &joints()).unwrap();
    let u = MotionInput { acc: Vector3::new(0.4, -0.3, 9.9), gyro: Vector3::new(0.3, -0.2, 0.5), dt, contacts: [true; 2] };
    for _ in 0..(1.0 / dt).round() as usize {
        a.propagate(&u).unwrap();
        b.propagate(&u).unwrap();
    }
    (&a.belief().cov - &b.belief().cov).norm()
}

#[test]
fn continuous_and_discrete_covariances_converge_linearly() {
    for left in [true, false] {
        let gaps: Vec<f64> = [0.01, 0.005, 0.0025].iter().map(|dt| discretization_gap(*dt, left)).collect();
        for w in gaps.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 2.0).abs() < 0.3, "left={left}: {gaps:?}");
        }
    }
}

#[test]
fn biases_settle_within_three_sigma_while_standing() {
    let robot = robot();
    let traj = walk(&robot, &standing(20.0));
    let cfg = EstimatorConfig::default();
    let mut noise = SimNoise::from_config(&cfg);
    noise.accelerometer_bias_walk = 0.0;
    noise.gyroscope_bias_walk = 0.0;
    noise.accelerometer_bias = [0.0, 0.0, 0.05];
    noise.gyroscope_bias = [0.004, -0.003, 0.002];
    let replay = Replay::from_records(&sensor_log(&traj, &noise, &cfg.gravity(), 11).unwrap(), &cfg).unwrap();
    let truth: Vec<f64> = noise.accelerometer_bias.iter().chain(noise.gyroscope_bias.iter()).copied().collect();
    for kind in [EstimatorKind::DiligentKio, EstimatorKind::DiligentKioRie, EstimatorKind::CodiligentKio, EstimatorKind::CodiligentKioRie] {
        let mut est = kind.build(robot.clone(), &cfg, &initial(&traj), &replay.encoders[0]).unwrap();
        for k in 1..replay.len() {
            est.predict(&replay.imu[k - 1], replay.t[k] - replay.t[k - 1], &replay.contacts[k - 1], &replay.encoders[k - 1]).unwrap();
            est.correct(&replay.imu[k], &replay.encoders[k], &replay.contacts[k]).unwrap();
        }
        // the bias block is a vector space, so both error sides read it the same way
        let p = est.covariance().unwrap();
        let b = bias_offset(0);
        for (i, (name, got)) in est.estimate().extras.iter().enumerate() {
            let sigma = p[(b + i, b + i)].sqrt();
            assert!((got - truth[i]).abs() < 3.0 * sigma, "{kind} {name}: {got} vs {} (sigma {sigma})", truth[i]);
        }
    }
}

#[test]
fn covariances_stay_symmetric_positive_semidefinite() {
    let robot = robot();
    let profile = legged::simdata::WalkProfile { duration: 100.0, steps: 110, ..Default::default() };
    let traj = walk(&robot, &profile);
    let cfg = EstimatorConfig::default();
    let replay = Replay::from_records(&sensor_log(&traj, &SimNoise::from_config(&cfg), &cfg.gravity(), 5).unwrap(), &cfg).unwrap();
    assert!(replay.len() >= 10_000);
    for kind in [EstimatorKind::DiligentKio, EstimatorKind::DiligentKioRie, EstimatorKind::CodiligentKio, EstimatorKind::CodiligentKioRie, EstimatorKind::HumanEkf] {
        let mut est = kind.build(robot.clone(), &cfg, &initial(&traj), &replay.encoders[0]).unwrap();
        for k in 1..replay.len() {
            est.predict(&replay.imu[k - 1], replay.t[k] - replay.t[k - 1], &replay.contacts[k - 1], &replay.encoders[k - 1]).unwrap();
            est.correct(&replay.imu[k], &replay.encoders[k], &replay.contacts[k]).unwrap();
            if k % 500 == 0 || k + 1 == replay.len() {
                assert!(symmetric_psd(est.covariance().unwrap(), 1e-9), "{kind} at step {k}");
            }
        }
    }
}
