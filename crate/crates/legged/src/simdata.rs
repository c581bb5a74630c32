//! Synthetic biped walks and sensor emulation.
//!
//! The base follows analytic position and attitude curves; feet are placed
//! on a flat floor and stay exactly still while in stance. Joint positions
//! come from inverse kinematics of each leg, joint velocities from the
//! mixed Jacobians. Base positions are integrated from the analytic
//! velocity with the trapezoid rule so that the forward-difference IMU
//! readings reproduce them exactly.

use lie_core::groups::{rpy_to_rotation, so3};
use lie_core::Pose64;
use nalgebra::{DVector, Matrix3, Vector2, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{EstimatorConfig, RobotConfig};
use crate::error::{Error, Result};
use crate::io::{Payload, SensorRecord};
use crate::kinematics::{inverse_kinematics, ChainSpec, FrameSpec, JointSpec, KinematicChain};
use crate::robot::{RobotModel, LEFT, RIGHT};

const IDENTITY_QUAT: [f64; 4] = [1.0, 0.0, 0.0, 0.0];
/// Sole frame in the foot link.
const SOLE_OFFSET: [f64; 3] = [0.02, 0.0, -0.06];
const HIP_Y: f64 = 0.08;

/// Twelve-joint biped: yaw, roll, pitch at the hip, knee, ankle pitch and
/// roll, with sole frames `l_sole`/`r_sole` and their four vertices.
pub fn biped_chain(foot_length: f64, foot_width: f64) -> Result<KinematicChain> {
    let mut joints = Vec::new();
    let mut frames = Vec::new();
    for (side, y) in [("l", HIP_Y), ("r", -HIP_Y)] {
        let link = |n: &str| format!("{side}_{n}");
        let chain: [(&str, &str, [f64; 3], [f64; 3]); 6] = [
            ("hip_yaw", "root_link", [0.0, 0.0, 1.0], [0.0, y, -0.05]),
            ("hip_roll", "hip_1", [1.0, 0.0, 0.0], [0.0, 0.0, -0.05]),
            ("hip_pitch", "hip_2", [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]),
            ("knee", "upper_leg", [0.0, 1.0, 0.0], [0.0, 0.0, -0.3]),
            ("ankle_pitch", "lower_leg", [0.0, 1.0, 0.0], [0.0, 0.0, -0.3]),
            ("ankle_roll", "ankle_1", [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]),
        ];
        let children = ["hip_1", "hip_2", "upper_leg", "lower_leg", "ankle_1", "foot"];
        for ((name, parent, axis, xyz), child) in chain.into_iter().zip(children) {
            joints.push(JointSpec {
                name: link(name),
                parent: if parent == "root_link" { parent.into() } else { link(parent) },
                child: link(child),
                axis,
                xyz,
                quat: IDENTITY_QUAT,
            });
        }
        let sole = link("sole");
        frames.push(FrameSpec { name: sole.clone(), link: link("foot"), xyz: SOLE_OFFSET, quat: IDENTITY_QUAT });
        let geometry = crate::contact::FootGeometry { length: foot_length, width: foot_width };
        for (k, v) in geometry.vertices().iter().enumerate() {
            frames.push(FrameSpec {
                name: format!("{sole}_v{}", k + 1),
                link: link("foot"),
                xyz: [SOLE_OFFSET[0] + v.x, SOLE_OFFSET[1] + v.y, SOLE_OFFSET[2]],
                quat: IDENTITY_QUAT,
            });
        }
    }
    ChainSpec { base: "root_link".into(), joints, frames }.build()
}

/// The biped with the default robot configuration.
pub fn biped_robot() -> Result<RobotModel> {
    let cfg = RobotConfig::default();
    RobotModel::new(biped_chain(cfg.foot_length, cfg.foot_width)?, &cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkProfile {
    /// m
    pub step_length: f64,
    /// s
    pub step_period: f64,
    pub steps: usize,
    /// Fraction of each step spent in double support.
    pub double_support: f64,
    /// s
    pub duration: f64,
    /// s
    pub dt: f64,
    /// Standing time before the first step, s.
    pub stand_time: f64,
    /// Swing-foot clearance, m.
    pub step_height: f64,
    pub base_height: f64,
    /// Lateral base sway amplitude, m.
    pub sway: f64,
    /// Roll, pitch and yaw oscillation amplitudes, deg.
    pub attitude_amplitude_deg: [f64; 3],
    /// kg; sets the normal forces.
    pub mass: f64,
}

impl Default for WalkProfile {
    fn default() -> Self {
        Self {
            step_length: 0.1,
            step_period: 0.8,
            steps: 10,
            double_support: 0.25,
            duration: 12.0,
            dt: 0.01,
            stand_time: 1.0,
            step_height: 0.04,
            base_height: 0.68,
            sway: 0.02,
            attitude_amplitude_deg: [2.0, 2.0, 3.0],
            mass: 40.0,
        }
    }
}

impl WalkProfile {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("step_period", self.step_period),
            ("duration", self.duration),
            ("dt", self.dt),
            ("base_height", self.base_height),
            ("mass", self.mass),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.double_support) {
            return Err(Error::Config("double_support must lie in [0, 1)".into()));
        }
        if !self.step_length.is_finite() || self.stand_time < 0.0 || self.step_height < 0.0 {
            return Err(Error::Config("step_length, stand_time and step_height must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    fn walking(&self) -> bool {
        self.step_length != 0.0
    }
}

/// Min-jerk blend on `[0, 1]`: value and first two derivatives.
fn min_jerk(tau: f64) -> (f64, f64, f64) {
    let t = tau.clamp(0.0, 1.0);
    let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    (s, ds, 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t))
}

/// One swing: which foot and where it goes.
#[derive(Debug, Clone, Copy)]
struct Swing {
    foot: usize,
    from: f64,
    to: f64,
}

/// Step timing and footholds.
struct Schedule {
    start: f64,
    period: f64,
    ds: f64,
    swings: Vec<Swing>,
    /// Base x before each step and after the last.
    midpoints: Vec<f64>,
}

impl Schedule {
    fn new(p: &WalkProfile) -> Self {
        let mut pos = [0.0; 2];
        let mut swings = Vec::new();
        let mut midpoints = vec![0.0];
        if p.walking() {
            for i in 0..=p.steps {
                let foot = if i % 2 == 0 { RIGHT } else { LEFT };
                let to = if i < p.steps { (i + 1) as f64 * p.step_length } else { p.steps as f64 * p.step_length };
                swings.push(Swing { foot, from: pos[foot], to });
                pos[foot] = to;
                midpoints.push(0.5 * (pos[0] + pos[1]));
            }
        }
        Self { start: p.stand_time, period: p.step_period, ds: p.double_support, swings, midpoints }
    }

    fn end(&self) -> f64 {
        self.start + self.swings.len() as f64 * self.period
    }

    /// Step index and phase in `[0, 1)` at time `t`.
    fn step_at(&self, t: f64) -> Option<(usize, f64)> {
        if self.swings.is_empty() || t < self.start || t >= self.end() {
            return None;
        }
        let i = (((t - self.start) / self.period).floor() as usize).min(self.swings.len() - 1);
        Some((i, (t - self.start) / self.period - i as f64))
    }

    /// Swing phase of foot `f` at `t`, if it is in the air.
    fn swing_phase(&self, f: usize, t: f64) -> Option<(Swing, f64)> {
        let (i, phase) = self.step_at(t)?;
        let sw = self.swings[i];
        (sw.foot == f && phase > self.ds).then(|| (sw, (phase - self.ds) / (1.0 - self.ds)))
    }

    /// Base x and its rate.
    fn base_x(&self, t: f64) -> (f64, f64, f64) {
        match self.step_at(t) {
            Some((i, phase)) => {
                let (a, b) = (self.midpoints[i], self.midpoints[i + 1]);
                let (s, ds, dds) = min_jerk(phase);
                (a + (b - a) * s, (b - a) * ds / self.period, (b - a) * dds / self.period.powi(2))
            }
            None if t < self.start => (self.midpoints[0], 0.0, 0.0),
            None => (*self.midpoints.last().unwrap(), 0.0, 0.0),
        }
    }

    /// Foot x at `t`: last landing position of foot `f`.
    fn foot_x(&self, f: usize, t: f64) -> f64 {
        let mut x = 0.0;
        for (i, sw) in self.swings.iter().enumerate() {
            let t_land = self.start + (i + 1) as f64 * self.period;
            if sw.foot == f && t >= t_land {
                x = sw.to;
            }
        }
        x
    }

    /// Normal-load share of each foot.
    fn load(&self, t: f64) -> [f64; 2] {
        let mut share = [0.5, 0.5];
        if let Some((i, phase)) = self.step_at(t) {
            let u = self.swings[i].foot;
            let s0 = if i == 0 { 0.5 } else { 1.0 };
            let su = if phase < self.ds { s0 * (1.0 - phase / self.ds) } else { 0.0 };
            share[u] = su;
            share[1 - u] = 1.0 - su;
        } else if !self.swings.is_empty() && t >= self.end() && self.ds > 0.0 {
            let last = self.swings.last().unwrap().foot;
            let r = ((t - self.end()) / (self.ds * self.period)).min(1.0);
            share[last] = 0.5 * r;
            share[1 - last] = 1.0 - 0.5 * r;
        }
        share
    }

    /// Stance intervals of foot `f` while walking, as `(landing, lift-off)`.
    fn stance_intervals(&self, f: usize) -> Vec<(f64, f64)> {
        if self.swings.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut since = self.start;
        for (i, sw) in self.swings.iter().enumerate() {
            if sw.foot == f {
                let t0 = self.start + i as f64 * self.period;
                out.push((since, t0 + self.ds * self.period));
                since = t0 + self.period;
            }
        }
        out.push((since, self.end() + self.ds * self.period));
        out
    }

    /// Centre of pressure x of foot `f`: heel to toe over each walking
    /// stance, centred while standing.
    fn cop_x(&self, f: usize, t: f64, length: f64) -> f64 {
        for (a, b) in self.stance_intervals(f) {
            if t >= a && t < b && b > a {
                return length * (-0.4 + 0.8 * (t - a) / (b - a));
            }
        }
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub base: Pose64,
    /// World-frame base velocity.
    pub v: Vector3<f64>,
    /// World-frame base angular velocity.
    pub omega: Vector3<f64>,
    pub s: DVector<f64>,
    pub sdot: DVector<f64>,
    /// Sole poses in the world.
    pub feet: [Pose64; 2],
    /// Mixed sole twists.
    pub foot_twist: [Vector6<f64>; 2],
    pub contact: [bool; 2],
    /// Normal force per foot, N.
    pub normal_force: [f64; 2],
    /// Centre of pressure per foot in the sole frame.
    pub cop: [Vector2<f64>; 2],
}

impl TrajectorySample {
    /// Sole-frame wrench `(f, tau)` of foot `f`.
    pub fn wrench(&self, f: usize) -> [f64; 6] {
        let fz = self.normal_force[f];
        let c = self.cop[f];
        [0.0, 0.0, fz, c.y * fz, -c.x * fz, 0.0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    /// State one step past the end, for forward differences.
    next: TrajectorySample,
    pub dt: f64,
}

fn attitude(t: f64, amp: &[f64; 3], phase: &[f64; 3]) -> (Matrix3<f64>, Vector3<f64>) {
    const FREQ: [f64; 3] = [0.35, 0.45, 0.25];
    let mut a = [0.0; 3];
    let mut da = [0.0; 3];
    for i in 0..3 {
        let w = 2.0 * std::f64::consts::PI * FREQ[i];
        a[i] = amp[i].to_radians() * (w * t + phase[i]).sin();
        da[i] = amp[i].to_radians() * w * (w * t + phase[i]).cos();
    }
    let r = rpy_to_rotation(a[0], a[1], a[2]);
    let rz = rpy_to_rotation(0.0, 0.0, a[2]);
    let ry = rpy_to_rotation(0.0, a[1], 0.0);
    let omega = Vector3::z() * da[2] + rz * Vector3::y() * da[1] + rz * ry * Vector3::x() * da[0];
    (r, omega)
}

/// Generates a walk. `seed` only sets the attitude oscillation phases.
pub fn generate_walk(robot: &RobotModel, profile: &WalkProfile, seed: u64) -> Result<Trajectory> {
    profile.validate()?;
    let schedule = Schedule::new(profile);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..std::f64::consts::TAU));
    let amp = if profile.walking() { profile.attitude_amplitude_deg } else { [0.0; 3] };
    let sway = if profile.walking() { profile.sway } else { 0.0 };
    let period = profile.step_period;
    let (t_start, t_end) = (schedule.start, schedule.end());
    let envelope = |t: f64| -> (f64, f64) {
        let (up, dup, _) = min_jerk((t - t_start) / period);
        let (down, ddown, _) = min_jerk((t_end - t) / period);
        (up * down, (dup * down - up * ddown) / period)
    };
    // lateral sway: a half sine per step towards the stance foot
    let lateral = |t: f64| -> (f64, f64) {
        let w = std::f64::consts::PI / period;
        let (e, de) = envelope(t);
        let arg = w * (t - t_start);
        (sway * e * arg.sin(), sway * (de * arg.sin() + e * w * arg.cos()))
    };

    let n = profile.samples();
    let dt = profile.dt;
    let chain = &robot.chain;
    let base = robot.base();
    let dofs = chain.dofs();
    let mut seed_s = DVector::zeros(dofs);
    for leg in 0..2 {
        seed_s[6 * leg + 2] = -0.4;
        seed_s[6 * leg + 3] = 0.8;
        seed_s[6 * leg + 4] = -0.4;
    }

    let weight = profile.mass * 9.80665;
    let sole_x = SOLE_OFFSET[0];
    let mut samples: Vec<TrajectorySample> = Vec::with_capacity(n + 1);
    let mut p = Vector3::zeros();
    let mut v_prev = Vector3::zeros();
    for k in 0..=n {
        let t = k as f64 * dt;
        let (x, vx, _) = schedule.base_x(t);
        let (y, vy) = lateral(t);
        let v = Vector3::new(vx, vy, 0.0);
        if k == 0 {
            p = Vector3::new(x - sole_x, y, profile.base_height);
        } else {
            p += (v_prev + v) * (0.5 * dt);
        }
        v_prev = v;
        let (rot, omega) = attitude(t, &amp, &phase);
        let base_pose = Pose64::new(rot, p);

        let mut feet = [Pose64::identity(); 2];
        let mut twists = [Vector6::zeros(); 2];
        let mut contact = [true; 2];
        for f in 0..2 {
            let y_f = if f == LEFT { HIP_Y } else { -HIP_Y };
            let mut pos = Vector3::new(schedule.foot_x(f, t), y_f, 0.0);
            if let Some((sw, tau)) = schedule.swing_phase(f, t) {
                let swing_time = (1.0 - profile.double_support) * period;
                let (s, ds, _) = min_jerk(tau);
                let arg = std::f64::consts::TAU * tau;
                pos.x = sw.from + (sw.to - sw.from) * s;
                pos.z = 0.5 * profile.step_height * (1.0 - arg.cos());
                twists[f][0] = (sw.to - sw.from) * ds / swing_time;
                twists[f][2] = 0.5 * profile.step_height * std::f64::consts::TAU * arg.sin() / swing_time;
                contact[f] = false;
            }
            feet[f] = Pose64::from_translation(pos);
        }

        let mut s = samples.last().map(|prev| prev.s.clone()).unwrap_or(seed_s.clone());
        for f in 0..2 {
            let target = base_pose.inverse() * feet[f];
            let joints: Vec<usize> = (6 * f..6 * f + 6).collect();
            s = inverse_kinematics(chain, &s, base, robot.feet[f], &target, &joints)?;
        }
        let mut sdot = DVector::zeros(dofs);
        let base_twist = Vector6::new(v.x, v.y, v.z, omega.x, omega.y, omega.z);
        for f in 0..2 {
            let jac = chain.mixed_jacobian(&s, &base_pose, robot.feet[f])?;
            let rhs = twists[f] - jac.columns(0, 6) * base_twist;
            let leg = jac.columns(6 + 6 * f, 6).into_owned();
            let qd = leg
                .lu()
                .solve(&DVector::from_column_slice(rhs.as_slice()))
                .ok_or_else(|| Error::Numeric("leg Jacobian is singular".into()))?;
            sdot.rows_mut(6 * f, 6).copy_from(&qd);
        }

        let share = schedule.load(t);
        let cop = [0, 1].map(|f| Vector2::new(schedule.cop_x(f, t, robot.geometry.length), 0.0));
        samples.push(TrajectorySample {
            t,
            base: base_pose,
            v,
            omega,
            s,
            sdot,
            feet,
            foot_twist: twists,
            contact,
            normal_force: share.map(|s| s * weight),
            cop,
        });
    }
    let next = samples.pop().expect("at least one sample");
    Ok(Trajectory { samples, next, dt })
}

impl Trajectory {
    fn at(&self, k: usize) -> &TrajectorySample {
        self.samples.get(k).unwrap_or(&self.next)
    }

    /// World acceleration held over `[t_k, t_k+1]`.
    pub fn acceleration(&self, k: usize) -> Vector3<f64> {
        (self.at(k + 1).v - self.at(k).v) / self.dt
    }

    /// Body rate reproducing `R_k+1` from `R_k` over one step.
    pub fn body_rate(&self, k: usize) -> Result<Vector3<f64>> {
        let rel = self.at(k).base.rot.transpose() * self.at(k + 1).base.rot;
        Ok(so3::log(&rel)? / self.dt)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Sensor imperfections. Stds are per sample; bias walks advance by
/// `std * dt * N(0, 1)` each sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimNoise {
    pub accelerometer: f64,
    pub gyroscope: f64,
    pub accelerometer_bias_walk: f64,
    pub gyroscope_bias_walk: f64,
    pub accelerometer_bias: [f64; 3],
    pub gyroscope_bias: [f64; 3],
    /// Std of the IMU attitude output, rad.
    pub orientation: f64,
    /// rad
    pub encoder: f64,
    /// rad/s
    pub encoder_velocity: f64,
}

impl Default for SimNoise {
    fn default() -> Self {
        Self::zero()
    }
}

impl SimNoise {
    pub fn zero() -> Self {
        Self {
            accelerometer: 0.0,
            gyroscope: 0.0,
            accelerometer_bias_walk: 0.0,
            gyroscope_bias_walk: 0.0,
            accelerometer_bias: [0.0; 3],
            gyroscope_bias: [0.0; 3],
            orientation: 0.0,
            encoder: 0.0,
            encoder_velocity: 0.0,
        }
    }

    /// The estimator noise table, with no constant bias offset.
    pub fn from_config(cfg: &EstimatorConfig) -> Self {
        Self {
            accelerometer: cfg.imu.accelerometer,
            gyroscope: cfg.imu.gyroscope,
            accelerometer_bias_walk: cfg.imu.accelerometer_bias,
            gyroscope_bias_walk: cfg.imu.gyroscope_bias,
            accelerometer_bias: [0.0; 3],
            gyroscope_bias: [0.0; 3],
            orientation: 0.5f64.to_radians(),
            encoder: cfg.kinematics.encoder(),
            encoder_velocity: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImuReading {
    pub t: f64,
    pub acc: Vector3<f64>,
    pub gyro: Vector3<f64>,
    pub orientation: Matrix3<f64>,
}

// independent random streams per sensor
const IMU_STREAM: u64 = 1;
const ENCODER_STREAM: u64 = 2;

fn normal3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.sample(StandardNormal))
}

/// `y_acc = R^T (a - g) + b_a + n_a`, `y_gyro = omega + b_g + n_g`, with
/// forward-difference `a` and `omega`.
pub fn emulate_imu(traj: &Trajectory, noise: &SimNoise, gravity: &Vector3<f64>, seed: u64) -> Result<Vec<ImuReading>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(IMU_STREAM);
    let mut ba = Vector3::from(noise.accelerometer_bias);
    let mut bg = Vector3::from(noise.gyroscope_bias);
    let mut out = Vec::with_capacity(traj.len());
    for (k, sample) in traj.samples.iter().enumerate() {
        let r = sample.base.rot;
        let acc = r.transpose() * (traj.acceleration(k) - gravity) + ba + normal3(&mut rng) * noise.accelerometer;
        let gyro = traj.body_rate(k)? + bg + normal3(&mut rng) * noise.gyroscope;
        let orientation = r * so3::exp(&(normal3(&mut rng) * noise.orientation));
        out.push(ImuReading { t: sample.t, acc, gyro, orientation });
        ba += normal3(&mut rng) * (noise.accelerometer_bias_walk * traj.dt);
        bg += normal3(&mut rng) * (noise.gyroscope_bias_walk * traj.dt);
    }
    Ok(out)
}

/// `(t, s, sdot)` with additive Gaussian noise.
pub fn emulate_encoders(traj: &Trajectory, noise: &SimNoise, seed: u64) -> Vec<(f64, DVector<f64>, DVector<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ENCODER_STREAM);
    traj.samples
        .iter()
        .map(|x| {
            let n = x.s.len();
            let s = &x.s + DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal) * noise.encoder);
            let sdot = &x.sdot + DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal) * noise.encoder_velocity);
            (x.t, s, sdot)
        })
        .collect()
}

/// Sole-frame wrenches `(t, left, right)` from the load schedule.
pub fn emulate_wrenches(traj: &Trajectory) -> Vec<(f64, [f64; 6], [f64; 6])> {
    traj.samples.iter().map(|x| (x.t, x.wrench(LEFT), x.wrench(RIGHT))).collect()
}

/// Interleaved sensor log: per instant an IMU, encoder, wrench and
/// contact record.
pub fn sensor_log(traj: &Trajectory, noise: &SimNoise, gravity: &Vector3<f64>, seed: u64) -> Result<Vec<SensorRecord>> {
    let imu = emulate_imu(traj, noise, gravity, seed)?;
    let enc = emulate_encoders(traj, noise, seed);
    let wrenches = emulate_wrenches(traj);
    let mut out = Vec::with_capacity(4 * traj.len());
    for (k, x) in traj.samples.iter().enumerate() {
        let t = x.t;
        out.push(SensorRecord {
            t,
            payload: Payload::Imu {
                acc: imu[k].acc.into(),
                gyro: imu[k].gyro.into(),
                orientation: Some(crate::kinematics::rotation_to_quat(&imu[k].orientation)),
            },
        });
        out.push(SensorRecord {
            t,
            payload: Payload::Encoder { s: enc[k].1.iter().copied().collect(), sdot: enc[k].2.iter().copied().collect() },
        });
        out.push(SensorRecord { t, payload: Payload::Wrench { left: wrenches[k].1, right: wrenches[k].2 } });
        out.push(SensorRecord { t, payload: Payload::Contact { left: x.contact[LEFT], right: x.contact[RIGHT] } });
    }
    Ok(out)
}
