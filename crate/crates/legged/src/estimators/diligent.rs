//! Kinematic-inertial base estimation on SE_2(3) x SE(3)^2 x T(6).
//!
//! The state holds the base `(p, R, v)`, the two foot poses, optional
//! landmark poses and the IMU biases `(b_a, b_g)`. Four filters share it:
//! discrete or continuous-discrete propagation, each with a local (left)
//! or global (right) error. Feet follow a constant model whose noise is
//! inflated during swing, and are corrected by forward kinematics while in
//! contact.

use std::sync::Arc;

use lie_core::filtercore::{self, Belief, MeasurementModel, MotionModel, UpdateOptions};
use lie_core::groups::{skew, so3, GroupTag};
use lie_core::{GroupElement64, Pose64};
use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector3};

use super::{contact_scaled, warn_long_step, BaseEstimate, Contacts, EncoderSample, Estimator, ImuSample, Initial};
use crate::config::{EstimatorConfig, ImuNoise, KinematicNoise, PriorStd};
use crate::error::{Error, Result};
use crate::robot::RobotModel;

/// Tangent offsets of the base blocks.
pub const P: usize = 0;
pub const R: usize = 3;
pub const V: usize = 6;
/// Tangent size without landmarks.
pub const BASE_DIM: usize = 27;

/// Offset of foot `f`'s `(d, Z)` block.
pub fn foot_offset(f: usize) -> usize {
    9 + 6 * f
}

pub fn landmark_offset(j: usize) -> usize {
    21 + 6 * j
}

/// Offset of `(b_a, b_g)`.
pub fn bias_offset(n_landmarks: usize) -> usize {
    21 + 6 * n_landmarks
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiligentState {
    pub p: Vector3<f64>,
    pub r: Matrix3<f64>,
    pub v: Vector3<f64>,
    /// Left and right foot poses in the world.
    pub feet: [Pose64; 2],
    pub landmarks: Vec<Pose64>,
    pub ba: Vector3<f64>,
    pub bg: Vector3<f64>,
}

impl DiligentState {
    pub fn tag_for(n_landmarks: usize) -> GroupTag {
        let mut parts = vec![GroupTag::SEk3(2), GroupTag::SE3, GroupTag::SE3];
        parts.extend(std::iter::repeat_n(GroupTag::SE3, n_landmarks));
        parts.push(GroupTag::Tn(6));
        GroupTag::Composite(parts)
    }

    pub fn tag(&self) -> GroupTag {
        Self::tag_for(self.landmarks.len())
    }

    pub fn dim(&self) -> usize {
        BASE_DIM + 6 * self.landmarks.len()
    }

    pub fn base_pose(&self) -> Pose64 {
        Pose64::new(self.r, self.p)
    }

    pub fn to_element(&self) -> GroupElement64 {
        let tag = self.tag();
        let mut m: DMatrix<f64> = tag.identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.r);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.p);
        m.fixed_view_mut::<3, 1>(0, 4).copy_from(&self.v);
        let mut at = 5;
        for pose in self.feet.iter().chain(&self.landmarks) {
            m.fixed_view_mut::<4, 4>(at, at).copy_from(&pose.to_homogeneous());
            at += 4;
        }
        m.fixed_view_mut::<3, 1>(at, at + 6).copy_from(&self.ba);
        m.fixed_view_mut::<3, 1>(at + 3, at + 6).copy_from(&self.bg);
        GroupElement64::from_matrix_unchecked(tag, m)
    }

    pub fn from_element(x: &GroupElement64) -> Result<Self> {
        let n_landmarks = match x.tag() {
            GroupTag::Composite(parts) if parts.len() >= 4 => parts.len() - 4,
            _ => return Err(Error::Input("not a kinematic-inertial state".into())),
        };
        if *x.tag() != Self::tag_for(n_landmarks) {
            return Err(Error::Input("not a kinematic-inertial state".into()));
        }
        let m = x.matrix();
        let pose_at = |at: usize| Pose64::from_homogeneous(&m.view((at, at), (4, 4)).into_owned());
        let at_bias = 5 + 4 * (2 + n_landmarks);
        Ok(Self {
            p: m.fixed_view::<3, 1>(0, 3).into_owned(),
            r: m.fixed_view::<3, 3>(0, 0).into_owned(),
            v: m.fixed_view::<3, 1>(0, 4).into_owned(),
            feet: [pose_at(5), pose_at(9)],
            landmarks: (0..n_landmarks).map(|j| pose_at(13 + 4 * j)).collect(),
            ba: m.fixed_view::<3, 1>(at_bias, at_bias + 6).into_owned(),
            bg: m.fixed_view::<3, 1>(at_bias + 3, at_bias + 6).into_owned(),
        })
    }
}

/// IMU reading held over one step, with the contact flags that scale the
/// foot noise.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionInput {
    pub acc: Vector3<f64>,
    pub gyro: Vector3<f64>,
    pub dt: f64,
    pub contacts: [bool; 2],
}

fn put(m: &mut DMatrix<f64>, r: usize, c: usize, b: &Matrix3<f64>) {
    m.fixed_view_mut::<3, 3>(r, c).copy_from(b);
}

fn seg(v: &mut DVector<f64>, at: usize, x: &Vector3<f64>) {
    v.fixed_rows_mut::<3>(at).copy_from(x);
}

/// Bias-compensated specific force `y_acc - b_a` and rate `y_gyro - b_g`.
fn compensated(x: &DiligentState, u: &MotionInput) -> (Vector3<f64>, Vector3<f64>) {
    (u.acc - x.ba, u.gyro - x.bg)
}

/// Left-trivialized increment `Omega` with `a_bar = y_acc - b_a + R^T g`.
pub fn omega(x: &DiligentState, u: &MotionInput, g: &Vector3<f64>) -> DVector<f64> {
    let (f, w) = compensated(x, u);
    let a_bar = f + x.r.transpose() * g;
    let dt = u.dt;
    let mut o = DVector::zeros(x.dim());
    seg(&mut o, P, &(x.r.transpose() * x.v * dt + a_bar * (0.5 * dt * dt)));
    seg(&mut o, R, &(w * dt));
    seg(&mut o, V, &(a_bar * dt));
    o
}

/// Derivative of `Omega` under `X = X_hat exp(eps)`.
pub fn jacobian_left(x: &DiligentState, u: &MotionInput, g: &Vector3<f64>) -> DMatrix<f64> {
    let dt = u.dt;
    let b = bias_offset(x.landmarks.len());
    let rt = x.r.transpose();
    let xi = rt * x.v * dt + rt * g * (0.5 * dt * dt);
    let i3 = Matrix3::identity();
    let mut j = DMatrix::zeros(x.dim(), x.dim());
    put(&mut j, P, R, &skew(&xi));
    put(&mut j, P, V, &(i3 * dt));
    put(&mut j, P, b, &(-i3 * (0.5 * dt * dt)));
    put(&mut j, R, b + 3, &(-i3 * dt));
    put(&mut j, V, R, &skew(&(rt * g * dt)));
    put(&mut j, V, b, &(-i3 * dt));
    j
}

/// Derivative of `Omega` under `X = exp(eps) X_hat`.
pub fn jacobian_rie(x: &DiligentState, u: &MotionInput, g: &Vector3<f64>) -> DMatrix<f64> {
    let dt = u.dt;
    let b = bias_offset(x.landmarks.len());
    let rt = x.r.transpose();
    let xi1 = rt * skew(g) * dt;
    let i3 = Matrix3::identity();
    let mut j = DMatrix::zeros(x.dim(), x.dim());
    put(&mut j, P, R, &(xi1 * (0.5 * dt)));
    put(&mut j, P, V, &(rt * dt));
    put(&mut j, P, b, &(-i3 * (0.5 * dt * dt)));
    put(&mut j, R, b + 3, &(-i3 * dt));
    put(&mut j, V, R, &xi1);
    put(&mut j, V, b, &(-i3 * dt));
    j
}

/// Covariance of the discrete noise on `Omega`.
pub fn discrete_noise(n_landmarks: usize, u: &MotionInput, imu: &ImuNoise, kin: &KinematicNoise) -> DMatrix<f64> {
    let dim = BASE_DIM + 6 * n_landmarks;
    let dt = u.dt;
    let i3 = Matrix3::identity();
    let sa2 = imu.accelerometer.powi(2);
    let mut q = DMatrix::zeros(dim, dim);
    put(&mut q, P, P, &(i3 * (0.25 * sa2 * dt.powi(4))));
    put(&mut q, P, V, &(i3 * (0.5 * sa2 * dt.powi(3))));
    put(&mut q, V, P, &(i3 * (0.5 * sa2 * dt.powi(3))));
    put(&mut q, V, V, &(i3 * (sa2 * dt * dt)));
    put(&mut q, R, R, &(i3 * (imu.gyroscope * dt).powi(2)));
    for f in 0..2 {
        let lin = contact_scaled(kin.foot_linear_velocity, u.contacts[f], kin.swing_scale);
        let ang = contact_scaled(kin.foot_angular_velocity, u.contacts[f], kin.swing_scale);
        put(&mut q, foot_offset(f), foot_offset(f), &(i3 * (lin * dt).powi(2)));
        put(&mut q, foot_offset(f) + 3, foot_offset(f) + 3, &(i3 * (ang * dt).powi(2)));
    }
    let b = bias_offset(n_landmarks);
    put(&mut q, b, b, &(i3 * (imu.accelerometer_bias * dt).powi(2)));
    put(&mut q, b + 3, b + 3, &(i3 * (imu.gyroscope_bias * dt).powi(2)));
    q
}

/// Continuous-time noise covariance `Cov(w)`, `w = (0, n_g, n_a, n_feet, -n_b)`.
pub fn continuous_noise(n_landmarks: usize, contacts: [bool; 2], imu: &ImuNoise, kin: &KinematicNoise) -> DMatrix<f64> {
    let dim = BASE_DIM + 6 * n_landmarks;
    let i3 = Matrix3::identity();
    let mut q = DMatrix::zeros(dim, dim);
    put(&mut q, R, R, &(i3 * imu.gyroscope.powi(2)));
    put(&mut q, V, V, &(i3 * imu.accelerometer.powi(2)));
    for (f, c) in contacts.iter().enumerate() {
        let lin = contact_scaled(kin.foot_linear_velocity, *c, kin.swing_scale);
        let ang = contact_scaled(kin.foot_angular_velocity, *c, kin.swing_scale);
        put(&mut q, foot_offset(f), foot_offset(f), &(i3 * lin * lin));
        put(&mut q, foot_offset(f) + 3, foot_offset(f) + 3, &(i3 * ang * ang));
    }
    let b = bias_offset(n_landmarks);
    put(&mut q, b, b, &(i3 * imu.accelerometer_bias.powi(2)));
    put(&mut q, b + 3, b + 3, &(i3 * imu.gyroscope_bias.powi(2)));
    q
}

/// Continuous error dynamics for the right-invariant error.
pub fn fc_rie(x: &DiligentState, g: &Vector3<f64>) -> DMatrix<f64> {
    let b = bias_offset(x.landmarks.len());
    let mut f = DMatrix::zeros(x.dim(), x.dim());
    put(&mut f, P, V, &Matrix3::identity());
    put(&mut f, P, b + 3, &(-skew(&x.p) * x.r));
    put(&mut f, R, b + 3, &-x.r);
    put(&mut f, V, R, &skew(g));
    put(&mut f, V, b, &-x.r);
    put(&mut f, V, b + 3, &(-skew(&x.v) * x.r));
    f
}

/// Continuous error dynamics for the left-invariant error; depends on the
/// bias-compensated IMU readings.
pub fn fc_lie(x: &DiligentState, u: &MotionInput) -> DMatrix<f64> {
    let b = bias_offset(x.landmarks.len());
    let (a, w) = compensated(x, u);
    let sw = skew(&w);
    let i3 = Matrix3::identity();
    let mut f = DMatrix::zeros(x.dim(), x.dim());
    put(&mut f, P, P, &-sw);
    put(&mut f, P, V, &i3);
    put(&mut f, R, R, &-sw);
    put(&mut f, R, b + 3, &-i3);
    put(&mut f, V, R, &-skew(&a));
    put(&mut f, V, V, &-sw);
    put(&mut f, V, b, &-i3);
    f
}

/// Mean propagation: the small-step form, or `X exp(Omega)` when `full`.
pub fn propagate_mean(x: &DiligentState, u: &MotionInput, g: &Vector3<f64>, full: bool) -> Result<DiligentState> {
    if full {
        let next = x.to_element().oplus_right(&omega(x, u, g))?;
        return DiligentState::from_element(&next);
    }
    let (f, w) = compensated(x, u);
    let acc = x.r * f + g;
    let dt = u.dt;
    let mut out = x.clone();
    out.p = x.p + x.v * dt + acc * (0.5 * dt * dt);
    out.r = x.r * so3::exp(&(w * dt));
    out.v = x.v + acc * dt;
    Ok(out)
}

/// Relative pose of foot `f` in the base frame, `(R^T (d - p), R^T Z)`.
pub fn foot_measurement(x: &DiligentState, f: usize) -> Pose64 {
    x.base_pose().inverse() * x.feet[f]
}

/// Measurement Jacobian of foot `f` for the local error.
pub fn h_left(x: &DiligentState, f: usize) -> DMatrix<f64> {
    let z = &x.feet[f];
    let zt = z.rot.transpose();
    let o = foot_offset(f);
    let mut h = DMatrix::zeros(6, x.dim());
    put(&mut h, 0, P, &(-zt * x.r));
    put(&mut h, 0, R, &(-zt * skew(&(x.p - z.trans)) * x.r));
    put(&mut h, 0, o, &Matrix3::identity());
    put(&mut h, 3, R, &(-zt * x.r));
    put(&mut h, 3, o + 3, &Matrix3::identity());
    h
}

/// Measurement Jacobian of foot `f` for the global error.
pub fn h_rie(x: &DiligentState, f: usize) -> DMatrix<f64> {
    let z = &x.feet[f];
    let zt = z.rot.transpose();
    let sd = skew(&z.trans);
    let o = foot_offset(f);
    let mut h = DMatrix::zeros(6, x.dim());
    put(&mut h, 0, P, &-zt);
    put(&mut h, 0, R, &(zt * sd));
    put(&mut h, 0, o, &zt);
    put(&mut h, 0, o + 3, &(-zt * sd));
    put(&mut h, 3, R, &-zt);
    put(&mut h, 3, o + 3, &zt);
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorSide {
    /// `X = X_hat exp(eps)`.
    Left,
    /// `X = exp(eps) X_hat`.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeModel {
    Discrete,
    /// First-order discretization of the continuous Riccati equation.
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variant {
    pub time: TimeModel,
    pub error: ErrorSide,
}

impl Variant {
    pub const DILIGENT: Self = Self { time: TimeModel::Discrete, error: ErrorSide::Left };
    pub const DILIGENT_RIE: Self = Self { time: TimeModel::Discrete, error: ErrorSide::Right };
    pub const CODILIGENT: Self = Self { time: TimeModel::Continuous, error: ErrorSide::Left };
    pub const CODILIGENT_RIE: Self = Self { time: TimeModel::Continuous, error: ErrorSide::Right };
}

/// Discrete motion model in the form the group filters expect.
#[derive(Debug, Clone)]
pub struct DiligentMotion {
    pub gravity: Vector3<f64>,
    pub imu: ImuNoise,
    pub kinematics: KinematicNoise,
    pub side: ErrorSide,
    pub full_mean_propagation: bool,
}

impl DiligentMotion {
    pub fn from_config(cfg: &EstimatorConfig, side: ErrorSide) -> Self {
        Self {
            gravity: cfg.gravity(),
            imu: cfg.imu.clone(),
            kinematics: cfg.kinematics.clone(),
            side,
            full_mean_propagation: cfg.full_mean_propagation,
        }
    }
}

impl MotionModel<f64> for DiligentMotion {
    type Input = MotionInput;

    fn omega(&self, x: &GroupElement64, u: &MotionInput) -> lie_core::Result<DVector<f64>> {
        Ok(omega(&state_of(x)?, u, &self.gravity))
    }

    fn jacobian(&self, x: &GroupElement64, u: &MotionInput) -> lie_core::Result<DMatrix<f64>> {
        let s = state_of(x)?;
        Ok(match self.side {
            ErrorSide::Left => jacobian_left(&s, u, &self.gravity),
            ErrorSide::Right => jacobian_rie(&s, u, &self.gravity),
        })
    }

    fn noise(&self, x: &GroupElement64, u: &MotionInput) -> lie_core::Result<DMatrix<f64>> {
        Ok(discrete_noise(state_of(x)?.landmarks.len(), u, &self.imu, &self.kinematics))
    }

    fn propagate(&self, x: &GroupElement64, u: &MotionInput) -> lie_core::Result<GroupElement64> {
        let next = propagate_mean(&state_of(x)?, u, &self.gravity, self.full_mean_propagation)
            .map_err(|e| lie_core::LieError::InvalidArgument(e.to_string()))?;
        Ok(next.to_element())
    }
}

fn state_of(x: &GroupElement64) -> lie_core::Result<DiligentState> {
    DiligentState::from_element(x).map_err(|e| lie_core::LieError::InvalidArgument(e.to_string()))
}

/// Forward-kinematics pose of one or both feet relative to the base.
#[derive(Debug, Clone)]
pub struct FootKinematics {
    pub feet: Vec<usize>,
    /// Noise of each foot's measurement, `J Cov(s) J^T`.
    pub noise: Vec<Matrix6<f64>>,
    pub side: ErrorSide,
}

impl FootKinematics {
    fn tag(&self) -> GroupTag {
        if self.feet.len() == 1 {
            GroupTag::SE3
        } else {
            GroupTag::Composite(vec![GroupTag::SE3; self.feet.len()])
        }
    }

    /// Packs measured relative foot poses into a measurement element.
    pub fn element(&self, poses: &[Pose64]) -> GroupElement64 {
        let tag = self.tag();
        let mut m: DMatrix<f64> = tag.identity();
        for (i, pose) in poses.iter().enumerate() {
            m.fixed_view_mut::<4, 4>(4 * i, 4 * i).copy_from(&pose.to_homogeneous());
        }
        GroupElement64::from_matrix_unchecked(tag, m)
    }
}

impl MeasurementModel<f64> for FootKinematics {
    fn predict(&self, x: &GroupElement64) -> lie_core::Result<GroupElement64> {
        let s = state_of(x)?;
        let poses: Vec<_> = self.feet.iter().map(|f| foot_measurement(&s, *f)).collect();
        Ok(self.element(&poses))
    }

    fn jacobian(&self, x: &GroupElement64) -> lie_core::Result<DMatrix<f64>> {
        let s = state_of(x)?;
        let mut h = DMatrix::zeros(6 * self.feet.len(), s.dim());
        for (i, f) in self.feet.iter().enumerate() {
            let block = match self.side {
                ErrorSide::Left => h_left(&s, *f),
                ErrorSide::Right => h_rie(&s, *f),
            };
            h.rows_mut(6 * i, 6).copy_from(&block);
        }
        Ok(h)
    }

    fn noise(&self, _x: &GroupElement64) -> lie_core::Result<DMatrix<f64>> {
        let n = self.noise.len();
        let mut out = DMatrix::zeros(6 * n, 6 * n);
        for (i, b) in self.noise.iter().enumerate() {
            out.fixed_view_mut::<6, 6>(6 * i, 6 * i).copy_from(b);
        }
        Ok(out)
    }
}

/// Diagonal prior in the error coordinates of the filter.
pub fn prior_covariance(prior: &PriorStd, n_landmarks: usize) -> DMatrix<f64> {
    let dim = BASE_DIM + 6 * n_landmarks;
    let mut d = DVector::zeros(dim);
    let mut fill = |at: usize, std: f64| d.fixed_rows_mut::<3>(at).fill(std * std);
    fill(P, prior.position);
    fill(R, prior.orientation());
    fill(V, prior.velocity);
    for f in 0..2 {
        fill(foot_offset(f), prior.position);
        fill(foot_offset(f) + 3, prior.orientation());
    }
    for j in 0..n_landmarks {
        fill(landmark_offset(j), prior.landmark_position);
        fill(landmark_offset(j) + 3, prior.landmark_orientation_deg.to_radians());
    }
    let b = bias_offset(n_landmarks);
    fill(b, prior.accelerometer_bias);
    fill(b + 3, prior.gyroscope_bias);
    DMatrix::from_diagonal(&d)
}

/// One of the four kinematic-inertial filters.
#[derive(Debug, Clone)]
pub struct Diligent {
    robot: Arc<RobotModel>,
    cfg: EstimatorConfig,
    variant: Variant,
    motion: DiligentMotion,
    belief: Belief<f64>,
}

impl Diligent {
    /// Feet start at the forward-kinematics poses of the initial base.
    pub fn new(robot: Arc<RobotModel>, cfg: EstimatorConfig, variant: Variant, init: &Initial, s: &DVector<f64>) -> Result<Self> {
        let mut feet = [Pose64::identity(); 2];
        for (f, foot) in feet.iter_mut().enumerate() {
            *foot = robot.chain.world_pose(s, &init.pose, robot.feet[f])?;
        }
        let state = DiligentState {
            p: init.pose.trans,
            r: init.pose.rot,
            v: init.v,
            feet,
            landmarks: Vec::new(),
            ba: init.acc_bias,
            bg: init.gyro_bias,
        };
        let belief = Belief::new(state.to_element(), prior_covariance(&cfg.prior, 0))?;
        let motion = DiligentMotion::from_config(&cfg, variant.error);
        Ok(Self { robot, cfg, variant, motion, belief })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn belief(&self) -> &Belief<f64> {
        &self.belief
    }

    pub fn set_belief(&mut self, belief: Belief<f64>) -> Result<()> {
        DiligentState::from_element(&belief.mean)?;
        self.belief = belief;
        Ok(())
    }

    pub fn state(&self) -> DiligentState {
        DiligentState::from_element(&self.belief.mean).expect("belief always holds a valid state")
    }

    pub fn motion(&self) -> &DiligentMotion {
        &self.motion
    }

    /// One propagation step with the given IMU input.
    pub fn propagate(&mut self, u: &MotionInput) -> Result<()> {
        warn_long_step(u.dt, self.cfg.max_dt);
        self.belief = match self.variant {
            Variant { time: TimeModel::Discrete, error: ErrorSide::Left } => {
                filtercore::dlgekf_predict(&self.belief, &self.motion, u)?
            }
            Variant { time: TimeModel::Discrete, error: ErrorSide::Right } => {
                filtercore::dlgekf_rie_predict(&self.belief, &self.motion, u)?
            }
            Variant { time: TimeModel::Continuous, error } => {
                let x = self.state();
                let n_l = x.landmarks.len();
                let w = continuous_noise(n_l, u.contacts, &self.cfg.imu, &self.cfg.kinematics);
                let (fc, qc) = match error {
                    ErrorSide::Right => {
                        let adj = self.belief.mean.adjoint();
                        (fc_rie(&x, &self.motion.gravity), &adj * w * adj.transpose())
                    }
                    ErrorSide::Left => (fc_lie(&x, u), w),
                };
                let d = x.dim();
                let f = DMatrix::identity(d, d) + fc * u.dt;
                let cov = filtercore::propagate_covariance(&self.belief.cov, &f, &f, &(qc * u.dt));
                Belief { mean: self.motion.propagate(&self.belief.mean, u)?, cov }
            }
        };
        Ok(())
    }

    /// Measurement model for the feet in `feet` at joint positions `s`.
    pub fn foot_model(&self, s: &DVector<f64>, feet: &[usize]) -> Result<(FootKinematics, GroupElement64)> {
        let var = self.cfg.kinematics.encoder().powi(2);
        let mut noise = Vec::with_capacity(feet.len());
        let mut poses = Vec::with_capacity(feet.len());
        for f in feet {
            let frame = self.robot.feet[*f];
            let j = self.robot.chain.relative_jacobian(s, self.robot.base(), frame)?;
            let n = &j * j.transpose() * var;
            noise.push(Matrix6::from_iterator(n.iter().copied()));
            poses.push(self.robot.chain.relative_fk(s, self.robot.base(), frame)?);
        }
        let model = FootKinematics { feet: feet.to_vec(), noise, side: self.variant.error };
        let z = model.element(&poses);
        Ok((model, z))
    }

    /// Corrects with the forward kinematics of the listed feet.
    pub fn update_feet(&mut self, s: &DVector<f64>, feet: &[usize]) -> Result<()> {
        if feet.is_empty() {
            return Ok(());
        }
        let (model, z) = self.foot_model(s, feet)?;
        let opts = UpdateOptions::default();
        self.belief = match self.variant.error {
            ErrorSide::Left => filtercore::dlgekf_update(&self.belief, &model, &z, &opts)?,
            ErrorSide::Right => filtercore::dlgekf_rie_update(&self.belief, &model, &z, &opts)?,
        };
        Ok(())
    }

    /// Appends a landmark pose with its own prior covariance and no
    /// correlation with the rest of the state. Returns its index.
    pub fn augment_landmark(&mut self, pose: Pose64, cov6: &Matrix6<f64>) -> Result<usize> {
        let mut x = self.state();
        let id = x.landmarks.len();
        let old_b = bias_offset(id);
        x.landmarks.push(pose);
        let d = x.dim();
        let insert = landmark_offset(id);
        // old index -> new index: everything from the bias block moves by 6
        let map = |i: usize| if i < old_b { i } else { i + 6 };
        let old = &self.belief.cov;
        let mut cov = DMatrix::zeros(d, d);
        for c in 0..old.ncols() {
            for r in 0..old.nrows() {
                cov[(map(r), map(c))] = old[(r, c)];
            }
        }
        cov.fixed_view_mut::<6, 6>(insert, insert).copy_from(cov6);
        self.belief = Belief::new(x.to_element(), cov)?;
        Ok(id)
    }

    /// Drops landmark `id` together with its rows and columns of the
    /// covariance.
    pub fn marginalize_landmark(&mut self, id: usize) -> Result<()> {
        let mut x = self.state();
        if id >= x.landmarks.len() {
            return Err(Error::Input(format!("unknown landmark {id}")));
        }
        x.landmarks.remove(id);
        let start = landmark_offset(id);
        let keep: Vec<usize> = (0..self.belief.cov.nrows()).filter(|i| *i < start || *i >= start + 6).collect();
        let old = &self.belief.cov;
        let cov = DMatrix::from_fn(keep.len(), keep.len(), |r, c| old[(keep[r], keep[c])]);
        self.belief = Belief::new(x.to_element(), cov)?;
        Ok(())
    }
}

impl Estimator for Diligent {
    fn predict(&mut self, imu: &ImuSample, dt: f64, contacts: &Contacts, _enc: &EncoderSample) -> Result<()> {
        self.propagate(&MotionInput { acc: imu.acc, gyro: imu.gyro, dt, contacts: contacts.feet })
    }

    fn correct(&mut self, _imu: &ImuSample, enc: &EncoderSample, contacts: &Contacts) -> Result<()> {
        let feet: Vec<usize> = (0..2).filter(|f| contacts.feet[*f]).collect();
        self.update_feet(&enc.s, &feet)
    }

    fn estimate(&self) -> BaseEstimate {
        let x = self.state();
        let names = ["ba_x", "ba_y", "ba_z", "bg_x", "bg_y", "bg_z"];
        let values = x.ba.iter().chain(x.bg.iter());
        BaseEstimate {
            pose: x.base_pose(),
            v: x.v,
            extras: names.iter().zip(values).map(|(n, v)| (n.to_string(), *v)).collect(),
        }
    }

    fn covariance(&self) -> Option<&DMatrix<f64>> {
        Some(&self.belief.cov)
    }
}
