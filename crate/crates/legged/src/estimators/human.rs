//! Base estimation from foot kinematics and a gyroscope on
//! SE_10(3) x T(3) x SO(3)^2.
//!
//! The state is `(p, R, v, d_1..d_8, omega, Z_LF, Z_RF)`: base pose and
//! velocity, the four sole vertices of each foot, the body angular
//! velocity and both foot orientations. The error is right-invariant,
//! `X = exp(delta) X_hat`. Observations that are invariant on the right go
//! straight through the invariant update, left-invariant ones are done
//! after transporting the covariance, and the rest use the group-valued
//! update.

use std::sync::Arc;

use lie_core::filtercore::{self, Belief, Invariance, InvariantObservation, MeasurementModel, UpdateOptions};
use lie_core::groups::{rotation_to_rpy, rpy_to_rotation, skew, so3, GroupTag};
use lie_core::uncertainty::{transport_covariance, Transport};
use lie_core::{GroupElement64, Pose64};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::{contact_scaled, BaseEstimate, Contacts, EncoderSample, Estimator, ImuSample, Initial};
use crate::config::{EstimatorConfig, TerrainUpdate};
use crate::error::{Error, Result};
use crate::robot::RobotModel;

pub const N_VERTICES: usize = 8;
pub const P: usize = 0;
pub const R: usize = 3;
pub const V: usize = 6;
pub const OMEGA: usize = 33;
pub const DIM: usize = 42;
/// Side of the state matrix.
pub const MATRIX_SIZE: usize = 23;

/// Tangent offset of vertex `i` (left foot first, four per foot).
pub fn vertex_offset(i: usize) -> usize {
    9 + 3 * i
}

/// Tangent offset of foot `f`'s orientation.
pub fn foot_rot_offset(f: usize) -> usize {
    36 + 3 * f
}

// Column of each translation-like quantity in the state matrix.
const COL_P: usize = 3;
const COL_V: usize = 4;
fn col_vertex(i: usize) -> usize {
    5 + i
}
const ROW_OMEGA: usize = 13;
const HOM_OMEGA: usize = 16;
fn row_foot(f: usize) -> usize {
    17 + 3 * f
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanState {
    pub p: Vector3<f64>,
    pub r: Matrix3<f64>,
    pub v: Vector3<f64>,
    pub d: [Vector3<f64>; N_VERTICES],
    /// Body-frame angular velocity.
    pub omega: Vector3<f64>,
    pub feet: [Matrix3<f64>; 2],
}

impl HumanState {
    pub fn tag() -> GroupTag {
        GroupTag::Composite(vec![GroupTag::SEk3(2 + N_VERTICES), GroupTag::Tn(3), GroupTag::SO3, GroupTag::SO3])
    }

    pub fn to_element(&self) -> GroupElement64 {
        let tag = Self::tag();
        let mut m: DMatrix<f64> = tag.identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.r);
        m.fixed_view_mut::<3, 1>(0, COL_P).copy_from(&self.p);
        m.fixed_view_mut::<3, 1>(0, COL_V).copy_from(&self.v);
        for (i, d) in self.d.iter().enumerate() {
            m.fixed_view_mut::<3, 1>(0, col_vertex(i)).copy_from(d);
        }
        m.fixed_view_mut::<3, 1>(ROW_OMEGA, HOM_OMEGA).copy_from(&self.omega);
        for f in 0..2 {
            m.fixed_view_mut::<3, 3>(row_foot(f), row_foot(f)).copy_from(&self.feet[f]);
        }
        GroupElement64::from_matrix_unchecked(tag, m)
    }

    pub fn from_element(x: &GroupElement64) -> Result<Self> {
        if *x.tag() != Self::tag() {
            return Err(Error::Input("not a human-motion state".into()));
        }
        let m = x.matrix();
        let col = |c: usize| m.fixed_view::<3, 1>(0, c).into_owned();
        Ok(Self {
            p: col(COL_P),
            r: m.fixed_view::<3, 3>(0, 0).into_owned(),
            v: col(COL_V),
            d: std::array::from_fn(|i| col(col_vertex(i))),
            omega: m.fixed_view::<3, 1>(ROW_OMEGA, HOM_OMEGA).into_owned(),
            feet: std::array::from_fn(|f| m.fixed_view::<3, 3>(row_foot(f), row_foot(f)).into_owned()),
        })
    }

    /// Zero-order-hold step: `p += v dt`, `R = R exp(omega dt)`.
    pub fn propagate(&self, dt: f64) -> Self {
        let mut out = self.clone();
        out.p = self.p + self.v * dt;
        out.r = self.r * so3::exp(&(self.omega * dt));
        out
    }
}

fn put(m: &mut DMatrix<f64>, r: usize, c: usize, b: &Matrix3<f64>) {
    m.fixed_view_mut::<3, 3>(r, c).copy_from(b);
}

/// Linearized error dynamics `d delta/dt = F_c delta`.
pub fn fc(x: &HumanState) -> DMatrix<f64> {
    let mut f = DMatrix::zeros(DIM, DIM);
    put(&mut f, P, V, &Matrix3::identity());
    put(&mut f, P, OMEGA, &(skew(&x.p) * x.r));
    put(&mut f, R, OMEGA, &x.r);
    put(&mut f, V, OMEGA, &(skew(&x.v) * x.r));
    for (i, d) in x.d.iter().enumerate() {
        put(&mut f, vertex_offset(i), OMEGA, &(skew(d) * x.r));
    }
    f
}

/// Measurement Jacobian of the relative position of vertex `i`.
pub fn h_relative_position(i: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(3, DIM);
    put(&mut h, 0, P, &-Matrix3::identity());
    put(&mut h, 0, vertex_offset(i), &Matrix3::identity());
    h
}

pub fn h_zupt_linear() -> DMatrix<f64> {
    let mut h = DMatrix::zeros(3, DIM);
    put(&mut h, 0, V, &Matrix3::identity());
    h
}

/// Also the Jacobian of the gyroscope observation in local coordinates.
pub fn h_angular_velocity() -> DMatrix<f64> {
    let mut h = DMatrix::zeros(3, DIM);
    put(&mut h, 0, OMEGA, &Matrix3::identity());
    h
}

/// Left-invariant terrain observation on vertex `i`, local coordinates.
pub fn h_terrain_left(i: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(3, DIM);
    put(&mut h, 0, vertex_offset(i), &Matrix3::identity());
    h
}

/// Terrain observation of vertex `i` as a point of T(3).
pub fn h_terrain(x: &HumanState, i: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(3, DIM);
    put(&mut h, 0, R, &-skew(&x.d[i]));
    put(&mut h, 0, vertex_offset(i), &Matrix3::identity());
    h
}

/// Relative orientation `R^T Z_F` of foot `f`.
pub fn h_foot_rotation(x: &HumanState, f: usize) -> DMatrix<f64> {
    let zt = x.feet[f].transpose();
    let mut h = DMatrix::zeros(3, DIM);
    put(&mut h, 0, R, &-zt);
    put(&mut h, 0, foot_rot_offset(f), &zt);
    h
}

/// Foot orientation `Z_F` observed directly.
pub fn h_plane(x: &HumanState, f: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(3, DIM);
    put(&mut h, 0, foot_rot_offset(f), &x.feet[f].transpose());
    h
}

/// Group-valued measurement already linearized at the current mean.
struct Linearized {
    predicted: GroupElement64,
    h: DMatrix<f64>,
    n: DMatrix<f64>,
}

impl MeasurementModel<f64> for Linearized {
    fn predict(&self, _x: &GroupElement64) -> lie_core::Result<GroupElement64> {
        Ok(self.predicted.clone())
    }

    fn jacobian(&self, _x: &GroupElement64) -> lie_core::Result<DMatrix<f64>> {
        Ok(self.h.clone())
    }

    fn noise(&self, _x: &GroupElement64) -> lie_core::Result<DMatrix<f64>> {
        Ok(self.n.clone())
    }
}

fn so3_element(r: &Matrix3<f64>) -> GroupElement64 {
    GroupElement64::from_matrix_unchecked(GroupTag::SO3, DMatrix::from_iterator(3, 3, r.iter().copied()))
}

fn tn_element(t: &DVector<f64>) -> GroupElement64 {
    let n = t.len();
    let mut m = DMatrix::identity(n + 1, n + 1);
    m.view_mut((0, n), (n, 1)).copy_from(t);
    GroupElement64::from_matrix_unchecked(GroupTag::Tn(n), m)
}

fn selector(start: usize) -> DMatrix<f64> {
    let mut pi = DMatrix::zeros(3, MATRIX_SIZE);
    pi.fixed_view_mut::<3, 3>(0, start).fill_with_identity();
    pi
}

fn diag3(a: f64, b: f64, c: f64) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(a, b, c))
}

fn dm(m: &Matrix3<f64>) -> DMatrix<f64> {
    DMatrix::from_iterator(3, 3, m.iter().copied())
}

pub struct HumanEkf {
    robot: Arc<RobotModel>,
    cfg: EstimatorConfig,
    belief: Belief<f64>,
    opts: UpdateOptions<f64>,
}

impl HumanEkf {
    pub fn new(robot: Arc<RobotModel>, cfg: EstimatorConfig, init: &Initial, s: &DVector<f64>) -> Result<Self> {
        let chain = &robot.chain;
        let mut d = [Vector3::zeros(); N_VERTICES];
        for (i, di) in d.iter_mut().enumerate() {
            *di = chain.world_pose(s, &init.pose, robot.vertices[i / 4][i % 4])?.trans;
        }
        let mut feet = [Matrix3::identity(); 2];
        for (f, z) in feet.iter_mut().enumerate() {
            *z = chain.world_pose(s, &init.pose, robot.feet[f])?.rot;
        }
        let state = HumanState {
            p: init.pose.trans,
            r: init.pose.rot,
            v: init.v,
            d,
            omega: Vector3::zeros(),
            feet,
        };
        let pr = &cfg.prior;
        let mut diag = DVector::zeros(DIM);
        let mut fill = |at: usize, std: f64| diag.fixed_rows_mut::<3>(at).fill(std * std);
        fill(P, pr.position);
        fill(R, pr.orientation());
        fill(V, pr.velocity);
        for i in 0..N_VERTICES {
            fill(vertex_offset(i), pr.position);
        }
        fill(OMEGA, pr.angular_velocity);
        for f in 0..2 {
            fill(foot_rot_offset(f), pr.orientation());
        }
        let belief = Belief::new(state.to_element(), DMatrix::from_diagonal(&diag))?;
        Ok(Self { robot, cfg, belief, opts: UpdateOptions::default() })
    }

    pub fn belief(&self) -> &Belief<f64> {
        &self.belief
    }

    pub fn set_belief(&mut self, belief: Belief<f64>) -> Result<()> {
        HumanState::from_element(&belief.mean)?;
        self.belief = belief;
        Ok(())
    }

    pub fn state(&self) -> HumanState {
        HumanState::from_element(&self.belief.mean).expect("belief always holds a valid state")
    }

    fn vertex_frame(&self, i: usize) -> usize {
        self.robot.vertices[i / 4][i % 4]
    }

    /// Continuous noise `Q_c` before the adjoint lift.
    fn process_noise(&self, s: &DVector<f64>, contacts: &Contacts) -> Result<DMatrix<f64>> {
        let h = &self.cfg.human;
        let swing = self.cfg.kinematics.swing_scale;
        let base = self.robot.base();
        let mut q = DMatrix::zeros(DIM, DIM);
        put(&mut q, V, V, &(Matrix3::identity() * h.base_linear_velocity.powi(2)));
        for i in 0..N_VERTICES {
            let r_bf = self.robot.chain.relative_fk(s, base, self.vertex_frame(i))?.rot;
            let std = contact_scaled(h.foot_linear_velocity, contacts.vertices[i / 4][i % 4], swing);
            put(&mut q, vertex_offset(i), vertex_offset(i), &(r_bf * r_bf.transpose() * std * std));
        }
        put(&mut q, OMEGA, OMEGA, &(Matrix3::identity() * h.base_angular_velocity.powi(2)));
        for f in 0..2 {
            let std = contact_scaled(h.foot_angular_velocity, foot_in_contact(contacts, f), swing);
            put(&mut q, foot_rot_offset(f), foot_rot_offset(f), &(Matrix3::identity() * std * std));
        }
        Ok(q)
    }

    /// Zero-order-hold propagation with a first-order Riccati step.
    pub fn propagate(&mut self, dt: f64, s: &DVector<f64>, contacts: &Contacts) -> Result<()> {
        let x = self.state();
        let adj = self.belief.mean.adjoint();
        let q_hat = &adj * self.process_noise(s, contacts)? * adj.transpose();
        let f = DMatrix::identity(DIM, DIM) + fc(&x) * dt;
        let cov = filtercore::propagate_covariance(&self.belief.cov, &f, &f, &(q_hat * dt));
        self.belief = Belief { mean: x.propagate(dt).to_element(), cov };
        Ok(())
    }

    fn right_update(&mut self, z: DVector<f64>, b: DVector<f64>, pi: DMatrix<f64>, h: DMatrix<f64>, n: Matrix3<f64>) -> Result<()> {
        let obs = InvariantObservation { invariance: Invariance::Right, z, b, pi, h, n: dm(&n) };
        self.belief = filtercore::invekf_update(&self.belief, &obs, &self.opts)?;
        Ok(())
    }

    /// Left-invariant observation: moves the covariance to local
    /// coordinates for the update and back afterwards.
    fn left_update(&mut self, z: DVector<f64>, b: DVector<f64>, pi: DMatrix<f64>, h: DMatrix<f64>, n: Matrix3<f64>) -> Result<()> {
        let local = Belief {
            mean: self.belief.mean.clone(),
            cov: transport_covariance(&self.belief.cov, &self.belief.mean, Transport::RightToLeft),
        };
        let obs = InvariantObservation { invariance: Invariance::Left, z, b, pi, h, n: dm(&n) };
        let post = filtercore::invekf_update(&local, &obs, &self.opts)?;
        let cov = transport_covariance(&post.cov, &post.mean, Transport::LeftToRight);
        self.belief = Belief { mean: post.mean, cov };
        Ok(())
    }

    fn group_update(&mut self, model: Linearized, z: &GroupElement64) -> Result<()> {
        self.belief = filtercore::dlgekf_rie_update(&self.belief, &model, z, &self.opts)?;
        Ok(())
    }

    /// Position of vertex `i` relative to the base, from the encoders.
    pub fn update_relative_position(&mut self, i: usize, s: &DVector<f64>) -> Result<()> {
        let chain = &self.robot.chain;
        let frame = self.vertex_frame(i);
        let h_bf = chain.relative_fk(s, self.robot.base(), frame)?;
        let jac = chain.relative_jacobian(s, self.robot.base(), frame)?;
        let j_lin = h_bf.rot * jac.rows(0, 3);
        let r = self.state().r;
        let n = r * (&j_lin * j_lin.transpose()).fixed_view::<3, 3>(0, 0) * r.transpose()
            * self.cfg.human.joint_position.powi(2);
        let mut b = DVector::zeros(MATRIX_SIZE);
        b[COL_P] = 1.0;
        b[col_vertex(i)] = -1.0;
        let mut z = b.clone();
        z.fixed_rows_mut::<3>(0).copy_from(&h_bf.trans);
        self.right_update(z, b, selector(0), h_relative_position(i), n)
    }

    /// Body twist of the base implied by foot `f` being at rest.
    pub fn stance_base_twist(&self, f: usize, enc: &EncoderSample) -> Result<(Vector3<f64>, Vector3<f64>)> {
        let chain = &self.robot.chain;
        let frame = self.robot.feet[f];
        let h_bf = chain.relative_fk(&enc.s, self.robot.base(), frame)?;
        let jac = chain.relative_jacobian(&enc.s, self.robot.base(), frame)?;
        let twist = -(h_bf.adjoint() * nalgebra::Vector6::from_iterator((jac * &enc.sdot).iter().copied()));
        Ok((twist.fixed_rows::<3>(0).into_owned(), twist.fixed_rows::<3>(3).into_owned()))
    }

    /// Zero-velocity update through stance foot `f`.
    pub fn update_zupt(&mut self, f: usize, enc: &EncoderSample) -> Result<()> {
        let (lin, ang) = self.stance_base_twist(f, enc)?;
        let h = &self.cfg.human;
        let (sl, sa) = (h.zupt_linear, h.zupt_angular);

        let r = self.state().r;
        let mut b = DVector::zeros(MATRIX_SIZE);
        b[COL_V] = -1.0;
        let mut z = b.clone();
        z.fixed_rows_mut::<3>(0).copy_from(&lin);
        self.right_update(z, b, selector(0), h_zupt_linear(), r * r.transpose() * sl * sl)?;

        let mut b = DVector::zeros(MATRIX_SIZE);
        b[HOM_OMEGA] = -1.0;
        let mut z = b.clone();
        z.fixed_rows_mut::<3>(ROW_OMEGA).copy_from(&ang);
        self.right_update(z, b, selector(ROW_OMEGA), h_angular_velocity(), Matrix3::identity() * sa * sa)
    }

    pub fn update_gyro(&mut self, gyro: &Vector3<f64>) -> Result<()> {
        let s = self.cfg.human.gyroscope;
        let mut b = DVector::zeros(MATRIX_SIZE);
        b[HOM_OMEGA] = 1.0;
        let mut z = b.clone();
        z.fixed_rows_mut::<3>(ROW_OMEGA).copy_from(gyro);
        self.left_update(z, b, selector(ROW_OMEGA), h_angular_velocity(), Matrix3::identity() * s * s)
    }

    /// Known floor height under vertex `i`.
    pub fn update_terrain(&mut self, i: usize, mode: TerrainUpdate) -> Result<()> {
        self.update_terrain_many(&[i], mode)
    }

    /// Known floor height under several vertices. The non-invariant form
    /// stacks them into one observation on T(3m).
    pub fn update_terrain_many(&mut self, vertices: &[usize], mode: TerrainUpdate) -> Result<()> {
        let h = &self.cfg.human;
        let cov = diag3(h.terrain_planar.powi(2), h.terrain_planar.powi(2), h.terrain_height.powi(2));
        let floor = h.floor_height;
        let target = |d: &Vector3<f64>| Vector3::new(d.x, d.y, floor);
        match mode {
            TerrainUpdate::Off => Ok(()),
            TerrainUpdate::LeftInvariant => {
                for &i in vertices {
                    let x = self.state();
                    let mut b = DVector::zeros(MATRIX_SIZE);
                    b[col_vertex(i)] = 1.0;
                    let mut z = b.clone();
                    z.fixed_rows_mut::<3>(0).copy_from(&target(&x.d[i]));
                    let n = x.r.transpose() * cov * x.r;
                    self.left_update(z, b, selector(0), h_terrain_left(i), n)?;
                }
                Ok(())
            }
            TerrainUpdate::NonInvariant => {
                if vertices.is_empty() {
                    return Ok(());
                }
                let x = self.state();
                let m = 3 * vertices.len();
                let mut predicted = DVector::zeros(m);
                let mut measured = DVector::zeros(m);
                let mut jac = DMatrix::zeros(m, DIM);
                let mut n = DMatrix::zeros(m, m);
                for (k, &i) in vertices.iter().enumerate() {
                    predicted.fixed_rows_mut::<3>(3 * k).copy_from(&x.d[i]);
                    measured.fixed_rows_mut::<3>(3 * k).copy_from(&target(&x.d[i]));
                    jac.rows_mut(3 * k, 3).copy_from(&h_terrain(&x, i));
                    n.fixed_view_mut::<3, 3>(3 * k, 3 * k).copy_from(&cov);
                }
                let model = Linearized { predicted: tn_element(&predicted), h: jac, n };
                self.group_update(model, &tn_element(&measured))
            }
        }
    }

    /// Relative orientation of foot `f` from the encoders.
    pub fn update_foot_rotation(&mut self, f: usize, s: &DVector<f64>) -> Result<()> {
        let chain = &self.robot.chain;
        let frame = self.robot.feet[f];
        let measured = chain.relative_fk(s, self.robot.base(), frame)?.rot;
        let j_ang = chain.relative_jacobian(s, self.robot.base(), frame)?.rows(3, 3).into_owned();
        let n = &j_ang * j_ang.transpose() * self.cfg.human.joint_position.powi(2);
        let x = self.state();
        let model = Linearized { predicted: so3_element(&(x.r.transpose() * x.feet[f])), h: h_foot_rotation(&x, f), n };
        self.group_update(model, &so3_element(&measured))
    }

    /// Foot `f` flat on the floor, heading kept.
    pub fn update_plane(&mut self, f: usize) -> Result<()> {
        let x = self.state();
        let (_, _, yaw) = rotation_to_rpy(&x.feet[f])?;
        let flat = rpy_to_rotation(0.0, 0.0, yaw);
        let s = self.cfg.human.plane_orientation;
        let model = Linearized { predicted: so3_element(&x.feet[f]), h: h_plane(&x, f), n: dm(&(Matrix3::identity() * s * s)) };
        self.group_update(model, &so3_element(&flat))
    }
}

fn foot_in_contact(contacts: &Contacts, f: usize) -> bool {
    contacts.feet[f] || contacts.vertices[f].iter().any(|c| *c)
}

impl Estimator for HumanEkf {
    fn predict(&mut self, _imu: &ImuSample, dt: f64, contacts: &Contacts, enc: &EncoderSample) -> Result<()> {
        self.propagate(dt, &enc.s, contacts)
    }

    fn correct(&mut self, imu: &ImuSample, enc: &EncoderSample, contacts: &Contacts) -> Result<()> {
        let cfg = self.cfg.human.clone();
        for i in 0..N_VERTICES {
            if contacts.vertices[i / 4][i % 4] {
                self.update_relative_position(i, &enc.s)?;
            }
        }
        for f in 0..2 {
            if cfg.zupt_update && foot_in_contact(contacts, f) {
                self.update_zupt(f, enc)?;
            }
        }
        if cfg.gyro_update {
            self.update_gyro(&imu.gyro)?;
        }
        let touching: Vec<usize> = (0..N_VERTICES).filter(|i| contacts.vertices[i / 4][i % 4]).collect();
        self.update_terrain_many(&touching, cfg.terrain_update)?;
        for f in 0..2 {
            if foot_in_contact(contacts, f) {
                self.update_foot_rotation(f, &enc.s)?;
                if cfg.plane_update {
                    self.update_plane(f)?;
                }
            }
        }
        Ok(())
    }

    fn estimate(&self) -> BaseEstimate {
        let x = self.state();
        let names = ["omega_x", "omega_y", "omega_z"];
        BaseEstimate {
            pose: Pose64::new(x.r, x.p),
            v: x.v,
            extras: names.iter().zip(x.omega.iter()).map(|(n, v)| (n.to_string(), *v)).collect(),
        }
    }

    fn covariance(&self) -> Option<&DMatrix<f64>> {
        Some(&self.belief.cov)
    }
}
