//! Floating-base kinematics: forward kinematics, trivialized Jacobians,
//! legged odometry, contact-aided base velocity and dynamical inverse
//! kinematics.
//!
//! Twists are linear-first. "Left-trivialized" quantities live in the child
//! frame (`H^-1 dH`); "mixed" ones have world-aligned axes at the frame
//! origin.

use std::collections::HashMap;

use lie_core::groups::so3::{self, skew};
use lie_core::Pose64;
use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Quaternion, UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into [`KinematicChain::frames`]. Links come first, so a link's
/// index is also its frame id.
pub type FrameId = usize;

/// Revolute joint; its index in the chain is its index in the joint vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    pub parent: usize,
    pub child: usize,
    /// Child frame at zero angle, expressed in the parent link.
    pub origin: Pose64,
    /// Unit rotation axis in the child frame.
    pub axis: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub name: String,
    pub link: usize,
    pub offset: Pose64,
}

/// Tree of links connected by revolute joints, rooted at the base link.
#[derive(Debug, Clone)]
pub struct KinematicChain {
    links: Vec<String>,
    joints: Vec<Joint>,
    frames: Vec<Frame>,
    base: usize,
    parent_joint: Vec<Option<usize>>,
    /// Joints ordered so parents come before children.
    order: Vec<usize>,
    by_name: HashMap<String, FrameId>,
}

impl KinematicChain {
    pub fn new(links: Vec<String>, joints: Vec<Joint>, extra_frames: Vec<Frame>, base: usize) -> Result<Self> {
        let n = links.len();
        if base >= n {
            return Err(Error::Config("base link out of range".into()));
        }
        let mut parent_joint = vec![None; n];
        for (j, joint) in joints.iter().enumerate() {
            if joint.parent >= n || joint.child >= n {
                return Err(Error::Config(format!("joint {} references a missing link", joint.name)));
            }
            if joint.child == base || parent_joint[joint.child].is_some() {
                return Err(Error::Config(format!("link {} has more than one parent", links[joint.child])));
            }
            if (joint.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("joint {} axis is not unit length", joint.name)));
            }
            parent_joint[joint.child] = Some(j);
        }
        // breadth-first from the base fixes the order and detects detached links
        let mut order = Vec::with_capacity(joints.len());
        let mut reached = vec![false; n];
        reached[base] = true;
        let mut queue = vec![base];
        while let Some(l) = queue.pop() {
            for (j, joint) in joints.iter().enumerate() {
                if joint.parent == l && !reached[joint.child] {
                    reached[joint.child] = true;
                    order.push(j);
                    queue.push(joint.child);
                }
            }
        }
        if let Some(l) = reached.iter().position(|r| !r) {
            return Err(Error::Config(format!("link {} is not connected to the base", links[l])));
        }

        let mut frames: Vec<Frame> =
            links.iter().enumerate().map(|(i, l)| Frame { name: l.clone(), link: i, offset: Pose64::identity() }).collect();
        for f in extra_frames {
            if f.link >= n {
                return Err(Error::Config(format!("frame {} references a missing link", f.name)));
            }
            frames.push(f);
        }
        let mut by_name = HashMap::new();
        for (i, f) in frames.iter().enumerate() {
            if by_name.insert(f.name.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate frame name {}", f.name)));
            }
        }
        Ok(Self { links, joints, frames, base, parent_joint, order, by_name })
    }

    pub fn dofs(&self) -> usize {
        self.joints.len()
    }

    pub fn base(&self) -> FrameId {
        self.base
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn links(&self) -> &[String] {
        &self.links
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, name: &str) -> Result<FrameId> {
        self.by_name.get(name).copied().ok_or_else(|| Error::Config(format!("unknown frame {name}")))
    }

    fn check_joints(&self, s: &DVector<f64>) -> Result<()> {
        if s.len() != self.dofs() {
            return Err(Error::Input(format!("expected {} joint values, got {}", self.dofs(), s.len())));
        }
        Ok(())
    }

    /// Pose of every link in the base frame.
    pub fn link_poses(&self, s: &DVector<f64>) -> Result<Vec<Pose64>> {
        self.check_joints(s)?;
        let mut poses = vec![Pose64::identity(); self.links.len()];
        for &j in &self.order {
            let joint = &self.joints[j];
            let motion = Pose64::from_rotation(so3::exp(&(joint.axis * s[j])));
            poses[joint.child] = poses[joint.parent] * joint.origin * motion;
        }
        Ok(poses)
    }

    fn frame_pose_in(&self, links: &[Pose64], f: FrameId) -> Pose64 {
        let frame = &self.frames[f];
        links[frame.link] * frame.offset
    }

    /// `H_{from,to}(s)`.
    pub fn relative_fk(&self, s: &DVector<f64>, from: FrameId, to: FrameId) -> Result<Pose64> {
        let links = self.link_poses(s)?;
        Ok(self.frame_pose_in(&links, from).inverse() * self.frame_pose_in(&links, to))
    }

    /// Joints between the base and a link.
    fn path(&self, link: usize) -> Vec<bool> {
        let mut on = vec![false; self.joints.len()];
        let mut l = link;
        while let Some(j) = self.parent_joint[l] {
            on[j] = true;
            l = self.joints[j].parent;
        }
        on
    }

    /// Left-trivialized relative Jacobian: `vee(H^-1 dH/dt) = J ds/dt` for
    /// `H = H_{from,to}(s)`, velocities expressed in `to`.
    pub fn relative_jacobian(&self, s: &DVector<f64>, from: FrameId, to: FrameId) -> Result<DMatrix<f64>> {
        let links = self.link_poses(s)?;
        Ok(self.relative_jacobian_with(&links, from, to))
    }

    fn relative_jacobian_with(&self, links: &[Pose64], from: FrameId, to: FrameId) -> DMatrix<f64> {
        let on_to = self.path(self.frames[to].link);
        let on_from = self.path(self.frames[from].link);
        let to_inv = self.frame_pose_in(links, to).inverse();
        let mut jac = DMatrix::zeros(6, self.dofs());
        for (j, joint) in self.joints.iter().enumerate() {
            let sign = match (on_to[j], on_from[j]) {
                (true, false) => 1.0,
                (false, true) => -1.0,
                _ => continue,
            };
            let motion = Vector6::new(0.0, 0.0, 0.0, joint.axis.x, joint.axis.y, joint.axis.z);
            let col = (to_inv * links[joint.child]).adjoint() * motion * sign;
            jac.set_column(j, &col);
        }
        jac
    }

    /// Mixed Jacobian of `frame`: `[v_F; w_F] = J [v_B; w_B; ds]`, with the
    /// base pose `H_AB` in the world.
    pub fn mixed_jacobian(&self, s: &DVector<f64>, base_pose: &Pose64, frame: FrameId) -> Result<DMatrix<f64>> {
        let links = self.link_poses(s)?;
        Ok(self.mixed_jacobian_with(&links, base_pose, frame))
    }

    fn mixed_jacobian_with(&self, links: &[Pose64], base_pose: &Pose64, frame: FrameId) -> DMatrix<f64> {
        let n = self.dofs();
        let h_bf = self.frame_pose_in(links, self.base).inverse() * self.frame_pose_in(links, frame);
        let rel = self.relative_jacobian_with(links, self.base, frame);
        let r_af = base_pose.rot * h_bf.rot;
        let mut jac = DMatrix::zeros(6, 6 + n);
        jac.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
        jac.fixed_view_mut::<3, 3>(3, 3).copy_from(&Matrix3::identity());
        jac.fixed_view_mut::<3, 3>(0, 3).copy_from(&-skew(&(base_pose.rot * h_bf.trans)));
        jac.view_mut((0, 6), (3, n)).copy_from(&(r_af * rel.rows(0, 3)));
        jac.view_mut((3, 6), (3, n)).copy_from(&(r_af * rel.rows(3, 3)));
        jac
    }

    /// World pose of a frame given the base pose.
    pub fn world_pose(&self, s: &DVector<f64>, base_pose: &Pose64, frame: FrameId) -> Result<Pose64> {
        Ok(*base_pose * self.relative_fk(s, self.base, frame)?)
    }
}

/// Converts `(w, x, y, z)` to a rotation matrix, normalising the quaternion.
pub fn quat_to_rotation(q: [f64; 4]) -> Matrix3<f64> {
    UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3])).to_rotation_matrix().into_inner()
}

/// `(w, x, y, z)` with non-negative `w`.
pub fn rotation_to_quat(r: &Matrix3<f64>) -> [f64; 4] {
    let q = UnitQuaternion::from_matrix(r);
    let c = q.quaternion().coords; // (x, y, z, w)
    let s = if c.w < 0.0 { -1.0 } else { 1.0 };
    [s * c.w, s * c.x, s * c.y, s * c.z]
}

/// Serialized chain description: fixed transforms are `xyz` plus a
/// `(w, x, y, z)` quaternion.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ChainSpec {
    pub base: String,
    pub joints: Vec<JointSpec>,
    #[serde(default)]
    pub frames: Vec<FrameSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub parent: String,
    pub child: String,
    pub axis: [f64; 3],
    pub xyz: [f64; 3],
    pub quat: [f64; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FrameSpec {
    pub name: String,
    pub link: String,
    pub xyz: [f64; 3],
    pub quat: [f64; 4],
}

fn pose_from(xyz: [f64; 3], quat: [f64; 4]) -> Pose64 {
    Pose64::new(quat_to_rotation(quat), Vector3::from(xyz))
}

impl ChainSpec {
    pub fn build(&self) -> Result<KinematicChain> {
        let mut links = vec![self.base.clone()];
        let mut index = HashMap::from([(self.base.clone(), 0usize)]);
        let mut intern = |name: &str, links: &mut Vec<String>| {
            *index.entry(name.to_string()).or_insert_with(|| {
                links.push(name.to_string());
                links.len() - 1
            })
        };
        let mut joints = Vec::new();
        for j in &self.joints {
            let parent = intern(&j.parent, &mut links);
            let child = intern(&j.child, &mut links);
            let axis = Vector3::from(j.axis);
            if axis.norm() < 1e-12 {
                return Err(Error::Config(format!("joint {} has a zero axis", j.name)));
            }
            joints.push(Joint { name: j.name.clone(), parent, child, origin: pose_from(j.xyz, j.quat), axis: axis.normalize() });
        }
        let mut frames = Vec::new();
        for f in &self.frames {
            let link = links
                .iter()
                .position(|l| l == &f.link)
                .ok_or_else(|| Error::Config(format!("frame {} references unknown link {}", f.name, f.link)))?;
            frames.push(Frame { name: f.name.clone(), link, offset: pose_from(f.xyz, f.quat) });
        }
        KinematicChain::new(links, joints, frames, 0)
    }

    pub fn from_chain(chain: &KinematicChain) -> Self {
        let links = chain.links();
        let spec_of = |p: &Pose64| (p.trans.into(), rotation_to_quat(&p.rot));
        ChainSpec {
            base: links[chain.base()].clone(),
            joints: chain
                .joints()
                .iter()
                .map(|j| {
                    let (xyz, quat) = spec_of(&j.origin);
                    JointSpec {
                        name: j.name.clone(),
                        parent: links[j.parent].clone(),
                        child: links[j.child].clone(),
                        axis: j.axis.into(),
                        xyz,
                        quat,
                    }
                })
                .collect(),
            frames: chain.frames()[links.len()..]
                .iter()
                .map(|f| {
                    let (xyz, quat) = spec_of(&f.offset);
                    FrameSpec { name: f.name.clone(), link: links[f.link].clone(), xyz, quat }
                })
                .collect(),
        }
    }
}

/// Legged odometry: a frame believed fixed in the world carries the base
/// pose through forward kinematics.
#[derive(Debug, Clone, PartialEq)]
pub struct LeggedOdometry {
    pub fixed_frame: FrameId,
    pub fixed_pose: Pose64,
    pub base_pose: Pose64,
}

impl LeggedOdometry {
    /// Starts with a known base pose.
    pub fn new(chain: &KinematicChain, s: &DVector<f64>, fixed_frame: FrameId, base_pose: Pose64) -> Result<Self> {
        let fixed_pose = base_pose * chain.relative_fk(s, chain.base(), fixed_frame)?;
        Ok(Self { fixed_frame, fixed_pose, base_pose })
    }

    /// Optionally hands the fixed role to `switch_to`, then recomputes the
    /// base pose from the current joint positions.
    pub fn update(&mut self, chain: &KinematicChain, s: &DVector<f64>, switch_to: Option<FrameId>) -> Result<Pose64> {
        if let Some(next) = switch_to.filter(|f| *f != self.fixed_frame) {
            self.fixed_pose = self.fixed_pose * chain.relative_fk(s, self.fixed_frame, next)?;
            self.fixed_frame = next;
        }
        self.base_pose = self.fixed_pose * chain.relative_fk(s, self.fixed_frame, chain.base())?;
        Ok(self.base_pose)
    }
}

/// Mixed base twist implied by a contact frame moving with the mixed twist
/// `frame_twist` (zero for a rigid contact).
pub fn base_velocity_from_contact(
    chain: &KinematicChain,
    s: &DVector<f64>,
    sdot: &DVector<f64>,
    base_pose: &Pose64,
    contact: FrameId,
    frame_twist: &Vector6<f64>,
) -> Result<Vector6<f64>> {
    let jac = chain.mixed_jacobian(s, base_pose, contact)?;
    let js = jac.columns(6, chain.dofs()) * sdot;
    let r = -so3::unskew(&jac.fixed_view::<3, 3>(0, 3).into_owned());
    // [[I, -S(r)], [0, I]]^-1 = [[I, S(r)], [0, I]]
    let mut inv = Matrix6::identity();
    inv.fixed_view_mut::<3, 3>(0, 3).copy_from(&skew(&r));
    let rhs = frame_twist - Vector6::from_iterator(js.iter().copied());
    Ok(inv * rhs)
}

/// Mixed twist of a foot rolling about a point `p_fp` (foot frame) with
/// angular velocity `omega_f` (foot frame), foot orientation `r_af`.
pub fn rotating_foot_twist(omega_f: &Vector3<f64>, p_fp: &Vector3<f64>, r_af: &Matrix3<f64>) -> Vector6<f64> {
    let v = r_af * skew(p_fp) * omega_f;
    let w = r_af * omega_f;
    Vector6::new(v.x, v.y, v.z, w.x, w.y, w.z)
}

/// One block of a weighted least-squares velocity problem `A x ~ y`.
#[derive(Debug, Clone)]
pub struct VelocityConstraint {
    pub a: DMatrix<f64>,
    pub y: DVector<f64>,
    /// Diagonal weights, one per row.
    pub weights: DVector<f64>,
}

/// `x = (A^T W A + Delta)^-1 A^T W y` over the stacked constraints.
pub fn fused_velocity(constraints: &[VelocityConstraint], regularization: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = regularization.nrows();
    let mut lhs = regularization.clone();
    let mut rhs = DVector::zeros(n);
    for c in constraints {
        if c.a.ncols() != n || c.a.nrows() != c.y.len() || c.y.len() != c.weights.len() {
            return Err(Error::Input("velocity constraint has inconsistent dimensions".into()));
        }
        let aw = c.a.transpose() * DMatrix::from_diagonal(&c.weights);
        lhs += &aw * &c.a;
        rhs += aw * &c.y;
    }
    lhs.cholesky().map(|ch| ch.solve(&rhs)).ok_or_else(|| Error::Numeric("velocity normal equations are singular".into()))
}

/// Damped Newton inverse kinematics for `H_{from,to}(s) = target`, moving
/// only the listed joints.
pub fn inverse_kinematics(
    chain: &KinematicChain,
    seed: &DVector<f64>,
    from: FrameId,
    to: FrameId,
    target: &Pose64,
    joints: &[usize],
) -> Result<DVector<f64>> {
    let mut s = seed.clone();
    for _ in 0..100 {
        let links = chain.link_poses(&s)?;
        let current = chain.frame_pose_in(&links, from).inverse() * chain.frame_pose_in(&links, to);
        let err = (current.inverse() * *target).log()?;
        if err.amax() < 1e-13 {
            return Ok(s);
        }
        let full = chain.relative_jacobian_with(&links, from, to);
        let jac = DMatrix::from_fn(6, joints.len(), |r, c| full[(r, joints[c])]);
        let jtj = jac.transpose() * &jac + DMatrix::identity(joints.len(), joints.len()) * 1e-12;
        let step = jtj
            .cholesky()
            .ok_or_else(|| Error::Numeric("singular inverse kinematics".into()))?
            .solve(&(jac.transpose() * DVector::from_column_slice(err.as_slice())));
        for (k, j) in joints.iter().enumerate() {
            s[*j] += step[k];
        }
    }
    Err(Error::Numeric("inverse kinematics did not converge".into()))
}

/// What a dynamical-IK target constrains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IkGoal {
    Position(Vector3<f64>),
    Orientation(Matrix3<f64>),
    Pose(Pose64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkTarget {
    pub frame: FrameId,
    pub goal: IkGoal,
    /// Mixed target velocity `(v, w)`.
    pub velocity: Vector6<f64>,
    pub gain: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynIkConfig {
    pub dt: f64,
    pub damping: f64,
    /// Keep the base pose fixed and solve for joints only.
    pub fixed_base: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynIkState {
    pub base: Pose64,
    pub s: DVector<f64>,
}

/// One step of dynamical inverse kinematics. Returns the integrated state
/// and the solved velocity `(v_B, w_B, ds)`.
pub fn dynik_step(
    chain: &KinematicChain,
    state: &DynIkState,
    targets: &[IkTarget],
    cfg: &DynIkConfig,
) -> Result<(DynIkState, DVector<f64>)> {
    let n = chain.dofs();
    let links = chain.link_poses(&state.s)?;
    let mut constraints = Vec::new();
    for t in targets {
        let jac = chain.mixed_jacobian_with(&links, &state.base, t.frame);
        let pose = state.base * chain.frame_pose_in(&links, chain.base()).inverse() * chain.frame_pose_in(&links, t.frame);
        let lin = |p: &Vector3<f64>| t.velocity.fixed_rows::<3>(0) + (p - pose.trans) * t.gain;
        let ang = |r: &Matrix3<f64>| -> Result<Vector3<f64>> {
            let body = so3::log(&(pose.rot.transpose() * r))?;
            Ok(t.velocity.fixed_rows::<3>(3) + pose.rot * body * t.gain)
        };
        let (rows, y): (DMatrix<f64>, DVector<f64>) = match &t.goal {
            IkGoal::Position(p) => (jac.rows(0, 3).into_owned(), DVector::from_column_slice(lin(p).as_slice())),
            IkGoal::Orientation(r) => (jac.rows(3, 3).into_owned(), DVector::from_column_slice(ang(r)?.as_slice())),
            IkGoal::Pose(h) => {
                let (v, w) = (lin(&h.trans), ang(&h.rot)?);
                (jac, DVector::from_vec(vec![v.x, v.y, v.z, w.x, w.y, w.z]))
            }
        };
        let rows = if cfg.fixed_base { rows.columns(6, n).into_owned() } else { rows };
        let m = y.len();
        constraints.push(VelocityConstraint { a: rows, y, weights: DVector::from_element(m, t.weight) });
    }
    let dim = if cfg.fixed_base { n } else { 6 + n };
    let solved = fused_velocity(&constraints, &(DMatrix::identity(dim, dim) * cfg.damping))?;
    let nu = if cfg.fixed_base {
        let mut full = DVector::zeros(6 + n);
        full.rows_mut(6, n).copy_from(&solved);
        full
    } else {
        solved
    };
    let v = Vector3::new(nu[0], nu[1], nu[2]);
    let w = Vector3::new(nu[3], nu[4], nu[5]);
    let base = Pose64::new(so3::exp(&(w * cfg.dt)) * state.base.rot, state.base.trans + v * cfg.dt);
    let s = &state.s + nu.rows(6, n) * cfg.dt;
    Ok((DynIkState { base, s }, nu))
}
