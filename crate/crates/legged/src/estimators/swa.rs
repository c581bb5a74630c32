//! Simple weighted averaging: legged odometry for position, a weighted
//! rotation average of the odometry and IMU attitudes, and a least-squares
//! base velocity from the stance feet and the gyroscope.

use std::sync::Arc;

use lie_core::averaging::{karcher_mean, AveragingConfig};
use lie_core::groups::{rotation_to_rpy, rpy_to_rotation, so3, GroupTag};
use lie_core::{GroupElement64, Pose64};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::{BaseEstimate, Contacts, EncoderSample, Estimator, ImuSample, Initial};
use crate::config::EstimatorConfig;
use crate::error::Result;
use crate::kinematics::{fused_velocity, LeggedOdometry, VelocityConstraint};
use crate::robot::RobotModel;

/// Replaces the yaw of `r_imu` with the yaw of `r_lo` (ZYX roll-pitch-yaw).
pub fn project_yaw(r_imu: &Matrix3<f64>, r_lo: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let (roll, pitch, _) = rotation_to_rpy(r_imu)?;
    let (_, _, yaw) = rotation_to_rpy(r_lo)?;
    Ok(rpy_to_rotation(roll, pitch, yaw))
}

/// Weighted average of two rotations on SO(3).
pub fn fuse_rotations(r_lo: &Matrix3<f64>, r_imu: &Matrix3<f64>, w_lo: f64, w_imu: f64) -> Result<Matrix3<f64>> {
    let el = |r: &Matrix3<f64>| GroupElement64::from_matrix_unchecked(GroupTag::SO3, DMatrix::from_iterator(3, 3, r.iter().copied()));
    let cfg = AveragingConfig { step_size: 1.0, tolerance: 1e-12, max_iters: 100 };
    let mean = karcher_mean(&[el(r_lo), el(r_imu)], &[w_lo, w_imu], &cfg)?;
    Ok(mean.matrix().fixed_view::<3, 3>(0, 0).into_owned())
}

pub struct Swa {
    robot: Arc<RobotModel>,
    cfg: EstimatorConfig,
    use_imu: bool,
    odometry: LeggedOdometry,
    /// Attitude integrated from the gyroscope when the IMU gives none.
    r_gyro: Matrix3<f64>,
    pose: Pose64,
    v: Vector3<f64>,
    omega: Vector3<f64>,
    /// Set while no foot is in contact and the estimate is held.
    holding: bool,
    previous_contacts: [bool; 2],
}

impl Swa {
    pub fn new(robot: Arc<RobotModel>, cfg: EstimatorConfig, init: &Initial, s: &DVector<f64>) -> Result<Self> {
        let odometry = LeggedOdometry::new(&robot.chain, s, robot.feet[0], init.pose)?;
        Ok(Self {
            robot,
            cfg,
            use_imu: true,
            odometry,
            r_gyro: init.pose.rot,
            pose: init.pose,
            v: init.v,
            omega: Vector3::zeros(),
            holding: false,
            previous_contacts: [true; 2],
        })
    }

    /// Kinematics only: odometry attitude and contact-only velocity.
    pub fn legged_odometry(robot: Arc<RobotModel>, cfg: EstimatorConfig, init: &Initial, s: &DVector<f64>) -> Result<Self> {
        let mut out = Self::new(robot, cfg, init, s)?;
        out.use_imu = false;
        Ok(out)
    }

    pub fn holding(&self) -> bool {
        self.holding
    }

    fn stance_constraints(&self, enc: &EncoderSample, contacts: &Contacts) -> Result<Vec<VelocityConstraint>> {
        let n = self.robot.chain.dofs();
        let w = self.cfg.swa.contact_velocity_weight;
        let mut out = Vec::new();
        for f in (0..2).filter(|f| contacts.feet[*f]) {
            let jac = self.robot.chain.mixed_jacobian(&enc.s, &self.pose, self.robot.feet[f])?;
            out.push(VelocityConstraint {
                a: jac.columns(0, 6).into_owned(),
                y: -(jac.columns(6, n) * &enc.sdot),
                weights: DVector::from_element(6, w),
            });
        }
        Ok(out)
    }
}

impl Estimator for Swa {
    fn predict(&mut self, imu: &ImuSample, dt: f64, _contacts: &Contacts, _enc: &EncoderSample) -> Result<()> {
        self.r_gyro *= so3::exp(&(imu.gyro * dt));
        if self.holding {
            self.pose.trans += self.v * dt;
        }
        Ok(())
    }

    fn correct(&mut self, imu: &ImuSample, enc: &EncoderSample, contacts: &Contacts) -> Result<()> {
        let r_imu = imu.orientation.unwrap_or(self.r_gyro);
        let previous = std::mem::replace(&mut self.previous_contacts, contacts.feet);
        if !contacts.any() {
            if self.use_imu {
                self.pose.rot = r_imu;
            }
            self.holding = true;
            return Ok(());
        }
        self.holding = false;
        // hand over to a foot as soon as it touches down; fall back to any
        // stance foot if the fixed one is already off the ground
        let fixed = self.odometry.fixed_frame;
        let fixed_down = (0..2).any(|f| contacts.feet[f] && self.robot.feet[f] == fixed);
        let touchdown = (0..2).find(|f| contacts.feet[*f] && !previous[*f] && self.robot.feet[*f] != fixed);
        let switch_to = match touchdown {
            Some(f) => Some(self.robot.feet[f]),
            None if fixed_down => None,
            None => (0..2).find(|f| contacts.feet[*f]).map(|f| self.robot.feet[f]),
        };
        let lo = self.odometry.update(&self.robot.chain, &enc.s, switch_to)?;

        let rot = if self.use_imu {
            let projected = project_yaw(&r_imu, &lo.rot)?;
            fuse_rotations(&lo.rot, &projected, self.cfg.swa.odometry_weight, self.cfg.swa.imu_weight)?
        } else {
            lo.rot
        };
        self.pose = Pose64::new(rot, lo.trans);

        let mut constraints = self.stance_constraints(enc, contacts)?;
        if self.use_imu {
            let mut a = DMatrix::zeros(3, 6);
            a.fixed_view_mut::<3, 3>(0, 3).fill_with_identity();
            let w = rot * imu.gyro;
            constraints.push(VelocityConstraint {
                a,
                y: DVector::from_column_slice(w.as_slice()),
                weights: DVector::from_element(3, self.cfg.swa.gyro_weight),
            });
        }
        let reg = DMatrix::identity(6, 6) * self.cfg.swa.regularization;
        let twist = fused_velocity(&constraints, &reg)?;
        self.v = Vector3::new(twist[0], twist[1], twist[2]);
        self.omega = Vector3::new(twist[3], twist[4], twist[5]);
        Ok(())
    }

    fn estimate(&self) -> BaseEstimate {
        let fixed = self.robot.feet.iter().position(|f| *f == self.odometry.fixed_frame).unwrap_or(0);
        BaseEstimate {
            pose: self.pose,
            v: self.v,
            extras: vec![
                ("omega_x".into(), self.omega.x),
                ("omega_y".into(), self.omega.y),
                ("omega_z".into(), self.omega.z),
                ("fixed_foot".into(), fixed as f64),
                ("holding".into(), if self.holding { 1.0 } else { 0.0 }),
            ],
        }
    }
}
