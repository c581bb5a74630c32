//! Floating-base estimators sharing one replay interface.

pub mod diligent;
pub mod human;
pub mod swa;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use lie_core::Pose64;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::config::EstimatorConfig;
use crate::error::{Error, Result};
use crate::robot::RobotModel;

pub use diligent::{Diligent, DiligentState, ErrorSide, TimeModel, Variant};
pub use human::HumanEkf;
pub use swa::Swa;

/// One IMU reading. The orientation is only used by estimators that fuse
/// an external attitude estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ImuSample {
    pub acc: Vector3<f64>,
    pub gyro: Vector3<f64>,
    pub orientation: Option<Matrix3<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderSample {
    pub s: DVector<f64>,
    pub sdot: DVector<f64>,
}

/// Contact flags for the two feet and their sole vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Contacts {
    pub feet: [bool; 2],
    pub vertices: [[bool; 4]; 2],
}

impl Contacts {
    /// Whole feet only; every vertex of a foot in contact follows its foot.
    pub fn from_feet(feet: [bool; 2]) -> Self {
        Self { feet, vertices: feet.map(|f| [f; 4]) }
    }

    pub fn any(&self) -> bool {
        self.feet.iter().any(|f| *f)
    }
}

/// What every estimator reports after a step.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseEstimate {
    pub pose: Pose64,
    /// World-frame linear velocity.
    pub v: Vector3<f64>,
    /// Estimator-specific values written as extra CSV columns.
    pub extras: Vec<(String, f64)>,
}

/// Known initial base state.
#[derive(Debug, Clone, PartialEq)]
pub struct Initial {
    pub pose: Pose64,
    pub v: Vector3<f64>,
    pub acc_bias: Vector3<f64>,
    pub gyro_bias: Vector3<f64>,
}

impl Initial {
    pub fn new(pose: Pose64, v: Vector3<f64>) -> Self {
        Self { pose, v, acc_bias: Vector3::zeros(), gyro_bias: Vector3::zeros() }
    }
}

pub trait Estimator: Send {
    /// Propagates over `dt` with the inputs held since the last step.
    fn predict(&mut self, imu: &ImuSample, dt: f64, contacts: &Contacts, enc: &EncoderSample) -> Result<()>;

    /// Fuses the measurements available at the new instant.
    fn correct(&mut self, imu: &ImuSample, enc: &EncoderSample, contacts: &Contacts) -> Result<()>;

    fn estimate(&self) -> BaseEstimate;

    /// Error covariance, for filters that keep one.
    fn covariance(&self) -> Option<&DMatrix<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Swa,
    DiligentKio,
    DiligentKioRie,
    CodiligentKio,
    CodiligentKioRie,
    HumanEkf,
    LeggedOdometry,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 7] = [
        EstimatorKind::Swa,
        EstimatorKind::DiligentKio,
        EstimatorKind::DiligentKioRie,
        EstimatorKind::CodiligentKio,
        EstimatorKind::CodiligentKioRie,
        EstimatorKind::HumanEkf,
        EstimatorKind::LeggedOdometry,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Swa => "swa",
            EstimatorKind::DiligentKio => "diligent-kio",
            EstimatorKind::DiligentKioRie => "diligent-kio-rie",
            EstimatorKind::CodiligentKio => "codiligent-kio",
            EstimatorKind::CodiligentKioRie => "codiligent-kio-rie",
            EstimatorKind::HumanEkf => "human-ekf",
            EstimatorKind::LeggedOdometry => "legged-odometry",
        }
    }

    /// Builds an estimator at a known initial state and joint configuration.
    pub fn build(
        &self,
        robot: Arc<RobotModel>,
        cfg: &EstimatorConfig,
        init: &Initial,
        enc: &EncoderSample,
    ) -> Result<Box<dyn Estimator>> {
        let diligent = |variant| -> Result<Box<dyn Estimator>> {
            Ok(Box::new(Diligent::new(robot.clone(), cfg.clone(), variant, init, &enc.s)?))
        };
        match self {
            EstimatorKind::DiligentKio => diligent(Variant::DILIGENT),
            EstimatorKind::DiligentKioRie => diligent(Variant::DILIGENT_RIE),
            EstimatorKind::CodiligentKio => diligent(Variant::CODILIGENT),
            EstimatorKind::CodiligentKioRie => diligent(Variant::CODILIGENT_RIE),
            EstimatorKind::HumanEkf => Ok(Box::new(HumanEkf::new(robot, cfg.clone(), init, &enc.s)?)),
            EstimatorKind::Swa => Ok(Box::new(Swa::new(robot, cfg.clone(), init, &enc.s)?)),
            EstimatorKind::LeggedOdometry => Ok(Box::new(Swa::legged_odometry(robot, cfg.clone(), init, &enc.s)?)),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown estimator '{s}'")))
    }
}

/// Std scaled up while a foot is in swing.
pub(crate) fn contact_scaled(std: f64, in_contact: bool, swing_scale: f64) -> f64 {
    if in_contact {
        std
    } else {
        std * swing_scale
    }
}

pub(crate) fn warn_long_step(dt: f64, max_dt: f64) {
    if dt > max_dt {
        log::warn!("step of {dt:.4} s exceeds {max_dt} s; the small-step motion model loses accuracy");
    }
}
