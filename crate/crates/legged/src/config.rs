//! Noise, prior and robot configuration shared by the estimators.
//!
//! Field names follow the noise and prior tables of the method; every
//! field has a default so a partial JSON file only overrides what it lists.
//! Standard deviations are per sample for the discrete filters and are used
//! as continuous-time densities by the continuous-discrete ones.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::contact::SchmittParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImuNoise {
    /// m/s^2
    pub accelerometer: f64,
    /// rad/s
    pub gyroscope: f64,
    /// m/s^2
    pub accelerometer_bias: f64,
    /// rad/s
    pub gyroscope_bias: f64,
}

impl Default for ImuNoise {
    fn default() -> Self {
        Self { accelerometer: 0.09, gyroscope: 0.01, accelerometer_bias: 0.01, gyroscope_bias: 0.001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KinematicNoise {
    /// m/s
    pub foot_linear_velocity: f64,
    /// rad/s
    pub foot_angular_velocity: f64,
    pub encoder_deg: f64,
    /// Multiplies the foot-velocity stds while a foot is in swing.
    pub swing_scale: f64,
}

impl Default for KinematicNoise {
    fn default() -> Self {
        Self { foot_linear_velocity: 0.009, foot_angular_velocity: 0.004, encoder_deg: 0.1, swing_scale: 1e3 }
    }
}

impl KinematicNoise {
    pub fn encoder(&self) -> f64 {
        self.encoder_deg.to_radians()
    }
}

/// Initial standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorStd {
    /// Base and feet position, m.
    pub position: f64,
    /// Base and feet orientation.
    pub orientation_deg: f64,
    /// m/s
    pub velocity: f64,
    pub accelerometer_bias: f64,
    pub gyroscope_bias: f64,
    /// Base angular velocity for filters that carry it, rad/s.
    pub angular_velocity: f64,
    /// Landmark pose prior when augmenting without an explicit covariance.
    pub landmark_position: f64,
    pub landmark_orientation_deg: f64,
}

impl Default for PriorStd {
    fn default() -> Self {
        Self {
            position: 0.01,
            orientation_deg: 10.0,
            velocity: 0.5,
            accelerometer_bias: 0.01,
            gyroscope_bias: 0.002,
            angular_velocity: 0.5,
            landmark_position: 0.05,
            landmark_orientation_deg: 5.0,
        }
    }
}

impl PriorStd {
    pub fn orientation(&self) -> f64 {
        self.orientation_deg.to_radians()
    }
}

/// How the human filter uses a known terrain height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerrainUpdate {
    Off,
    /// Left-invariant observation, with covariance transport around it.
    LeftInvariant,
    /// Group-valued observation on T(3); no transport needed.
    NonInvariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HumanNoise {
    pub gyroscope: f64,
    pub foot_linear_velocity: f64,
    pub foot_angular_velocity: f64,
    pub base_linear_velocity: f64,
    pub base_angular_velocity: f64,
    /// m
    pub terrain_height: f64,
    /// Std of the unconstrained horizontal components of a terrain point, m.
    pub terrain_planar: f64,
    /// rad
    pub joint_position: f64,
    pub zupt_linear: f64,
    pub zupt_angular: f64,
    /// Contact plane orientation, rad.
    pub plane_orientation: f64,
    pub terrain_update: TerrainUpdate,
    /// Height of the flat floor, m.
    pub floor_height: f64,
    pub plane_update: bool,
    pub gyro_update: bool,
    pub zupt_update: bool,
}

impl Default for HumanNoise {
    fn default() -> Self {
        Self {
            gyroscope: 0.01,
            foot_linear_velocity: 1e-3,
            foot_angular_velocity: 1e-3,
            base_linear_velocity: 10.0,
            base_angular_velocity: 10.0,
            terrain_height: 0.03,
            terrain_planar: 100.0,
            joint_position: 0.00872,
            zupt_linear: 0.01,
            zupt_angular: 0.05,
            plane_orientation: 0.01,
            terrain_update: TerrainUpdate::NonInvariant,
            floor_height: 0.0,
            plane_update: false,
            gyro_update: true,
            zupt_update: true,
        }
    }
}

/// Weights of the simple weighted-averaging estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwaConfig {
    /// Weight of the legged-odometry rotation against the IMU rotation.
    pub odometry_weight: f64,
    pub imu_weight: f64,
    /// Weight of the contact rows in the velocity least squares.
    pub contact_velocity_weight: f64,
    /// Weight of the gyroscope rows in the velocity least squares.
    pub gyro_weight: f64,
    /// Diagonal regularization of the velocity least squares.
    pub regularization: f64,
}

impl Default for SwaConfig {
    fn default() -> Self {
        Self { odometry_weight: 0.5, imu_weight: 0.5, contact_velocity_weight: 1.0, gyro_weight: 1.0, regularization: 1e-6 }
    }
}

/// Robot-specific names and contact detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    /// Left and right sole frames. Vertex frames are `<sole>_v1` .. `<sole>_v4`.
    pub feet: [String; 2],
    pub foot_length: f64,
    pub foot_width: f64,
    pub foot_contact: SchmittParams,
    pub vertex_contact: SchmittParams,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            feet: ["l_sole".into(), "r_sole".into()],
            foot_length: 0.2,
            foot_width: 0.1,
            foot_contact: SchmittParams::robot_foot(),
            vertex_contact: SchmittParams::robot_vertex(),
        }
    }
}

/// Everything an estimator run needs besides the chain and the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub imu: ImuNoise,
    pub kinematics: KinematicNoise,
    pub prior: PriorStd,
    pub human: HumanNoise,
    pub swa: SwaConfig,
    pub robot: RobotConfig,
    pub gravity: [f64; 3],
    /// Integrate the mean with the exact `X exp(Omega)` instead of the
    /// small-step form.
    pub full_mean_propagation: bool,
    /// Steps longer than this log a warning, s.
    pub max_dt: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            imu: ImuNoise::default(),
            kinematics: KinematicNoise::default(),
            prior: PriorStd::default(),
            human: HumanNoise::default(),
            swa: SwaConfig::default(),
            robot: RobotConfig::default(),
            gravity: [0.0, 0.0, -9.80665],
            full_mean_propagation: false,
            max_dt: 0.02,
        }
    }
}

impl EstimatorConfig {
    pub fn gravity(&self) -> Vector3<f64> {
        Vector3::from(self.gravity)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// All standard deviations must be finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("imu.accelerometer", self.imu.accelerometer),
            ("imu.gyroscope", self.imu.gyroscope),
            ("imu.accelerometer_bias", self.imu.accelerometer_bias),
            ("imu.gyroscope_bias", self.imu.gyroscope_bias),
            ("kinematics.foot_linear_velocity", self.kinematics.foot_linear_velocity),
            ("kinematics.foot_angular_velocity", self.kinematics.foot_angular_velocity),
            ("kinematics.encoder_deg", self.kinematics.encoder_deg),
            ("kinematics.swing_scale", self.kinematics.swing_scale),
            ("prior.position", self.prior.position),
            ("prior.orientation_deg", self.prior.orientation_deg),
            ("prior.velocity", self.prior.velocity),
            ("prior.accelerometer_bias", self.prior.accelerometer_bias),
            ("prior.gyroscope_bias", self.prior.gyroscope_bias),
            ("prior.angular_velocity", self.prior.angular_velocity),
            ("prior.landmark_position", self.prior.landmark_position),
            ("prior.landmark_orientation_deg", self.prior.landmark_orientation_deg),
            ("human.gyroscope", self.human.gyroscope),
            ("human.foot_linear_velocity", self.human.foot_linear_velocity),
            ("human.foot_angular_velocity", self.human.foot_angular_velocity),
            ("human.base_linear_velocity", self.human.base_linear_velocity),
            ("human.base_angular_velocity", self.human.base_angular_velocity),
            ("human.terrain_height", self.human.terrain_height),
            ("human.terrain_planar", self.human.terrain_planar),
            ("human.joint_position", self.human.joint_position),
            ("human.zupt_linear", self.human.zupt_linear),
            ("human.zupt_angular", self.human.zupt_angular),
            ("human.plane_orientation", self.human.plane_orientation),
            ("swa.odometry_weight", self.swa.odometry_weight),
            ("swa.imu_weight", self.swa.imu_weight),
            ("swa.contact_velocity_weight", self.swa.contact_velocity_weight),
            ("swa.gyro_weight", self.swa.gyro_weight),
            ("swa.regularization", self.swa.regularization),
            ("robot.foot_length", self.robot.foot_length),
            ("robot.foot_width", self.robot.foot_width),
        ];
        for (name, value) in named {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {value}")));
            }
        }
        if self.swa.odometry_weight + self.swa.imu_weight <= 0.0 {
            return Err(Error::Config("swa weights sum to zero".into()));
        }
        if !(self.max_dt > 0.0) {
            return Err(Error::Config("max_dt must be positive".into()));
        }
        if self.gravity.iter().any(|g| !g.is_finite()) {
            return Err(Error::Config("gravity must be finite".into()));
        }
        self.robot.foot_contact.validate()?;
        self.robot.vertex_contact.validate()?;
        Ok(())
    }
}
