//! Runs an estimator over a sensor log.

use std::sync::Arc;

use lie_core::groups::{rotation_to_rpy, rpy_to_rotation};
use lie_core::Pose64;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::EstimatorConfig;
use crate::contact::{vertex_contact_states, SchmittTrigger};
use crate::error::{Error, Result};
use crate::estimators::{Contacts, EncoderSample, EstimatorKind, ImuSample, Initial};
use crate::io::{frames, Frame, SensorRecord, TrajectoryRow};
use crate::robot::RobotModel;

/// A log split into complete instants with their contact states.
#[derive(Debug, Clone)]
pub struct Replay {
    pub t: Vec<f64>,
    pub imu: Vec<ImuSample>,
    pub encoders: Vec<EncoderSample>,
    pub contacts: Vec<Contacts>,
}

/// Foot contacts come from logged contact records when present and from
/// Schmitt triggers on the normal forces otherwise. Vertex contacts come
/// from the wrench decomposition and never outlast their foot.
pub fn detect_contacts(frames: &[Frame], cfg: &EstimatorConfig) -> Result<Vec<Contacts>> {
    let geometry = crate::contact::FootGeometry { length: cfg.robot.foot_length, width: cfg.robot.foot_width };
    let mut out = vec![Contacts::default(); frames.len()];
    for f in 0..2 {
        let stream: Vec<(f64, [f64; 6])> =
            frames.iter().map(|fr| (fr.t, fr.wrenches.map(|w| w[f]).unwrap_or([0.0; 6]))).collect();
        let vertices = vertex_contact_states(&stream, &geometry, &cfg.robot.vertex_contact)?;
        let mut trigger = SchmittTrigger::new(cfg.robot.foot_contact, false);
        for (k, fr) in frames.iter().enumerate() {
            let from_force = trigger.update(fr.t, stream[k].1[2])?;
            let foot = match fr.contacts {
                Some(c) => c[f],
                None => from_force,
            };
            out[k].feet[f] = foot;
            out[k].vertices[f] = if fr.wrenches.is_some() { vertices[k].in_contact.map(|v| v && foot) } else { [foot; 4] };
        }
    }
    Ok(out)
}

impl Replay {
    /// Keeps the instants that carry both IMU and encoder readings.
    pub fn from_records(records: &[SensorRecord], cfg: &EstimatorConfig) -> Result<Self> {
        let frames: Vec<Frame> = frames(records)?.into_iter().filter(|f| f.imu.is_some() && f.encoders.is_some()).collect();
        if frames.is_empty() {
            return Err(Error::Input("log has no instant with both IMU and encoder readings".into()));
        }
        let contacts = detect_contacts(&frames, cfg)?;
        Ok(Self {
            t: frames.iter().map(|f| f.t).collect(),
            imu: frames.iter().map(|f| f.imu.clone().unwrap()).collect(),
            encoders: frames.iter().map(|f| f.encoders.clone().unwrap()).collect(),
            contacts,
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Builds the estimator at the first instant, corrects there, then
    /// predicts with the inputs of instant `k - 1` and corrects with those
    /// of instant `k`. One row per instant.
    pub fn run(&self, kind: EstimatorKind, robot: Arc<RobotModel>, cfg: &EstimatorConfig, init: &Initial) -> Result<Vec<TrajectoryRow>> {
        let dofs = robot.chain.dofs();
        if let Some(bad) = self.encoders.iter().find(|e| e.s.len() != dofs) {
            return Err(Error::Input(format!("encoder record has {} joints, the chain has {dofs}", bad.s.len())));
        }
        let mut est = kind.build(robot, cfg, init, &self.encoders[0])?;
        est.correct(&self.imu[0], &self.encoders[0], &self.contacts[0])?;
        let mut rows = Vec::with_capacity(self.len());
        rows.push(TrajectoryRow::from_estimate(self.t[0], est.estimate()));
        for k in 1..self.len() {
            let dt = self.t[k] - self.t[k - 1];
            est.predict(&self.imu[k - 1], dt, &self.contacts[k - 1], &self.encoders[k - 1])?;
            est.correct(&self.imu[k], &self.encoders[k], &self.contacts[k])?;
            let e = est.estimate();
            if !e.pose.trans.iter().chain(e.v.iter()).all(|x| x.is_finite()) {
                return Err(Error::Numeric(format!("{kind} diverged at t = {}", self.t[k])));
            }
            rows.push(TrajectoryRow::from_estimate(self.t[k], e));
        }
        Ok(rows)
    }
}

/// Initial state with roll and pitch errors drawn from
/// `U(-max_tilt, max_tilt)` and velocity errors from `U(-max_vel, max_vel)`.
pub fn perturb_initial(init: &Initial, seed: u64, max_tilt_deg: f64, max_vel: f64) -> Result<Initial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (roll, pitch, yaw) = rotation_to_rpy(&init.pose.rot)?;
    let tilt = max_tilt_deg.to_radians();
    let mut draw = |a: f64| if a > 0.0 { rng.random_range(-a..a) } else { 0.0 };
    let rot = rpy_to_rotation(roll + draw(tilt), pitch + draw(tilt), yaw);
    let dv = Vector3::new(draw(max_vel), draw(max_vel), draw(max_vel));
    Ok(Initial { pose: Pose64::new(rot, init.pose.trans), v: init.v + dv, ..init.clone() })
}
