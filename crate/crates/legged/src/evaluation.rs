//! Absolute trajectory error and relative pose error on SE(3), in the left
//! or right invariant sense.
//!
//! Aggregates are root mean squared norms so that the units stay degrees and
//! metres; the mean squared values are reported alongside.

use lie_core::groups::so3;
use lie_core::Pose64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::TrajectoryRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Errors `X_hat^-1 X`, invariant to a common change of world frame.
    #[default]
    Left,
    /// Errors `X X_hat^-1`, invariant to a common change of body frame.
    Right,
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            _ => Err(Error::Config(format!("side must be 'left' or 'right', got '{s}'"))),
        }
    }
}

/// Rotation errors in degrees, the rest in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Errors {
    pub rot: f64,
    pub pos: f64,
    pub vel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ate_rot: f64,
    pub ate_pos: f64,
    pub ate_vel: f64,
    pub rpe_rot: f64,
    pub rpe_pos: f64,
    pub samples: usize,
    pub rpe_interval: usize,
    pub side: Side,
    /// The same metrics before taking the square root.
    pub mean_squared: MeanSquared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSquared {
    pub ate_rot: f64,
    pub ate_pos: f64,
    pub ate_vel: f64,
    pub rpe_rot: f64,
    pub rpe_pos: f64,
}

fn check_lengths(truth: &[TrajectoryRow], estimate: &[TrajectoryRow]) -> Result<()> {
    if truth.len() != estimate.len() {
        return Err(Error::Input(format!("trajectory lengths differ: {} vs {}", truth.len(), estimate.len())));
    }
    if truth.is_empty() {
        return Err(Error::Input("empty trajectory".into()));
    }
    Ok(())
}

fn rot_deg(r: &nalgebra::Matrix3<f64>) -> Result<f64> {
    Ok(so3::log(r)?.norm().to_degrees())
}

/// Per-sample squared errors `(rot, pos, vel)`.
fn ate_squares(truth: &[TrajectoryRow], estimate: &[TrajectoryRow], side: Side) -> Result<Vec<[f64; 3]>> {
    check_lengths(truth, estimate)?;
    truth
        .iter()
        .zip(estimate)
        .map(|(x, e)| {
            let (r, rh) = (x.pose.rot, e.pose.rot);
            let (rot, pos, vel) = match side {
                Side::Left => {
                    let rt = rh.transpose();
                    (rt * r, rt * (x.pose.trans - e.pose.trans), rt * (x.v - e.v))
                }
                Side::Right => {
                    let dr = r * rh.transpose();
                    (dr, x.pose.trans - dr * e.pose.trans, x.v - dr * e.v)
                }
            };
            Ok([rot_deg(&rot)?.powi(2), pos.norm_squared(), vel.norm_squared()])
        })
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean squared absolute errors.
pub fn ate_mean_squared(truth: &[TrajectoryRow], estimate: &[TrajectoryRow], side: Side) -> Result<Errors> {
    let sq = ate_squares(truth, estimate, side)?;
    Ok(Errors {
        rot: mean(sq.iter().map(|s| s[0])),
        pos: mean(sq.iter().map(|s| s[1])),
        vel: mean(sq.iter().map(|s| s[2])),
    })
}

/// Root mean squared absolute errors.
pub fn ate(truth: &[TrajectoryRow], estimate: &[TrajectoryRow], side: Side) -> Result<Errors> {
    let ms = ate_mean_squared(truth, estimate, side)?;
    Ok(Errors { rot: ms.rot.sqrt(), pos: ms.pos.sqrt(), vel: ms.vel.sqrt() })
}

/// Relative error over `interval` samples at instant `k`.
fn relative_error(truth: &[TrajectoryRow], estimate: &[TrajectoryRow], k: usize, interval: usize, side: Side) -> Pose64 {
    let (h0, h1) = (&truth[k].pose, &truth[k + interval].pose);
    let (e0, e1) = (&estimate[k].pose, &estimate[k + interval].pose);
    match side {
        Side::Left => (e0.inverse() * *e1).inverse() * (h0.inverse() * *h1),
        Side::Right => (*h1 * h0.inverse()) * (*e1 * e0.inverse()).inverse(),
    }
}

/// Mean squared relative errors; `vel` is unused and zero.
pub fn rpe_mean_squared(truth: &[TrajectoryRow], estimate: &[TrajectoryRow], interval: usize, side: Side) -> Result<Errors> {
    check_lengths(truth, estimate)?;
    if interval == 0 || truth.len() <= interval {
        return Err(Error::Input(format!("rpe interval {interval} needs 1 <= e < {}", truth.len())));
    }
    let n = truth.len() - interval;
    let mut rot = Vec::with_capacity(n);
    let mut pos = Vec::with_capacity(n);
    for k in 0..n {
        let e = relative_error(truth, estimate, k, interval, side);
        rot.push(rot_deg(&e.rot)?.powi(2));
        pos.push(e.trans.norm_squared());
    }
    Ok(Errors { rot: mean(rot.into_iter()), pos: mean(pos.into_iter()), vel: 0.0 })
}

/// Root mean squared relative errors `(rot, pos)`.
pub fn rpe(truth: &[TrajectoryRow], estimate: &[TrajectoryRow], interval: usize, side: Side) -> Result<(f64, f64)> {
    let ms = rpe_mean_squared(truth, estimate, interval, side)?;
    Ok((ms.rot.sqrt(), ms.pos.sqrt()))
}

/// Moves the estimate rigidly so that its first pose equals the first true
/// pose. Relative increments are unchanged.
pub fn align_first_pose(truth: &[TrajectoryRow], estimate: &[TrajectoryRow]) -> Result<Vec<TrajectoryRow>> {
    let (first_truth, first_est) = match (truth.first(), estimate.first()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Input("empty trajectory".into())),
    };
    let offset = first_truth.pose * first_est.pose.inverse();
    Ok(estimate
        .iter()
        .map(|row| TrajectoryRow { pose: offset * row.pose, v: offset.rot * row.v, ..row.clone() })
        .collect())
}

pub fn evaluate(truth: &[TrajectoryRow], estimate: &[TrajectoryRow], interval: usize, side: Side) -> Result<MetricsReport> {
    let a = ate_mean_squared(truth, estimate, side)?;
    let r = rpe_mean_squared(truth, estimate, interval, side)?;
    Ok(MetricsReport {
        ate_rot: a.rot.sqrt(),
        ate_pos: a.pos.sqrt(),
        ate_vel: a.vel.sqrt(),
        rpe_rot: r.rot.sqrt(),
        rpe_pos: r.pos.sqrt(),
        samples: truth.len(),
        rpe_interval: interval,
        side,
        mean_squared: MeanSquared { ate_rot: a.rot, ate_pos: a.pos, ate_vel: a.vel, rpe_rot: r.rot, rpe_pos: r.pos },
    })
}
