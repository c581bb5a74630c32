//! A kinematic chain together with the frames the estimators care about.

use crate::config::RobotConfig;
use crate::contact::FootGeometry;
use crate::error::Result;
use crate::kinematics::{FrameId, KinematicChain};

/// Foot index: left is 0, right is 1.
pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

#[derive(Debug, Clone)]
pub struct RobotModel {
    pub chain: KinematicChain,
    /// Sole frames, left then right.
    pub feet: [FrameId; 2],
    /// Sole vertices per foot, in [`FootGeometry::vertices`] order.
    pub vertices: [[FrameId; 4]; 2],
    pub geometry: FootGeometry,
}

impl RobotModel {
    pub fn new(chain: KinematicChain, cfg: &RobotConfig) -> Result<Self> {
        let mut feet = [0; 2];
        let mut vertices = [[0; 4]; 2];
        for (f, name) in cfg.feet.iter().enumerate() {
            feet[f] = chain.frame(name)?;
            for (v, slot) in vertices[f].iter_mut().enumerate() {
                *slot = chain.frame(&format!("{name}_v{}", v + 1))?;
            }
        }
        let geometry = FootGeometry { length: cfg.foot_length, width: cfg.foot_width };
        Ok(Self { chain, feet, vertices, geometry })
    }

    pub fn base(&self) -> FrameId {
        self.chain.base()
    }
}
