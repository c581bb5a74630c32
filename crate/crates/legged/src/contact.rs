//! Contact detection: Schmitt-trigger hysteresis on normal forces and the
//! decomposition of a foot wrench into forces on the four sole vertices.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hysteresis thresholds in newtons and debounce times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchmittParams {
    pub make_threshold: f64,
    pub break_threshold: f64,
    pub rise_time: f64,
    pub fall_time: f64,
}

impl SchmittParams {
    /// Whole-foot contact on a robot from the foot force-torque sensor.
    pub fn robot_foot() -> Self {
        Self { make_threshold: 150.0, break_threshold: 120.0, rise_time: 0.01, fall_time: 0.01 }
    }

    /// Single sole vertex on a robot.
    pub fn robot_vertex() -> Self {
        Self { make_threshold: 30.0, break_threshold: 15.0, rise_time: 0.01, fall_time: 0.01 }
    }

    /// Human sole vertex from shoe force sensing.
    pub fn human() -> Self {
        Self { make_threshold: 65.0, break_threshold: 45.0, rise_time: 0.02, fall_time: 0.02 }
    }

    /// `make > break >= 0` and non-negative debounce times.
    pub fn validate(&self) -> Result<()> {
        let ok = self.make_threshold > self.break_threshold
            && self.break_threshold >= 0.0
            && self.rise_time >= 0.0
            && self.fall_time >= 0.0
            && self.make_threshold.is_finite()
            && self.rise_time.is_finite()
            && self.fall_time.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Schmitt parameters {self:?}")))
        }
    }
}

/// Two-threshold contact switch with debounce timers.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmittTrigger {
    params: SchmittParams,
    state: bool,
    /// Time at which the pending transition condition started to hold.
    pending_since: Option<f64>,
    last_t: f64,
}

impl SchmittTrigger {
    pub fn new(params: SchmittParams, initial: bool) -> Self {
        Self { params, state: initial, pending_since: None, last_t: f64::NEG_INFINITY }
    }

    pub fn state(&self) -> bool {
        self.state
    }

    /// Feeds one force sample at time `t` and returns the contact state.
    /// Time must not go backwards.
    pub fn update(&mut self, t: f64, force: f64) -> Result<bool> {
        if !(t >= self.last_t) {
            return Err(Error::Input(format!("contact sample at t = {t} precedes t = {}", self.last_t)));
        }
        self.last_t = t;
        let (wants_switch, hold) = if self.state {
            (force < self.params.break_threshold, self.params.fall_time)
        } else {
            (force > self.params.make_threshold, self.params.rise_time)
        };
        if !wants_switch {
            self.pending_since = None;
            return Ok(self.state);
        }
        let since = *self.pending_since.get_or_insert(t);
        // tolerate sample-time round-off when comparing durations
        if t - since >= hold - 1e-9 {
            self.state = !self.state;
            self.pending_since = None;
        }
        Ok(self.state)
    }
}

/// Rectangular sole of length `l` (x) and width `d` (y), centred on the
/// sole frame. Vertex order: front-left, front-right, back-left, back-right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootGeometry {
    pub length: f64,
    pub width: f64,
}

impl FootGeometry {
    pub fn vertices(&self) -> [Vector2<f64>; 4] {
        let (l, d) = (self.length / 2.0, self.width / 2.0);
        [Vector2::new(l, d), Vector2::new(l, -d), Vector2::new(-l, d), Vector2::new(-l, -d)]
    }
}

/// Normal force below which a foot is considered unloaded.
pub const ZERO_FORCE_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexContactState {
    pub forces: [f64; 4],
    pub alphas: [f64; 4],
    /// Centre of pressure in the sole frame, clamped to the sole.
    pub cop: Vector2<f64>,
    pub in_contact: [bool; 4],
    /// Vertex carrying the largest force, if the foot is loaded.
    pub strongest: Option<usize>,
}

/// Splits a sole-frame wrench `(f, tau)` into non-negative vertex forces
/// reproducing its normal force and CoP.
pub fn decompose_wrench(wrench: &[f64; 6], geometry: &FootGeometry) -> VertexContactState {
    let fz = wrench[2];
    if fz < ZERO_FORCE_THRESHOLD {
        return VertexContactState {
            forces: [0.0; 4],
            alphas: [0.0; 4],
            cop: Vector2::zeros(),
            in_contact: [false; 4],
            strongest: None,
        };
    }
    let (l, d) = (geometry.length, geometry.width);
    let cop_x = (-wrench[4] / fz).clamp(-l / 2.0, l / 2.0);
    let cop_y = (wrench[3] / fz).clamp(-d / 2.0, d / 2.0);
    let (x, y) = (cop_x / l, cop_y / d);

    let lower = (-y - x).max(0.0);
    let upper = (0.5 - y).min(0.5 - x);
    let a4 = 0.5 * (lower + upper);
    let alphas = [a4 + x + y, 0.5 - a4 - y, 0.5 - a4 - x, a4].map(|a| a.max(0.0));
    let forces = alphas.map(|a| a * fz);
    let in_contact = forces.map(|f| f > 0.0);
    VertexContactState {
        forces,
        alphas,
        cop: Vector2::new(cop_x, cop_y),
        in_contact,
        strongest: strongest_in_contact(&forces, &in_contact),
    }
}

fn strongest_in_contact(forces: &[f64; 4], in_contact: &[bool; 4]) -> Option<usize> {
    (0..4).filter(|i| in_contact[*i]).max_by(|a, b| forces[*a].total_cmp(&forces[*b]))
}

/// Per-vertex contact states over a wrench stream, with hysteresis.
pub fn vertex_contact_states(
    stream: &[(f64, [f64; 6])],
    geometry: &FootGeometry,
    params: &SchmittParams,
) -> Result<Vec<VertexContactState>> {
    let mut triggers = [0; 4].map(|_| SchmittTrigger::new(*params, false));
    stream
        .iter()
        .map(|(t, w)| {
            let mut state = decompose_wrench(w, geometry);
            for (i, trig) in triggers.iter_mut().enumerate() {
                state.in_contact[i] = trig.update(*t, state.forces[i])?;
            }
            state.strongest = strongest_in_contact(&state.forces, &state.in_contact);
            Ok(state)
        })
        .collect()
}
