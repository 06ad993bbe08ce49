//! Differential-drive kinematics driven by wheel encoder ticks.

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Pose and drive geometry of a differential-drive robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub position: Vector2<f64>,
    pub heading: f64,
    pub wheel_radius: f64,
    /// Track width between the wheels.
    pub wheel_base: f64,
    pub tick_per_rev: f64,
    /// Radius of the circular footprint, used for collision checks.
    pub body_radius: f64,
}

impl RobotState {
    /// Wheelchair-sized defaults at the given pose.
    pub fn at(x: f64, y: f64, heading: f64) -> Self {
        Self {
            position: Vector2::new(x, y),
            heading,
            wheel_radius: 0.17,
            wheel_base: 0.56,
            tick_per_rev: 4096.0,
            body_radius: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [
            self.wheel_radius,
            self.wheel_base,
            self.tick_per_rev,
            self.body_radius,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0)
            && self.position.iter().all(|v| v.is_finite())
            && self.heading.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid robot state {self:?}")))
        }
    }

    fn ticks_to_meters(&self, ticks: f64) -> f64 {
        2.0 * PI * self.wheel_radius * ticks / self.tick_per_rev
    }

    /// Encoder deltas `(left, right)` produced by holding `(v, omega)` for `dt`.
    pub fn ticks_for(&self, v: f64, omega: f64, dt: f64) -> (f64, f64) {
        let per_meter = self.tick_per_rev / (2.0 * PI * self.wheel_radius);
        let half = omega * self.wheel_base / 2.0;
        ((v - half) * dt * per_meter, (v + half) * dt * per_meter)
    }
}

/// Advances the pose by one pair of encoder deltas, treating the motion as a
/// circular arc.
pub fn odometry_update(state: &RobotState, dticks_left: f64, dticks_right: f64) -> RobotState {
    let s_l = state.ticks_to_meters(dticks_left);
    let s_r = state.ticks_to_meters(dticks_right);
    let s = 0.5 * (s_l + s_r);
    let dtheta = (s_r - s_l) / state.wheel_base;
    let half = 0.5 * dtheta;
    // chord of the arc: 2 (s / dθ) sin(dθ/2), or s on a straight line
    let chord = if half == 0.0 {
        s
    } else {
        s * half.sin() / half
    };
    let mid = state.heading + half;
    RobotState {
        position: state.position + chord * Vector2::new(mid.cos(), mid.sin()),
        heading: wrap_angle(state.heading + dtheta),
        ..*state
    }
}
