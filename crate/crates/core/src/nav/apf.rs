//! Artificial potential field controller: the target attracts, every scan
//! ray closer than `repulse_range` repels.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::odometry::{wrap_angle, RobotState};
use super::world::{ScanConfig, WorldModel2D};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApfConfig {
    pub repulse_gain: f64,
    pub repulse_range: f64,
    pub attract_gain: f64,
    pub v_max: f64,
    pub d_safe: f64,
    pub omega_gain: f64,
    pub dt: f64,
    pub scan: ScanConfig,
}

impl Default for ApfConfig {
    fn default() -> Self {
        Self {
            repulse_gain: 0.02,
            repulse_range: 1.5,
            attract_gain: 1.0,
            v_max: 0.5,
            d_safe: 0.8,
            omega_gain: 1.5,
            dt: 0.05,
            scan: ScanConfig::default(),
        }
    }
}

impl ApfConfig {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.repulse_gain,
            self.repulse_range,
            self.attract_gain,
            self.v_max,
            self.d_safe,
            self.omega_gain,
            self.dt,
            self.scan.fov,
            self.scan.max_range,
        ];
        if vals.iter().all(|v| v.is_finite() && *v > 0.0) && self.scan.n_rays >= 1 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "APF parameters must be positive: {self:?}"
            )))
        }
    }
}

/// Net world-frame force at `state` given ranges along `angles` (relative
/// to the heading).
pub fn apf_force(
    state: &RobotState,
    angles: &[f64],
    ranges: &[f64],
    world: &WorldModel2D,
    cfg: &ApfConfig,
) -> Vector2<f64> {
    let to_target = world.target_vec() - state.position;
    let mut force = if to_target.norm() > 0.0 {
        cfg.attract_gain * to_target.normalize()
    } else {
        Vector2::zeros()
    };
    for (a, &r) in angles.iter().zip(ranges) {
        if r < cfg.repulse_range {
            let th = state.heading + a;
            let mag = cfg.repulse_gain * (1.0 / r.max(1e-9) - 1.0 / cfg.repulse_range).max(0.0);
            force -= mag * Vector2::new(th.cos(), th.sin());
        }
    }
    force
}

/// Velocity command `(v, omega)` from one scan.
pub fn apf_step(
    state: &RobotState,
    angles: &[f64],
    ranges: &[f64],
    world: &WorldModel2D,
    cfg: &ApfConfig,
) -> (f64, f64) {
    assert_eq!(angles.len(), ranges.len(), "one angle per range");
    let f = apf_force(state, angles, ranges, world, cfg);
    let err = wrap_angle(f.y.atan2(f.x) - state.heading);
    let omega = cfg.omega_gain * err;
    let d_min = ranges.iter().copied().fold(f64::INFINITY, f64::min);
    let v = if err.abs() > std::f64::consts::FRAC_PI_2 {
        0.0
    } else {
        cfg.v_max * (d_min / cfg.d_safe).min(1.0)
    };
    (v, omega)
}
