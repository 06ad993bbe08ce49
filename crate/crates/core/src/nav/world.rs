//! 2D obstacle maps and the simulated rangefinder.

use std::path::Path;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::odometry::RobotState;
use crate::error::{Error, Result};
use crate::projection::Box3D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Obstacle {
    Segment { a: [f64; 2], b: [f64; 2] },
    Circle { center: [f64; 2], radius: f64 },
}

impl Obstacle {
    /// Distance from `p` to the obstacle's boundary; negative inside a circle.
    pub fn distance(&self, p: &Vector2<f64>) -> f64 {
        match *self {
            Obstacle::Segment { a, b } => {
                let (a, b) = (Vector2::from(a), Vector2::from(b));
                let ab = b - a;
                let len2 = ab.norm_squared();
                let t = if len2 == 0.0 {
                    0.0
                } else {
                    ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
                };
                (a + t * ab - p).norm()
            }
            Obstacle::Circle { center, radius } => (p - Vector2::from(center)).norm() - radius,
        }
    }

    /// Smallest `t >= 0` with `origin + t·dir` on the obstacle (`dir` is unit).
    pub fn ray_hit(&self, origin: &Vector2<f64>, dir: &Vector2<f64>) -> Option<f64> {
        match *self {
            Obstacle::Segment { a, b } => {
                let (a, b) = (Vector2::from(a), Vector2::from(b));
                let e = b - a;
                let cross = |u: &Vector2<f64>, v: &Vector2<f64>| u.x * v.y - u.y * v.x;
                let denom = cross(dir, &e);
                if denom == 0.0 {
                    return None;
                }
                let w = a - origin;
                let t = cross(&w, &e) / denom;
                let s = cross(&w, dir) / denom;
                (t >= 0.0 && (0.0..=1.0).contains(&s)).then_some(t)
            }
            Obstacle::Circle { center, radius } => {
                let oc = origin - Vector2::from(center);
                let b = oc.dot(dir);
                let c = oc.norm_squared() - radius * radius;
                if c <= 0.0 {
                    return Some(0.0);
                }
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let t = -b - disc.sqrt();
                (t >= 0.0).then_some(t)
            }
        }
    }
}

fn default_goal_radius() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldModel2D {
    pub obstacles: Vec<Obstacle>,
    pub target: [f64; 2],
    #[serde(default = "default_goal_radius")]
    pub goal_radius: f64,
}

impl WorldModel2D {
    pub fn new(obstacles: Vec<Obstacle>, target: [f64; 2], goal_radius: f64) -> Result<Self> {
        let w = Self {
            obstacles,
            target,
            goal_radius,
        };
        w.validate()?;
        Ok(w)
    }

    /// Uses the ground-plane projection of a box centroid (Z up) as the target.
    pub fn with_box_target(
        obstacles: Vec<Obstacle>,
        target: &Box3D,
        goal_radius: f64,
    ) -> Result<Self> {
        let c = target.centroid();
        Self::new(obstacles, [c.x, c.y], goal_radius)
    }

    pub fn validate(&self) -> Result<()> {
        if self.goal_radius.is_nan() || self.goal_radius <= 0.0 {
            return Err(Error::Config("goal_radius must be > 0".into()));
        }
        let t = self.target_vec();
        if let Some(o) = self.obstacles.iter().find(|o| o.distance(&t) <= 0.0) {
            return Err(Error::Config(format!(
                "target {:?} lies on or inside obstacle {o:?}",
                self.target
            )));
        }
        Ok(())
    }

    pub fn target_vec(&self) -> Vector2<f64> {
        Vector2::from(self.target)
    }

    /// Distance from `p` to the nearest obstacle boundary.
    pub fn clearance(&self, p: &Vector2<f64>) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let w: Self = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        w.validate()
            .map_err(|e| Error::parse(path, e.to_string()))?;
        Ok(w)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("world serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub fov: f64,
    pub n_rays: usize,
    pub max_range: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            fov: 1.5 * std::f64::consts::PI,
            n_rays: 181,
            max_range: 4.0,
        }
    }
}

/// Ray angles relative to the heading, evenly spread over `fov` and
/// symmetric about zero.
pub fn scan_angles(fov: f64, n_rays: usize) -> Vec<f64> {
    assert!(n_rays >= 1, "need at least one ray");
    if n_rays == 1 {
        return vec![0.0];
    }
    (0..n_rays)
        .map(|i| -0.5 * fov + fov * i as f64 / (n_rays - 1) as f64)
        .collect()
}

/// Ranges along rays at `angles` (relative to the heading), capped at `max_range`.
pub fn scan_at(
    state: &RobotState,
    world: &WorldModel2D,
    angles: &[f64],
    max_range: f64,
) -> Vec<f64> {
    angles
        .iter()
        .map(|a| {
            let th = state.heading + a;
            let dir = Vector2::new(th.cos(), th.sin());
            world
                .obstacles
                .iter()
                .filter_map(|o| o.ray_hit(&state.position, &dir))
                .fold(max_range, f64::min)
        })
        .collect()
}

pub fn rangefinder_scan(
    state: &RobotState,
    world: &WorldModel2D,
    fov: f64,
    n_rays: usize,
    max_range: f64,
) -> Vec<f64> {
    scan_at(state, world, &scan_angles(fov, n_rays), max_range)
}

/// Closed room with walls on the rectangle `[x0, x1] × [y0, y1]`.
pub fn room_walls(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Obstacle> {
    let c = [[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
    (0..4)
        .map(|i| Obstacle::Segment {
            a: c[i],
            b: c[(i + 1) % 4],
        })
        .collect()
}
