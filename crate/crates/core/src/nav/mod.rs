//! Desk-scale wheelchair navigation: encoder odometry, a simulated
//! rangefinder, and a potential-field controller steering toward a detected
//! object.

mod apf;
mod odometry;
mod scenarios;
mod world;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use apf::{apf_force, apf_step, ApfConfig};
pub use odometry::{odometry_update, wrap_angle, RobotState};
pub use scenarios::{column_scenarios, random_world, Scenario};
pub use world::{
    rangefinder_scan, room_walls, scan_angles, scan_at, Obstacle, ScanConfig, WorldModel2D,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Reached,
    Timeout,
    Collision,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Reached => "reached",
            Outcome::Timeout => "timeout",
            Outcome::Collision => "collision",
        })
    }
}

/// One simulation record: the pose at time `t` and the command issued there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
    pub d_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Last record is the final pose with a zero command.
    pub steps: Vec<TrajectoryStep>,
    pub outcome: Outcome,
    /// Smallest center-to-obstacle distance seen along the run.
    pub min_clearance: f64,
}

impl Trajectory {
    /// Number of control steps taken.
    pub fn step_count(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn path_length(&self) -> f64 {
        self.steps
            .windows(2)
            .map(|w| ((w[1].x - w[0].x).powi(2) + (w[1].y - w[0].y).powi(2)).sqrt())
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,theta,v,omega,d_min\n");
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.t, s.x, s.y, s.theta, s.v, s.omega, s.d_min
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Closed-loop simulation: scan, command, convert to wheel ticks, integrate
/// odometry. Stops on reaching the goal, on collision, or after `max_steps`.
pub fn run_navigation(
    world: &WorldModel2D,
    start: &RobotState,
    cfg: &ApfConfig,
    max_steps: usize,
) -> Result<Trajectory> {
    if max_steps == 0 {
        return Err(Error::Config("max_steps must be > 0".into()));
    }
    start.validate()?;
    cfg.validate()?;
    world.validate()?;
    let angles = scan_angles(cfg.scan.fov, cfg.scan.n_rays);
    let target = world.target_vec();
    let mut state = *start;
    let mut steps = Vec::new();
    let mut min_clearance = world.clearance(&state.position);
    let record = |state: &RobotState, k: usize, v: f64, omega: f64, d_min: f64| TrajectoryStep {
        t: k as f64 * cfg.dt,
        x: state.position.x,
        y: state.position.y,
        theta: state.heading,
        v,
        omega,
        d_min,
    };

    let mut k = 0;
    let outcome = loop {
        let ranges = scan_at(&state, world, &angles, cfg.scan.max_range);
        let d_min = ranges.iter().copied().fold(f64::INFINITY, f64::min);
        if world.clearance(&state.position) < state.body_radius {
            steps.push(record(&state, k, 0.0, 0.0, d_min));
            break Outcome::Collision;
        }
        if (state.position - target).norm() <= world.goal_radius {
            steps.push(record(&state, k, 0.0, 0.0, d_min));
            break Outcome::Reached;
        }
        if k == max_steps {
            steps.push(record(&state, k, 0.0, 0.0, d_min));
            break Outcome::Timeout;
        }
        let (v, omega) = apf_step(&state, &angles, &ranges, world, cfg);
        steps.push(record(&state, k, v, omega, d_min));
        let (dl, dr) = state.ticks_for(v, omega, cfg.dt);
        state = odometry_update(&state, dl, dr);
        min_clearance = min_clearance.min(world.clearance(&state.position));
        k += 1;
    };
    Ok(Trajectory {
        steps,
        outcome,
        min_clearance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_run_in_empty_world() {
        let w = WorldModel2D::new(vec![], [3.0, 0.0], 0.1).unwrap();
        let t = run_navigation(
            &w,
            &RobotState::at(0.0, 0.0, 0.0),
            &ApfConfig::default(),
            1000,
        )
        .unwrap();
        assert_eq!(t.outcome, Outcome::Reached);
        let len = t.path_length();
        assert!((len - 3.0).abs() <= 0.05 * 3.0, "path length {len}");
    }

    #[test]
    fn already_at_goal() {
        let w = WorldModel2D::new(vec![], [0.05, 0.0], 0.1).unwrap();
        let t = run_navigation(
            &w,
            &RobotState::at(0.0, 0.0, 0.0),
            &ApfConfig::default(),
            10,
        )
        .unwrap();
        assert_eq!(t.outcome, Outcome::Reached);
        assert_eq!(t.step_count(), 0);
    }

    #[test]
    fn timeout_and_collision_outcomes() {
        let w = WorldModel2D::new(vec![], [30.0, 0.0], 0.1).unwrap();
        let t =
            run_navigation(&w, &RobotState::at(0.0, 0.0, 0.0), &ApfConfig::default(), 5).unwrap();
        assert_eq!(t.outcome, Outcome::Timeout);
        assert_eq!(t.step_count(), 5);
        let w = WorldModel2D::new(
            vec![Obstacle::Circle {
                center: [0.2, 0.0],
                radius: 0.1,
            }],
            [3.0, 0.0],
            0.1,
        )
        .unwrap();
        let t =
            run_navigation(&w, &RobotState::at(0.0, 0.0, 0.0), &ApfConfig::default(), 5).unwrap();
        assert_eq!(t.outcome, Outcome::Collision);
        assert!(
            run_navigation(&w, &RobotState::at(0.0, 0.0, 0.0), &ApfConfig::default(), 0).is_err()
        );
    }

    #[test]
    fn csv_has_one_row_per_record() {
        let w = WorldModel2D::new(vec![], [1.0, 0.0], 0.1).unwrap();
        let t = run_navigation(
            &w,
            &RobotState::at(0.0, 0.0, 0.0),
            &ApfConfig::default(),
            1000,
        )
        .unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), t.steps.len() + 1);
        assert!(csv.starts_with("t,x,y,theta,v,omega,d_min"));
    }

    #[test]
    fn column_scenarios_reach_goal() {
        for sc in column_scenarios() {
            let t = run_navigation(&sc.world, &sc.start, &ApfConfig::default(), 4000).unwrap();
            assert_eq!(t.outcome, Outcome::Reached, "{}", sc.name);
            assert!(t.min_clearance > sc.start.body_radius, "{}", sc.name);
        }
    }
}
