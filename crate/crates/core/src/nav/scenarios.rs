//! Navigation fixtures: a corridor approach with and without a central
//! column, and seeded random rooms.

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::odometry::RobotState;
use super::world::{room_walls, Obstacle, WorldModel2D};

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub world: WorldModel2D,
    pub start: RobotState,
}

/// Corridor `[0, 10] × [-2.6, 2.6]`: open approach, a column on the straight
/// line to the target, and a target offset to one side behind the column.
pub fn column_scenarios() -> Vec<Scenario> {
    let walls = || room_walls(0.0, -2.6, 10.0, 2.6);
    let column = Obstacle::Circle {
        center: [5.0, 0.0],
        radius: 0.25,
    };
    let make = |name: &str, extra: Vec<Obstacle>, target: [f64; 2]| {
        let mut obstacles = walls();
        obstacles.extend(extra);
        Scenario {
            name: name.into(),
            world: WorldModel2D::new(obstacles, target, 0.1).expect("fixture is valid"),
            start: RobotState::at(1.5, 0.0, 0.0),
        }
    };
    vec![
        make("open approach", vec![], [8.5, 0.0]),
        make("central column", vec![column], [8.5, 0.0]),
        make("offset target", vec![column], [8.5, 1.2]),
    ]
}

/// A walled 12 m × 8 m room with one to three columns. Every gap between
/// obstacles is at least `2 (body_radius + d_safe)`, and start and target
/// keep `body_radius + d_safe` from every obstacle.
pub fn random_world(seed: u64, body_radius: f64, d_safe: f64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (12.0f64, 8.0f64);
    let gap = 2.0 * (body_radius + d_safe);
    let keep = body_radius + d_safe;
    loop {
        let start = Vector2::new(rng.random_range(1.2..2.5), rng.random_range(1.2..h - 1.2));
        let target = Vector2::new(
            rng.random_range(w - 2.5..w - 1.2),
            rng.random_range(1.2..h - 1.2),
        );
        let n = rng.random_range(1..=3);
        let mut columns: Vec<(Vector2<f64>, f64)> = Vec::new();
        for _ in 0..200 {
            if columns.len() == n {
                break;
            }
            let r = rng.random_range(0.2..0.5);
            let c = Vector2::new(rng.random_range(3.0..w - 3.0), rng.random_range(0.0..h));
            let wall_gap = (c.x - r).min(w - c.x - r).min(c.y - r).min(h - c.y - r);
            let ok = wall_gap >= gap
                && columns.iter().all(|(o, ro)| (c - o).norm() - r - ro >= gap)
                && (c - start).norm() - r >= keep
                && (c - target).norm() - r >= keep;
            if ok {
                columns.push((c, r));
            }
        }
        if columns.len() != n {
            continue;
        }
        let mut obstacles = room_walls(0.0, 0.0, w, h);
        obstacles.extend(columns.iter().map(|(c, r)| Obstacle::Circle {
            center: [c.x, c.y],
            radius: *r,
        }));
        let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let world = WorldModel2D::new(obstacles, [target.x, target.y], 0.1)
            .expect("sampled world is valid");
        let mut start_state = RobotState::at(start.x, start.y, heading);
        start_state.body_radius = body_radius;
        return Scenario {
            name: format!("random world {seed}"),
            world,
            start: start_state,
        };
    }
}
