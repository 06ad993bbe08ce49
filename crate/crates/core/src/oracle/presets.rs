//! Ready-made synthetic scenes. Box faces sit on odd multiples of 1 cm so
//! they fall on 2 cm voxel centers.

use std::f64::consts::PI;

use super::synth::{LabeledBox, PoseSpec, SyntheticSceneSpec};
use crate::camera::CameraIntrinsics;

fn vga() -> CameraIntrinsics {
    CameraIntrinsics {
        fx: 525.0,
        fy: 525.0,
        cx: 319.5,
        cy: 239.5,
        width: 640,
        height: 480,
    }
}

/// `n` views on a circle around `target`, alternating above and below it.
fn orbit(n: usize, radius: f64, above: f64, below: f64, target: [f64; 3]) -> Vec<PoseSpec> {
    (0..n)
        .map(|i| {
            let az = (i as f64 + 0.5) * 2.0 * PI / n as f64;
            let dz = if i % 2 == 0 { above } else { -below };
            PoseSpec::LookAt {
                eye: [
                    target[0] + radius * az.cos(),
                    target[1] + radius * az.sin(),
                    target[2] + dz,
                ],
                target,
                up: [0.0, 0.0, 1.0],
            }
        })
        .collect()
}

/// Three well-separated furniture-sized boxes seen from 20 oblique views.
pub fn three_box_scene() -> SyntheticSceneSpec {
    SyntheticSceneSpec {
        boxes: vec![
            LabeledBox::new("chair", [-1.71, -1.01, 0.01], [-0.91, -0.21, 0.91]),
            LabeledBox::new("table", [0.71, -1.11, 0.01], [1.91, -0.11, 0.71]),
            LabeledBox::new("cabinet", [-0.41, 1.11, 0.01], [0.39, 1.71, 1.21]),
        ],
        intrinsics: vga(),
        trajectory: orbit(20, 5.0, 5.0, 5.0, [0.0, 0.0, 0.5]),
        depth_scale: 0.001,
        gt_spacing: 0.02,
    }
}

/// Two 0.6 m cubes side by side, one camera at the origin looking down +Z.
pub fn two_cube_scene() -> SyntheticSceneSpec {
    SyntheticSceneSpec {
        boxes: vec![
            LabeledBox::new("cube_a", [-1.21, -0.29, 3.01], [-0.61, 0.31, 3.61]),
            LabeledBox::new("cube_b", [0.61, -0.29, 3.01], [1.21, 0.31, 3.61]),
        ],
        intrinsics: vga(),
        trajectory: vec![PoseSpec::Matrix {
            matrix: [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ],
        }],
        depth_scale: 0.001,
        gt_spacing: 0.02,
    }
}

/// A single 640×480 view of five objects.
pub fn five_object_view() -> SyntheticSceneSpec {
    SyntheticSceneSpec {
        boxes: vec![
            LabeledBox::new("chair", [-1.71, -1.01, 0.01], [-0.91, -0.21, 0.91]),
            LabeledBox::new("table", [0.71, -1.11, 0.01], [1.91, -0.11, 0.71]),
            LabeledBox::new("cabinet", [-0.41, 1.11, 0.01], [0.39, 1.71, 1.21]),
            LabeledBox::new("box", [-0.29, -0.49, 0.01], [0.29, 0.09, 0.41]),
            LabeledBox::new("lamp", [1.31, 1.11, 0.01], [1.61, 1.41, 1.51]),
        ],
        intrinsics: vga(),
        trajectory: vec![PoseSpec::LookAt {
            eye: [0.7, -4.3, 3.3],
            target: [0.0, 0.0, 0.5],
            up: [0.0, 0.0, 1.0],
        }],
        depth_scale: 0.001,
        gt_spacing: 0.02,
    }
}
