//! Analytic depth rendering of labeled axis-aligned boxes and the synthetic
//! scene writer.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use nalgebra::{Matrix4, Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{CameraIntrinsics, CameraPose};
use crate::error::{Error, Result};
use crate::evaluation::GroundTruthInstance;
use crate::projection::Box3D;
use crate::scene_io::{
    write_frame, write_ground_truth, write_intrinsics, write_proposals, DepthFrame, DepthMap,
    DEFAULT_DEPTH_SCALE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledBox {
    pub label: String,
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl LabeledBox {
    pub fn new(label: &str, min: [f64; 3], max: [f64; 3]) -> Self {
        Self {
            label: label.into(),
            min,
            max,
        }
    }

    pub fn bbox(&self) -> Box3D {
        Box3D {
            min: Point3::from(self.min),
            max: Point3::from(self.max),
        }
    }
}

/// A camera pose given either as a look-at triple or a 4x4 camera-to-world matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PoseSpec {
    LookAt {
        eye: [f64; 3],
        target: [f64; 3],
        #[serde(default = "default_up")]
        up: [f64; 3],
    },
    Matrix {
        matrix: [[f64; 4]; 4],
    },
}

fn default_up() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_spacing() -> f64 {
    0.02
}

fn default_scale() -> f64 {
    DEFAULT_DEPTH_SCALE
}

impl PoseSpec {
    pub fn to_pose(&self) -> Result<CameraPose> {
        match self {
            PoseSpec::LookAt { eye, target, up } => CameraPose::look_at(
                Point3::from(*eye),
                Point3::from(*target),
                Vector3::from(*up),
            ),
            PoseSpec::Matrix { matrix } => {
                CameraPose::from_matrix(&Matrix4::from_fn(|r, c| matrix[r][c]))
            }
        }
    }
}

/// Boxes plus a camera trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSceneSpec {
    pub boxes: Vec<LabeledBox>,
    pub intrinsics: CameraIntrinsics,
    pub trajectory: Vec<PoseSpec>,
    #[serde(default = "default_scale")]
    pub depth_scale: f64,
    /// Grid step of the ground-truth surface samples (meters).
    #[serde(default = "default_spacing")]
    pub gt_spacing: f64,
}

impl SyntheticSceneSpec {
    pub fn poses(&self) -> Result<Vec<CameraPose>> {
        self.trajectory.iter().map(PoseSpec::to_pose).collect()
    }

    pub fn validate(&self) -> Result<Vec<CameraPose>> {
        if self.boxes.is_empty() {
            return Err(Error::EmptySpec("no boxes".into()));
        }
        if self.trajectory.is_empty() {
            return Err(Error::EmptySpec("camera trajectory is empty".into()));
        }
        self.intrinsics.validate()?;
        if !(self.depth_scale > 0.0 && self.gt_spacing > 0.0) {
            return Err(Error::EmptySpec(
                "depth_scale and gt_spacing must be > 0".into(),
            ));
        }
        let poses = self.poses()?;
        for b in &self.boxes {
            if b.label.trim().is_empty() || !(0..3).all(|i| b.min[i] < b.max[i]) {
                return Err(Error::EmptySpec(format!("invalid box {b:?}")));
            }
            let c = b.bbox().centroid();
            let seen = poses.iter().any(|pose| {
                pose.center()
                    .coords
                    .iter()
                    .zip(b.min.iter().zip(&b.max))
                    .any(|(p, (lo, hi))| p < lo || p > hi)
                    && self
                        .intrinsics
                        .project(&pose.inverse_transform_point(&c))
                        .is_some_and(|(u, v)| {
                            u >= 0.0
                                && v >= 0.0
                                && u < self.intrinsics.width as f64
                                && v < self.intrinsics.height as f64
                        })
            });
            if !seen {
                return Err(Error::EmptySpec(format!(
                    "box '{}' is not inside any camera frustum",
                    b.label
                )));
            }
        }
        Ok(poses)
    }
}

/// Entry distance along `dir` from `origin` to the box, if the ray hits it
/// in front of the origin.
pub fn ray_box_entry(origin: &Point3<f64>, dir: &Vector3<f64>, b: &Box3D) -> Option<f64> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for i in 0..3 {
        if dir[i] == 0.0 {
            if origin[i] < b.min[i] || origin[i] > b.max[i] {
                return None;
            }
            continue;
        }
        let t1 = (b.min[i] - origin[i]) / dir[i];
        let t2 = (b.max[i] - origin[i]) / dir[i];
        t_near = t_near.max(t1.min(t2));
        t_far = t_far.min(t1.max(t2));
    }
    (t_near <= t_far && t_near > 0.0).then_some(t_near)
}

/// Nearest-surface depth (camera Z, meters) of the boxes at each pixel
/// center; 0 where no box is hit.
pub fn render_depth(boxes: &[Box3D], k: &CameraIntrinsics, pose: &CameraPose) -> DepthMap {
    let origin = pose.center();
    let rows: Vec<Vec<f64>> = (0..k.height)
        .into_par_iter()
        .map(|v| {
            (0..k.width)
                .map(|u| {
                    // camera-frame direction with unit Z, so the ray parameter is the depth
                    let d_cam =
                        Vector3::new((u as f64 - k.cx) / k.fx, (v as f64 - k.cy) / k.fy, 1.0);
                    let d_world = pose.rotation * d_cam;
                    boxes
                        .iter()
                        .filter_map(|b| ray_box_entry(&origin, &d_world, b))
                        .fold(
                            0.0,
                            |best: f64, t| if best == 0.0 { t } else { best.min(t) },
                        )
                })
                .collect()
        })
        .collect();
    DepthMap::new(k.width, k.height, rows.concat()).expect("rendered depth is finite")
}

fn axis_samples(lo: f64, hi: f64, spacing: f64) -> Vec<f64> {
    let n = ((hi - lo) / spacing - 1e-9).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect()
}

/// Regular grid of points over the six faces of a box.
pub fn sample_box_surface(b: &Box3D, spacing: f64) -> Vec<Point3<f64>> {
    let axes: Vec<Vec<f64>> = (0..3)
        .map(|i| axis_samples(b.min[i], b.max[i], spacing))
        .collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for fixed in 0..3 {
        let (a, c) = ((fixed + 1) % 3, (fixed + 2) % 3);
        for side in [b.min[fixed], b.max[fixed]] {
            for &x in &axes[a] {
                for &y in &axes[c] {
                    let mut p = Point3::origin();
                    p[fixed] = side;
                    p[a] = x;
                    p[c] = y;
                    if seen.insert([p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

pub fn ground_truth_instances(spec: &SyntheticSceneSpec) -> Vec<GroundTruthInstance> {
    spec.boxes
        .iter()
        .map(|b| GroundTruthInstance {
            label: b.label.clone(),
            points: sample_box_surface(&b.bbox(), spec.gt_spacing),
        })
        .collect()
}

/// Renders the spec into depth frames (ids `frame_000`, `frame_001`, …).
pub fn render_frames(spec: &SyntheticSceneSpec) -> Result<Vec<DepthFrame>> {
    let poses = spec.validate()?;
    let boxes: Vec<Box3D> = spec.boxes.iter().map(LabeledBox::bbox).collect();
    Ok(poses
        .iter()
        .enumerate()
        .map(|(i, pose)| DepthFrame {
            frame_id: format!("frame_{i:03}"),
            depth: render_depth(&boxes, &spec.intrinsics, pose),
            intrinsics: spec.intrinsics,
            pose: *pose,
        })
        .collect())
}

/// Writes the full scene layout with empty detection lists and ground truth
/// under `gt/`.
pub fn make_synthetic_scene(spec: &SyntheticSceneSpec, dir: &Path) -> Result<()> {
    let frames = render_frames(spec)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_intrinsics(dir, &spec.intrinsics, spec.depth_scale)?;
    for frame in &frames {
        write_frame(dir, frame, spec.depth_scale)?;
        write_proposals(dir, &frame.frame_id, &[])?;
    }
    let mut vocab: Vec<String> = spec.boxes.iter().map(|b| b.label.clone()).collect();
    vocab.sort();
    vocab.dedup();
    write_ground_truth(&dir.join("gt"), &ground_truth_instances(spec), Some(&vocab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene_io::load_scene;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(100.0, 100.0, 31.5, 23.5, 64, 48).unwrap()
    }

    fn cube_spec(trajectory: Vec<PoseSpec>) -> SyntheticSceneSpec {
        SyntheticSceneSpec {
            boxes: vec![LabeledBox::new("cube", [-0.5, -0.5, 3.0], [0.5, 0.5, 4.0])],
            intrinsics: k(),
            trajectory,
            depth_scale: 0.001,
            gt_spacing: 0.05,
        }
    }

    fn identity() -> PoseSpec {
        PoseSpec::Matrix {
            matrix: [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ],
        }
    }

    #[test]
    fn cube_ahead_renders_centered_square() {
        let spec = cube_spec(vec![identity()]);
        let frames = render_frames(&spec).unwrap();
        let d = &frames[0].depth;
        let k = k();
        for v in 0..k.height {
            for u in 0..k.width {
                // oracle: the front face z = 3 spans |x|, |y| <= 0.5
                let x = (u as f64 - k.cx) * 3.0 / k.fx;
                let y = (v as f64 - k.cy) * 3.0 / k.fy;
                let inside = x.abs() <= 0.5 && y.abs() <= 0.5;
                if inside {
                    assert!((d.get(u, v) - 3.0).abs() < 1e-12, "({u},{v})");
                } else {
                    assert_eq!(d.get(u, v), 0.0, "({u},{v})");
                }
            }
        }
        assert!(d.get(31, 23) > 0.0 && d.get(32, 24) > 0.0);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(matches!(
            render_frames(&cube_spec(vec![])),
            Err(Error::EmptySpec(_))
        ));
        let mut spec = cube_spec(vec![identity()]);
        spec.boxes.clear();
        assert!(matches!(render_frames(&spec), Err(Error::EmptySpec(_))));
        // camera looking away from the box
        let away = PoseSpec::LookAt {
            eye: [0.0, 0.0, 0.0],
            target: [0.0, 0.0, -1.0],
            up: [0.0, -1.0, 0.0],
        };
        assert!(render_frames(&cube_spec(vec![away])).is_err());
    }

    #[test]
    fn ground_truth_independent_of_trajectory() {
        let a = cube_spec(vec![identity()]);
        let mut b = a.clone();
        b.trajectory = vec![PoseSpec::LookAt {
            eye: [0.3, -0.2, 0.0],
            target: [0.3, -0.2, 3.5],
            up: [0.0, -1.0, 0.0],
        }];
        assert_eq!(ground_truth_instances(&a), ground_truth_instances(&b));
    }

    #[test]
    fn surface_samples_cover_faces_once() {
        let b = Box3D::new(Point3::new(0.0, 0.0, 0.0), Point3::new(0.1, 0.2, 0.3));
        let pts = sample_box_surface(&b, 0.1);
        // grid is 2 x 3 x 4 nodes; surface nodes = all minus interior (0 here)
        assert_eq!(pts.len(), 2 * 3 * 4);
        assert!(pts.iter().all(|p| b.contains(p)));
    }

    #[test]
    fn writes_loadable_layout() {
        let dir = tempfile::tempdir().unwrap();
        let spec = cube_spec(vec![identity(), identity()]);
        make_synthetic_scene(&spec, dir.path()).unwrap();
        let scene = load_scene(dir.path()).unwrap();
        assert_eq!(scene.frames.len(), 2);
        assert!(scene.frames.iter().all(|f| f.proposals.is_empty()));
        let gt = scene.ground_truth.unwrap();
        assert_eq!(gt.instances.len(), 1);
        assert_eq!(gt.vocabulary, Some(vec!["cube".to_string()]));
        assert!((scene.frames[0].frame.depth.get(31, 23) - 3.0).abs() < 1e-9);
    }
}
