//! Ground-truth driven stand-in for the 2D detector and mask generator, plus
//! synthetic box scenes to feed it.

mod presets;
mod synth;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::GroundTruthInstance;
use crate::mask_pipeline::{dilate, erode, StructuringElement};
use crate::projection::back_project_pixel;
use crate::scene_io::{
    load_scene, read_ground_truth, write_proposals, BinaryMask, DepthFrame, Detection2D,
    InstanceMask, PixelBox,
};
use crate::voxel::{voxel_key, VoxelKey};

pub use presets::{five_object_view, three_box_scene, two_cube_scene};
pub use synth::{
    ground_truth_instances, make_synthetic_scene, ray_box_entry, render_depth, render_frames,
    sample_box_surface, LabeledBox, PoseSpec, SyntheticSceneSpec,
};

/// Seeded perturbations applied to oracle detections. All zero means exact
/// ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationConfig {
    pub seed: u64,
    /// Max absolute shift of each box edge, in pixels.
    pub box_jitter_px: f64,
    /// Positive erodes masks by this many 3×3 steps, negative dilates.
    pub mask_erode_px: i32,
    pub drop_prob: f64,
    pub score_sigma: f64,
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err(Error::Config(format!(
                "drop_prob must lie in [0, 1], got {}",
                self.drop_prob
            )));
        }
        if !(self.box_jitter_px >= 0.0 && self.box_jitter_px.is_finite()) {
            return Err(Error::Config(format!(
                "box_jitter_px must be >= 0, got {}",
                self.box_jitter_px
            )));
        }
        if !(self.score_sigma >= 0.0 && self.score_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "score_sigma must be >= 0, got {}",
                self.score_sigma
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::parse(path, m),
            other => other,
        })
    }

    fn rng_for(&self, frame_id: &str) -> ChaCha8Rng {
        // FNV-1a keeps the per-frame stream stable across platforms and runs
        let h = frame_id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
        });
        ChaCha8Rng::seed_from_u64(self.seed ^ h)
    }
}

/// Voxelized ground truth. A pixel belongs to instance `k` when its
/// back-projected depth lands in a voxel occupied by `k`'s points.
#[derive(Debug, Clone)]
pub struct OracleDetector {
    labels: Vec<String>,
    voxels: HashMap<VoxelKey, Vec<usize>>,
    voxel_size: f64,
}

impl OracleDetector {
    pub fn new(gt: &[GroundTruthInstance], voxel_size: f64) -> Self {
        assert!(voxel_size > 0.0, "voxel size must be positive");
        let mut voxels: HashMap<VoxelKey, Vec<usize>> = HashMap::new();
        for (k, inst) in gt.iter().enumerate() {
            let keys: HashSet<VoxelKey> = inst
                .points
                .iter()
                .map(|p| voxel_key(p, voxel_size))
                .collect();
            for key in keys {
                voxels.entry(key).or_default().push(k);
            }
        }
        Self {
            labels: gt.iter().map(|g| g.label.clone()).collect(),
            voxels,
            voxel_size,
        }
    }

    /// Exact per-instance visible masks, indexed like the ground truth.
    pub fn visible_masks(&self, frame: &DepthFrame) -> Vec<BinaryMask> {
        let (w, h) = (frame.depth.width(), frame.depth.height());
        let mut masks = vec![BinaryMask::new(w, h); self.labels.len()];
        let hits: Vec<Vec<(usize, usize, usize)>> = (0..h)
            .into_par_iter()
            .map(|v| {
                let mut row = Vec::new();
                for u in 0..w {
                    let d = frame.depth.get(u, v);
                    if d <= 0.0 {
                        continue;
                    }
                    let p = frame.pose.transform_point(&back_project_pixel(
                        u as f64,
                        v as f64,
                        d,
                        &frame.intrinsics,
                    ));
                    if let Some(ks) = self.voxels.get(&voxel_key(&p, self.voxel_size)) {
                        row.extend(ks.iter().map(|&k| (k, u, v)));
                    }
                }
                row
            })
            .collect();
        for (k, u, v) in hits.into_iter().flatten() {
            masks[k].set(u, v, true);
        }
        masks
    }

    pub fn detect(
        &self,
        frame: &DepthFrame,
        noise: &PerturbationConfig,
    ) -> (Vec<Detection2D>, Vec<InstanceMask>) {
        let (w, h) = (frame.depth.width(), frame.depth.height());
        let kernel = StructuringElement::default();
        let mut rng = noise.rng_for(&frame.frame_id);
        let mut out = Vec::new();
        for (k, mask) in self.visible_masks(frame).into_iter().enumerate() {
            // draw every variate up front so the stream does not depend on
            // which instances are visible or dropped
            let drop_draw: f64 = rng.random();
            let jitter: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
            let z: f64 = rng.sample(StandardNormal);

            let mut bitmap = mask;
            for _ in 0..noise.mask_erode_px.unsigned_abs() {
                bitmap = if noise.mask_erode_px > 0 {
                    erode(&bitmap, &kernel)
                } else {
                    dilate(&bitmap, &kernel)
                };
            }
            let Some(tight) = PixelBox::around(&bitmap) else {
                continue;
            };
            if drop_draw < noise.drop_prob {
                continue;
            }
            let j = |i: usize| (jitter[i] * noise.box_jitter_px).round();
            let bbox = PixelBox::new(
                tight.x1 + j(0),
                tight.y1 + j(1),
                tight.x2 + j(2),
                tight.y2 + j(3),
            )
            .clamped(w, h);
            if bbox.is_empty() {
                continue;
            }
            let bitmap =
                BinaryMask::from_fn(w, h, |u, v| bitmap.get(u, v) && bbox.contains_pixel(u, v));
            if bitmap.is_empty() {
                continue;
            }
            let detection = Detection2D {
                bbox,
                score: (1.0 - (z * noise.score_sigma).abs()).clamp(0.0, 1.0),
                label: self.labels[k].clone(),
            };
            out.push(InstanceMask { detection, bitmap });
        }
        (out.iter().map(|m| m.detection.clone()).collect(), out)
    }
}

/// Oracle detections for one frame.
pub fn render_gt_detections(
    frame: &DepthFrame,
    gt: &[GroundTruthInstance],
    noise: &PerturbationConfig,
) -> (Vec<Detection2D>, Vec<InstanceMask>) {
    OracleDetector::new(gt, crate::fusion::DEFAULT_VOXEL_SIZE).detect(frame, noise)
}

/// Replaces the detections of every frame in `scene_dir` with oracle
/// detections derived from its `gt/` directory. Returns the total count.
pub fn annotate_scene(scene_dir: &Path, noise: &PerturbationConfig) -> Result<usize> {
    noise.validate()?;
    let gt = read_ground_truth(&scene_dir.join("gt"))?;
    let scene = load_scene(scene_dir)?;
    let oracle = OracleDetector::new(&gt.instances, crate::fusion::DEFAULT_VOXEL_SIZE);
    let mut total = 0;
    for fd in &scene.frames {
        let (_, masks) = oracle.detect(&fd.frame, noise);
        total += masks.len();
        write_proposals(scene_dir, &fd.frame.frame_id, &masks)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::Box3D;

    fn two_cube_frame() -> (DepthFrame, Vec<GroundTruthInstance>, Vec<Box3D>) {
        let spec = two_cube_scene();
        let frames = render_frames(&spec).unwrap();
        let boxes = spec.boxes.iter().map(LabeledBox::bbox).collect();
        (
            frames.into_iter().next().unwrap(),
            ground_truth_instances(&spec),
            boxes,
        )
    }

    #[test]
    fn two_cubes_match_ray_cast_masks() {
        let (frame, gt, boxes) = two_cube_frame();
        let (dets, masks) = render_gt_detections(&frame, &gt, &PerturbationConfig::default());
        assert_eq!(dets.len(), 2);
        let k = frame.intrinsics;
        for (i, m) in masks.iter().enumerate() {
            assert_eq!(m.detection.score, 1.0);
            assert_eq!(m.detection.label, gt[i].label);
            // oracle: pixel rays whose nearest hit is cube i
            let expected = BinaryMask::from_fn(k.width, k.height, |u, v| {
                let p = back_project_pixel(u as f64, v as f64, 1.0, &k);
                let dir = frame.pose.rotation * p.coords;
                let hits: Vec<Option<f64>> = boxes
                    .iter()
                    .map(|b| ray_box_entry(&frame.pose.center(), &dir, b))
                    .collect();
                match (hits[i], hits[1 - i]) {
                    (Some(a), Some(b)) => a < b,
                    (Some(_), None) => true,
                    _ => false,
                }
            });
            assert_eq!(m.bitmap, expected, "mask {i}");
            assert_eq!(m.detection.bbox, PixelBox::around(&expected).unwrap());
        }
    }

    #[test]
    fn drop_all() {
        let (frame, gt, _) = two_cube_frame();
        let noise = PerturbationConfig {
            drop_prob: 1.0,
            ..Default::default()
        };
        assert!(render_gt_detections(&frame, &gt, &noise).0.is_empty());
    }

    #[test]
    fn deterministic_given_seed() {
        let (frame, gt, _) = two_cube_frame();
        let noise = PerturbationConfig {
            seed: 7,
            box_jitter_px: 3.0,
            mask_erode_px: 1,
            drop_prob: 0.3,
            score_sigma: 0.2,
        };
        assert_eq!(
            render_gt_detections(&frame, &gt, &noise),
            render_gt_detections(&frame, &gt, &noise)
        );
    }

    #[test]
    fn perturbed_masks_stay_inside_boxes() {
        let (frame, gt, _) = two_cube_frame();
        for seed in 0..5 {
            let noise = PerturbationConfig {
                seed,
                box_jitter_px: 6.0,
                mask_erode_px: -2,
                score_sigma: 0.3,
                ..Default::default()
            };
            let (_, masks) = render_gt_detections(&frame, &gt, &noise);
            for (i, m) in masks.iter().enumerate() {
                m.validate(&frame.frame_id, i, 640, 480).unwrap();
            }
        }
    }

    #[test]
    fn drops_are_nested_in_drop_prob() {
        let (frame, gt, _) = two_cube_frame();
        let kept = |p| {
            let noise = PerturbationConfig {
                seed: 11,
                drop_prob: p,
                ..Default::default()
            };
            render_gt_detections(&frame, &gt, &noise)
                .0
                .into_iter()
                .map(|d| d.label)
                .collect::<Vec<_>>()
        };
        let (a, b, c) = (kept(0.0), kept(0.5), kept(0.9));
        assert!(b.iter().all(|l| a.contains(l)) && c.iter().all(|l| b.contains(l)));
    }

    #[test]
    fn erosion_noise_shrinks() {
        let (frame, gt, _) = two_cube_frame();
        let count = |e| {
            let noise = PerturbationConfig {
                mask_erode_px: e,
                ..Default::default()
            };
            render_gt_detections(&frame, &gt, &noise).1[0]
                .bitmap
                .count()
        };
        assert!(count(2) < count(0) && count(0) < count(-2));
    }

    #[test]
    fn config_parses_toml() {
        let cfg =
            PerturbationConfig::from_toml_str("seed = 3\ndrop_prob = 0.25\nmask_erode_px = -1\n")
                .unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.drop_prob, 0.25);
        assert_eq!(cfg.mask_erode_px, -1);
        assert!(PerturbationConfig::from_toml_str("drop_prob = 2.0").is_err());
        assert!(PerturbationConfig::from_toml_str("dropprob = 0.1").is_err());
    }
}
