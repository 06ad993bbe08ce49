//! Cross-view instance fusion: same-class instances whose boxes overlap by
//! more than the merge threshold are folded together until no such pair remains.

use crate::projection::{Box3D, ObjectInstance};
use crate::voxel::{dedup_points, extend_dedup};

pub const DEFAULT_MERGE_THRESHOLD: f64 = 0.8;
pub const DEFAULT_VOXEL_SIZE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    /// Merge when box IoU is strictly greater than this.
    pub merge_threshold: f64,
    /// Voxel edge used to deduplicate merged clouds (meters).
    pub voxel_size: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            merge_threshold: DEFAULT_MERGE_THRESHOLD,
            voxel_size: DEFAULT_VOXEL_SIZE,
        }
    }
}

/// Scene-level instance set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneInstances {
    pub instances: Vec<ObjectInstance>,
}

impl SceneInstances {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// Intersection volume over union volume of two boxes. Zero-volume boxes
/// score 1 against an identical box and 0 otherwise.
pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let (va, vb) = (a.volume(), b.volume());
    if va <= 0.0 || vb <= 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    let inter = a.intersection(b).map_or(0.0, |i| i.volume());
    let union = va + vb - inter;
    (inter / union).clamp(0.0, 1.0)
}

fn normalized(mut inst: ObjectInstance, voxel_size: f64) -> ObjectInstance {
    inst.cloud.points = dedup_points(&inst.cloud.points, voxel_size);
    inst.bbox = Box3D::from_points(&inst.cloud.points).unwrap_or(inst.bbox);
    inst
}

fn absorb(into: &mut ObjectInstance, other: ObjectInstance, voxel_size: f64) {
    extend_dedup(&mut into.cloud.points, &other.cloud.points, voxel_size);
    into.bbox = into.bbox.union(&other.bbox);
    if let Ok(b) = Box3D::from_points(&into.cloud.points) {
        into.bbox = b;
    }
    into.cloud.score = into.cloud.score.max(other.cloud.score);
    into.cloud.source_frames.extend(other.cloud.source_frames);
}

fn mergeable(a: &ObjectInstance, b: &ObjectInstance, threshold: f64) -> bool {
    a.label() == b.label() && iou_3d(&a.bbox, &b.bbox) > threshold
}

/// Folds per-view instance lists (in order) into scene instances.
///
/// Each incoming instance joins the first existing same-class instance whose
/// box IoU exceeds the threshold, otherwise it is appended. Afterwards, pairs
/// are merged repeatedly until none exceeds the threshold.
pub fn merge_instances(views: &[Vec<ObjectInstance>], config: &FusionConfig) -> SceneInstances {
    assert!(
        config.merge_threshold > 0.0 && config.merge_threshold <= 1.0,
        "merge threshold must lie in (0, 1], got {}",
        config.merge_threshold
    );
    assert!(config.voxel_size > 0.0, "voxel size must be positive");
    let mut acc: Vec<ObjectInstance> = Vec::new();
    for inst in views.iter().flatten() {
        let inst = normalized(inst.clone(), config.voxel_size);
        match acc
            .iter()
            .position(|e| mergeable(e, &inst, config.merge_threshold))
        {
            Some(i) => absorb(&mut acc[i], inst, config.voxel_size),
            None => acc.push(inst),
        }
    }
    'fixpoint: loop {
        for i in 0..acc.len() {
            for j in i + 1..acc.len() {
                if mergeable(&acc[i], &acc[j], config.merge_threshold) {
                    let other = acc.remove(j);
                    absorb(&mut acc[i], other, config.voxel_size);
                    continue 'fixpoint;
                }
            }
        }
        break;
    }
    SceneInstances { instances: acc }
}
