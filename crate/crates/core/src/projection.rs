//! Back-projection of isolated depth into camera-frame points, the rigid
//! camera-to-world transform, and axis-aligned world boxes.

use std::collections::BTreeSet;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::camera::{CameraIntrinsics, CameraPose};
use crate::error::{Error, Result};
use crate::mask_pipeline::{
    erode_mask, isolate_depth, zscore_filter, IsolatedDepth, StructuringElement, DEFAULT_TAU,
};
use crate::scene_io::{DepthFrame, InstanceMask};

/// World-frame points belonging to one detected object.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectCloud {
    pub points: Vec<Point3<f64>>,
    pub label: String,
    pub score: f64,
    pub source_frames: BTreeSet<String>,
}

/// World-axis-aligned box given by its min and max corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Box3D {
    /// Panics unless `min <= max` componentwise.
    pub fn new(min: Point3<f64>, max: Point3<f64>) -> Self {
        assert!(
            (0..3).all(|i| min[i] <= max[i]),
            "box min {min:?} exceeds max {max:?}"
        );
        Self { min, max }
    }

    /// Componentwise extremes of the points.
    pub fn from_points(points: &[Point3<f64>]) -> Result<Self> {
        let (first, rest) = points.split_first().ok_or(Error::EmptyCloud)?;
        let (mut min, mut max) = (*first, *first);
        for p in rest {
            min = min.inf(p);
            max = max.sup(p);
        }
        Ok(Self { min, max })
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn centroid(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }

    pub fn union(&self, other: &Box3D) -> Box3D {
        Box3D {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    /// Overlap box, or `None` if the boxes do not touch.
    pub fn intersection(&self, other: &Box3D) -> Option<Box3D> {
        let min = self.min.sup(&other.min);
        let max = self.max.inf(&other.max);
        (0..3)
            .all(|i| min[i] <= max[i])
            .then_some(Box3D { min, max })
    }
}

/// Pinhole back-projection of every sample: `X = (u − cx)·d/fx`,
/// `Y = (v − cy)·d/fy`, `Z = d`.
pub fn back_project(depths: &IsolatedDepth, k: &CameraIntrinsics) -> Vec<Point3<f64>> {
    depths
        .samples
        .iter()
        .map(|s| back_project_pixel(s.u as f64, s.v as f64, s.depth, k))
        .collect()
}

#[inline]
pub fn back_project_pixel(u: f64, v: f64, depth: f64, k: &CameraIntrinsics) -> Point3<f64> {
    Point3::new((u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth)
}

pub fn to_world(points: &[Point3<f64>], pose: &CameraPose) -> Vec<Point3<f64>> {
    points.iter().map(|p| pose.transform_point(p)).collect()
}

pub fn box_from_cloud(cloud: &ObjectCloud) -> Result<Box3D> {
    Box3D::from_points(&cloud.points)
}

#[derive(Debug, Clone)]
pub struct ReconstructConfig {
    pub kernel: StructuringElement,
    pub tau: f64,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            kernel: StructuringElement::default(),
            tau: DEFAULT_TAU,
        }
    }
}

/// A reconstructed object: its world cloud and box.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub cloud: ObjectCloud,
    pub bbox: Box3D,
}

impl ObjectInstance {
    pub fn label(&self) -> &str {
        &self.cloud.label
    }

    pub fn score(&self) -> f64 {
        self.cloud.score
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// Erosion removed every mask pixel.
    EmptyAfterErosion,
    /// No valid depth under the eroded mask.
    NoValidDepth,
    /// The z-score filter rejected every sample.
    EmptyAfterFilter,
}

impl std::fmt::Display for DropReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DropReason::EmptyAfterErosion => "mask empty after erosion",
            DropReason::NoValidDepth => "no valid depth under mask",
            DropReason::EmptyAfterFilter => "all depths rejected by z-score filter",
        })
    }
}

/// Erode, isolate depth, reject outliers, back-project, move to world, box.
pub fn reconstruct_object(
    frame: &DepthFrame,
    proposal: &InstanceMask,
    config: &ReconstructConfig,
) -> std::result::Result<ObjectInstance, DropReason> {
    let eroded = erode_mask(proposal, &config.kernel);
    if eroded.bitmap.is_empty() {
        return Err(DropReason::EmptyAfterErosion);
    }
    let isolated = isolate_depth(frame, &eroded);
    if isolated.is_empty() {
        return Err(DropReason::NoValidDepth);
    }
    let filtered = zscore_filter(&isolated, config.tau);
    if filtered.is_empty() {
        return Err(DropReason::EmptyAfterFilter);
    }
    let points = to_world(&back_project(&filtered, &frame.intrinsics), &frame.pose);
    let bbox = Box3D::from_points(&points).expect("non-empty");
    Ok(ObjectInstance {
        cloud: ObjectCloud {
            points,
            label: proposal.detection.label.clone(),
            score: proposal.detection.score,
            source_frames: BTreeSet::from([frame.frame_id.clone()]),
        },
        bbox,
    })
}
