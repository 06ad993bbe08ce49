//! Voxel hashing shared by fusion (cloud deduplication) and evaluation
//! (voxelized instance IoU).

use std::collections::HashSet;

use nalgebra::Point3;

pub type VoxelKey = [i64; 3];

#[inline]
pub fn voxel_key(p: &Point3<f64>, voxel_size: f64) -> VoxelKey {
    [
        (p.x / voxel_size).floor() as i64,
        (p.y / voxel_size).floor() as i64,
        (p.z / voxel_size).floor() as i64,
    ]
}

pub fn voxel_set(points: &[Point3<f64>], voxel_size: f64) -> HashSet<VoxelKey> {
    points.iter().map(|p| voxel_key(p, voxel_size)).collect()
}

/// Keeps the first point seen in each voxel, preserving input order.
pub fn dedup_points(points: &[Point3<f64>], voxel_size: f64) -> Vec<Point3<f64>> {
    let mut seen = HashSet::with_capacity(points.len());
    points
        .iter()
        .filter(|p| seen.insert(voxel_key(p, voxel_size)))
        .copied()
        .collect()
}

/// Appends the points of `extra` whose voxels `base` does not occupy yet.
/// `base` must already be deduplicated at `voxel_size`.
pub fn extend_dedup(base: &mut Vec<Point3<f64>>, extra: &[Point3<f64>], voxel_size: f64) {
    let mut seen = voxel_set(base, voxel_size);
    base.extend(
        extra
            .iter()
            .filter(|p| seen.insert(voxel_key(p, voxel_size)))
            .copied(),
    );
}
