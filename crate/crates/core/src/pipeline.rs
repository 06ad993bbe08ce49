//! Per-view reconstruction over a scene and cross-view fusion.

use log::info;
use rayon::prelude::*;

use crate::fusion::{merge_instances, FusionConfig, SceneInstances};
use crate::projection::{reconstruct_object, DropReason, ObjectInstance, ReconstructConfig};
use crate::scene_io::{FrameData, Scene};

#[derive(Debug, Clone, Default)]
pub struct PipelineConfig {
    pub reconstruct: ReconstructConfig,
    pub fusion: FusionConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub instances: Vec<ObjectInstance>,
    /// `(proposal index, reason)` for every dropped proposal.
    pub dropped: Vec<(usize, DropReason)>,
}

fn collect(frame: &FrameData, results: Vec<Result<ObjectInstance, DropReason>>) -> FrameOutcome {
    let mut out = FrameOutcome {
        instances: Vec::with_capacity(results.len()),
        dropped: Vec::new(),
    };
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(inst) => out.instances.push(inst),
            Err(reason) => {
                info!(
                    "frame {}: dropped proposal {k} ('{}'): {reason}",
                    frame.frame.frame_id, frame.proposals[k].detection.label
                );
                out.dropped.push((k, reason));
            }
        }
    }
    out
}

/// Reconstructs every proposal of one view, in proposal order.
pub fn process_frame(frame: &FrameData, config: &ReconstructConfig) -> FrameOutcome {
    let results = frame
        .proposals
        .iter()
        .map(|p| reconstruct_object(&frame.frame, p, config))
        .collect();
    collect(frame, results)
}

/// Same as [`process_frame`] with proposals reconstructed in parallel.
pub fn process_frame_parallel(frame: &FrameData, config: &ReconstructConfig) -> FrameOutcome {
    let results = frame
        .proposals
        .par_iter()
        .map(|p| reconstruct_object(&frame.frame, p, config))
        .collect();
    collect(frame, results)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StageCounts {
    pub views: usize,
    pub detections_in: usize,
    pub dropped: usize,
    pub per_view_instances: usize,
    pub instances_out: usize,
}

/// Runs reconstruction on every view, then folds views in frame order.
/// With `parallel`, views are processed concurrently; the result is identical.
pub fn detect_scene(
    scene: &Scene,
    config: &PipelineConfig,
    parallel: bool,
) -> (SceneInstances, StageCounts) {
    let outcomes: Vec<FrameOutcome> = if parallel {
        scene
            .frames
            .par_iter()
            .map(|f| process_frame_parallel(f, &config.reconstruct))
            .collect()
    } else {
        scene
            .frames
            .iter()
            .map(|f| process_frame(f, &config.reconstruct))
            .collect()
    };
    let mut counts = StageCounts {
        views: scene.frames.len(),
        detections_in: scene.frames.iter().map(|f| f.proposals.len()).sum(),
        ..Default::default()
    };
    let views: Vec<Vec<ObjectInstance>> = outcomes
        .into_iter()
        .map(|o| {
            counts.dropped += o.dropped.len();
            counts.per_view_instances += o.instances.len();
            o.instances
        })
        .collect();
    let merged = merge_instances(&views, &config.fusion);
    counts.instances_out = merged.len();
    (merged, counts)
}
