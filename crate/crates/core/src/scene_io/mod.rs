//! Scene loading and artifact export.

mod frame;
mod layout;
pub mod pgm;
pub mod ply;
mod records;

pub use crate::camera::{CameraIntrinsics, CameraPose};
pub use frame::{BinaryMask, DepthFrame, DepthMap, Detection2D, InstanceMask, PixelBox};
pub use layout::{
    frames_dir, load_scene, quantize_depth, read_intrinsics, read_pose, write_frame,
    write_intrinsics, write_proposals, FrameData, GroundTruth, Scene, DEFAULT_DEPTH_SCALE,
};
pub use records::{
    load_instances, read_boxes, read_ground_truth, write_boxes, write_cloud_ply,
    write_ground_truth, write_instances, BoxRecord, BoxesDocument, BOXES_FILE, GT_INDEX,
};
