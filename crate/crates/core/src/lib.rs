//! Geometry core for open-vocabulary 3D object detection from RGB-D views:
//! mask refinement, back-projection, multi-view fusion, evaluation, a
//! ground-truth oracle detector, and a 2D navigation simulator.

pub mod bench;
pub mod camera;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod mask_pipeline;
pub mod nav;
pub mod oracle;
pub mod pipeline;
pub mod projection;
pub mod scene_io;
pub mod voxel;

pub use error::{Error, Result};
