//! On-disk scene layout:
//!
//! ```text
//! <scene>/intrinsics.txt              fx fy cx cy width height [depth_scale]
//! <scene>/frames/<id>.depth.pgm       16-bit depth in integer units of depth_scale meters
//! <scene>/frames/<id>.pose.txt        4x4 row-major camera-to-world matrix
//! <scene>/frames/<id>.detections.txt  JSON list of {label, score, box: [x1, y1, x2, y2]}
//! <scene>/frames/<id>.mask.<k>.pgm    0/255 mask for detection k
//! <scene>/gt/instances.json           optional ground truth (see records)
//! ```
//!
//! RGB files may sit next to these; they are never read.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Matrix4;

use super::frame::{BinaryMask, DepthFrame, DepthMap, Detection2D, InstanceMask};
use super::pgm::{self, Pgm};
use super::records;
use crate::camera::{CameraIntrinsics, CameraPose};
use crate::error::{Error, Result};
use crate::evaluation::GroundTruthInstance;

pub const DEFAULT_DEPTH_SCALE: f64 = 0.001;

/// A depth view plus the 2D proposals (detection + mask) made on it.
#[derive(Debug, Clone)]
pub struct FrameData {
    pub frame: DepthFrame,
    pub proposals: Vec<InstanceMask>,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub root: PathBuf,
    pub intrinsics: CameraIntrinsics,
    pub depth_scale: f64,
    /// Sorted by `frame_id`.
    pub frames: Vec<FrameData>,
    pub ground_truth: Option<GroundTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub instances: Vec<GroundTruthInstance>,
    /// Declared class vocabulary; when absent the GT labels are the vocabulary.
    pub vocabulary: Option<Vec<String>>,
}

impl Scene {
    pub fn view_count(&self) -> usize {
        self.frames.len()
    }
}

pub fn frames_dir(scene_dir: &Path) -> PathBuf {
    scene_dir.join("frames")
}

fn frame_file(scene_dir: &Path, id: &str, suffix: &str) -> PathBuf {
    frames_dir(scene_dir).join(format!("{id}.{suffix}"))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn numbers(text: &str, path: &Path) -> Result<Vec<f64>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace)
        .map(|w| {
            w.parse::<f64>()
                .map_err(|_| Error::parse(path, format!("'{w}' is not a number")))
        })
        .collect()
}

pub fn read_intrinsics(path: &Path) -> Result<(CameraIntrinsics, f64)> {
    let v = numbers(&read_text(path)?, path)?;
    if v.len() != 6 && v.len() != 7 {
        return Err(Error::parse(
            path,
            format!(
                "expected 'fx fy cx cy width height [depth_scale]', found {} values",
                v.len()
            ),
        ));
    }
    let dim = |x: f64, name: &str| {
        if x.fract() == 0.0 && x > 0.0 && x < u32::MAX as f64 {
            Ok(x as usize)
        } else {
            Err(Error::parse(
                path,
                format!("{name} must be a positive integer, got {x}"),
            ))
        }
    };
    let k = CameraIntrinsics {
        fx: v[0],
        fy: v[1],
        cx: v[2],
        cy: v[3],
        width: dim(v[4], "width")?,
        height: dim(v[5], "height")?,
    };
    k.validate()?;
    let scale = v.get(6).copied().unwrap_or(DEFAULT_DEPTH_SCALE);
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::validation(
            "",
            "depth_scale",
            format!("must be > 0, got {scale}"),
        ));
    }
    Ok((k, scale))
}

pub fn write_intrinsics(scene_dir: &Path, k: &CameraIntrinsics, depth_scale: f64) -> Result<()> {
    let path = scene_dir.join("intrinsics.txt");
    let text = format!(
        "# fx fy cx cy width height depth_scale\n{} {} {} {} {} {} {}\n",
        k.fx, k.fy, k.cx, k.cy, k.width, k.height, depth_scale
    );
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn read_pose(path: &Path, frame_id: &str) -> Result<CameraPose> {
    let v = numbers(&read_text(path)?, path)?;
    if v.len() != 16 {
        return Err(Error::parse(
            path,
            format!("expected 16 numbers, found {}", v.len()),
        ));
    }
    CameraPose::from_matrix(&Matrix4::from_row_slice(&v)).map_err(|e| match e {
        Error::Validation { field, message, .. } => Error::validation(frame_id, field, message),
        other => other,
    })
}

fn pose_text(pose: &CameraPose) -> String {
    let m = pose.to_matrix();
    (0..4)
        .map(|r| {
            (0..4)
                .map(|c| format!("{:?}", m[(r, c)]))
                .collect::<Vec<_>>()
                .join(" ")
                + "\n"
        })
        .collect()
}

fn read_depth(path: &Path, frame_id: &str, depth_scale: f64) -> Result<DepthMap> {
    let pgm = pgm::read(path)?;
    let data = pgm
        .data
        .iter()
        .map(|&raw| raw as f64 * depth_scale)
        .collect();
    DepthMap::new(pgm.width, pgm.height, data).map_err(|e| match e {
        Error::Validation { field, message, .. } => Error::validation(frame_id, field, message),
        other => other,
    })
}

/// Quantizes meters to integer units; depths that do not fit become 0 (invalid).
pub fn quantize_depth(depth: f64, depth_scale: f64) -> u16 {
    let raw = (depth / depth_scale).round();
    if depth > 0.0 && raw >= 1.0 && raw <= u16::MAX as f64 {
        raw as u16
    } else {
        0
    }
}

fn read_mask(path: &Path) -> Result<BinaryMask> {
    let pgm = pgm::read(path)?;
    let data = pgm.data.iter().map(|&v| v > 0).collect();
    Ok(BinaryMask::from_vec(pgm.width, pgm.height, data))
}

fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    let data = mask
        .as_slice()
        .iter()
        .map(|&b| if b { 255 } else { 0 })
        .collect();
    pgm::write(
        path,
        &Pgm {
            width: mask.width(),
            height: mask.height(),
            maxval: 255,
            data,
        },
    )
}

fn discover_frame_ids(scene_dir: &Path) -> Result<Vec<String>> {
    let dir = frames_dir(scene_dir);
    let entries = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut ids = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(&dir, e))?;
        let name = entry.file_name();
        if let Some(id) = name.to_str().and_then(|n| n.strip_suffix(".depth.pgm")) {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    Ok(ids)
}

fn load_frame(
    scene_dir: &Path,
    id: &str,
    intrinsics: &CameraIntrinsics,
    depth_scale: f64,
) -> Result<FrameData> {
    let depth = read_depth(&frame_file(scene_dir, id, "depth.pgm"), id, depth_scale)?;
    let pose = read_pose(&frame_file(scene_dir, id, "pose.txt"), id)?;
    let frame = DepthFrame {
        frame_id: id.to_string(),
        depth,
        intrinsics: *intrinsics,
        pose,
    };
    frame.validate()?;

    let det_path = frame_file(scene_dir, id, "detections.txt");
    let detections: Vec<Detection2D> = serde_json::from_str(&read_text(&det_path)?)
        .map_err(|e| Error::parse(&det_path, e.to_string()))?;
    let mut proposals = Vec::with_capacity(detections.len());
    for (k, detection) in detections.into_iter().enumerate() {
        let bitmap = read_mask(&frame_file(scene_dir, id, &format!("mask.{k}.pgm")))?;
        let proposal = InstanceMask { detection, bitmap };
        proposal.validate(id, k, intrinsics.width, intrinsics.height)?;
        proposals.push(proposal);
    }
    Ok(FrameData { frame, proposals })
}

/// Loads and validates a scene directory. Frames come back sorted by id.
pub fn load_scene(scene_dir: &Path) -> Result<Scene> {
    let (intrinsics, depth_scale) = read_intrinsics(&scene_dir.join("intrinsics.txt"))?;
    let frames = discover_frame_ids(scene_dir)?
        .iter()
        .map(|id| load_frame(scene_dir, id, &intrinsics, depth_scale))
        .collect::<Result<Vec<_>>>()?;
    let gt_dir = scene_dir.join("gt");
    let ground_truth = if gt_dir.join(records::GT_INDEX).exists() {
        Some(records::read_ground_truth(&gt_dir)?)
    } else {
        None
    };
    Ok(Scene {
        root: scene_dir.to_path_buf(),
        intrinsics,
        depth_scale,
        frames,
        ground_truth,
    })
}

/// Writes one frame's depth and pose. Depth is quantized with `depth_scale`.
pub fn write_frame(scene_dir: &Path, frame: &DepthFrame, depth_scale: f64) -> Result<()> {
    let dir = frames_dir(scene_dir);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let id = &frame.frame_id;
    let depth = Pgm {
        width: frame.depth.width(),
        height: frame.depth.height(),
        maxval: u16::MAX,
        data: frame
            .depth
            .as_slice()
            .iter()
            .map(|&d| quantize_depth(d, depth_scale))
            .collect(),
    };
    pgm::write(&frame_file(scene_dir, id, "depth.pgm"), &depth)?;
    let pose_path = frame_file(scene_dir, id, "pose.txt");
    fs::write(&pose_path, pose_text(&frame.pose)).map_err(|e| Error::io(&pose_path, e))
}

/// Writes the detection list and one mask file per detection.
pub fn write_proposals(scene_dir: &Path, frame_id: &str, proposals: &[InstanceMask]) -> Result<()> {
    let dir = frames_dir(scene_dir);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let detections: Vec<&Detection2D> = proposals.iter().map(|p| &p.detection).collect();
    let path = frame_file(scene_dir, frame_id, "detections.txt");
    let text = serde_json::to_string_pretty(&detections).expect("detections serialize");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    for (k, p) in proposals.iter().enumerate() {
        write_mask(
            &frame_file(scene_dir, frame_id, &format!("mask.{k}.pgm")),
            &p.bitmap,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene_io::PixelBox;

    fn fixture(dir: &Path, frames: usize) {
        let k = CameraIntrinsics::new(4.0, 4.0, 2.0, 1.5, 4, 3).unwrap();
        write_intrinsics(dir, &k, 0.001).unwrap();
        for i in 0..frames {
            let frame = DepthFrame {
                frame_id: format!("frame_{i:03}"),
                depth: DepthMap::new(4, 3, vec![1.5; 12]).unwrap(),
                intrinsics: k,
                pose: CameraPose::identity(),
            };
            write_frame(dir, &frame, 0.001).unwrap();
            let mut bitmap = BinaryMask::new(4, 3);
            bitmap.set(1, 1, true);
            let det = Detection2D {
                bbox: PixelBox::new(1.0, 1.0, 2.0, 2.0),
                score: 0.75,
                label: "mug".into(),
            };
            write_proposals(
                dir,
                &frame.frame_id,
                &[InstanceMask {
                    detection: det,
                    bitmap,
                }],
            )
            .unwrap();
        }
    }

    #[test]
    fn loads_two_frame_fixture() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path(), 2);
        let scene = load_scene(dir.path()).unwrap();
        assert_eq!(scene.frames.len(), 2);
        assert_eq!(scene.frames[0].frame.frame_id, "frame_000");
        assert_eq!(scene.frames[1].frame.frame_id, "frame_001");
        let f = &scene.frames[0];
        assert_eq!(f.frame.pose, CameraPose::identity());
        assert!((f.frame.depth.get(3, 2) - 1.5).abs() < 1e-12);
        assert_eq!(f.proposals.len(), 1);
        assert_eq!(f.proposals[0].bitmap.count(), 1);
        assert!(scene.ground_truth.is_none());
    }

    #[test]
    fn depth_width_mismatch_is_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path(), 1);
        let bad = Pgm {
            width: 5,
            height: 3,
            maxval: u16::MAX,
            data: vec![1000; 15],
        };
        pgm::write(&frame_file(dir.path(), "frame_000", "depth.pgm"), &bad).unwrap();
        let err = load_scene(dir.path()).unwrap_err();
        assert!(
            matches!(&err, Error::Validation { frame, field, .. } if frame == "frame_000" && field == "depth"),
            "{err}"
        );
    }

    #[test]
    fn non_orthonormal_rotation_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path(), 1);
        let path = frame_file(dir.path(), "frame_000", "pose.txt");
        fs::write(&path, "1 0 0 0\n0 2 0 0\n0 0 1 0\n0 0 0 1\n").unwrap();
        let err = load_scene(dir.path()).unwrap_err();
        assert!(
            matches!(&err, Error::Validation { frame, field, .. } if frame == "frame_000" && field == "pose.rotation"),
            "{err}"
        );
    }

    #[test]
    fn missing_mask_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path(), 1);
        fs::remove_file(frame_file(dir.path(), "frame_000", "mask.0.pgm")).unwrap();
        let err = load_scene(dir.path()).unwrap_err().to_string();
        assert!(err.contains("frame_000.mask.0.pgm"), "{err}");
    }

    #[test]
    fn intrinsics_scale_is_optional() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("intrinsics.txt");
        fs::write(&p, "500 500 319.5 239.5 640 480\n").unwrap();
        assert_eq!(read_intrinsics(&p).unwrap().1, DEFAULT_DEPTH_SCALE);
        fs::write(&p, "500 500 319.5 239.5 640 480 0.0001\n").unwrap();
        assert_eq!(read_intrinsics(&p).unwrap().1, 0.0001);
        fs::write(&p, "500 500 319.5 239.5 640.5 480\n").unwrap();
        assert!(read_intrinsics(&p).is_err());
    }

    #[test]
    fn quantization_rejects_out_of_range() {
        assert_eq!(quantize_depth(0.0, 0.001), 0);
        assert_eq!(quantize_depth(2.0004, 0.001), 2000);
        assert_eq!(quantize_depth(70.0, 0.001), 0);
    }
}
