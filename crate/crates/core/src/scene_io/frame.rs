use serde::{Deserialize, Serialize};

use crate::camera::{CameraIntrinsics, CameraPose};
use crate::error::{Error, Result};

/// Row-major depth grid in meters. Zero marks an invalid reading.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::validation(
                "",
                "depth",
                format!("{} samples for a {width}x{height} grid", data.len()),
            ));
        }
        if let Some(i) = data.iter().position(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::validation(
                "",
                "depth",
                format!(
                    "sample at ({}, {}) is {}; depths must be finite and >= 0",
                    i % width,
                    i / width,
                    data[i]
                ),
            ));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize, depth: f64) {
        self.data[v * self.width + u] = depth;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Binary H×W pixel grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Self {
        assert_eq!(data.len(), width * height, "mask buffer size mismatch");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let data = (0..width * height)
            .map(|i| f(i % width, i / width))
            .collect();
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> bool {
        self.data[v * self.width + u]
    }

    /// Out-of-bounds coordinates read as unset.
    #[inline]
    pub fn get_signed(&self, u: isize, v: isize) -> bool {
        u >= 0
            && v >= 0
            && (u as usize) < self.width
            && (v as usize) < self.height
            && self.data[v as usize * self.width + u as usize]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, on: bool) {
        self.data[v * self.width + u] = on;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Set pixels as `(u, v)` in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Inclusive pixel bounds `(u_min, v_min, u_max, v_max)` of the set pixels.
    pub fn bounds(&self) -> Option<(usize, usize, usize, usize)> {
        let mut b: Option<(usize, usize, usize, usize)> = None;
        for (u, v) in self.iter_set() {
            b = Some(match b {
                None => (u, v, u, v),
                Some((a, c, d, e)) => (a.min(u), c.min(v), d.max(u), e.max(v)),
            });
        }
        b
    }

    /// True when every pixel set here is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }
}

/// Image-plane box in pixel-edge coordinates: pixel `(u, v)` covers
/// `[u, u+1) × [v, v+1)`, so a one-pixel box is `(u, v, u+1, v+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl PixelBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    /// Tight box around a mask's set pixels.
    pub fn around(mask: &BinaryMask) -> Option<Self> {
        mask.bounds().map(|(u0, v0, u1, v1)| {
            Self::new(u0 as f64, v0 as f64, (u1 + 1) as f64, (v1 + 1) as f64)
        })
    }

    pub fn clamped(&self, width: usize, height: usize) -> Self {
        let (w, h) = (width as f64, height as f64);
        Self {
            x1: self.x1.clamp(0.0, w),
            y1: self.y1.clamp(0.0, h),
            x2: self.x2.clamp(0.0, w),
            y2: self.y2.clamp(0.0, h),
        }
    }

    pub fn is_empty(&self) -> bool {
        !(self.x1 < self.x2 && self.y1 < self.y2)
    }

    /// Whether pixel `(u, v)` overlaps the box interior.
    #[inline]
    pub fn contains_pixel(&self, u: usize, v: usize) -> bool {
        let (u, v) = (u as f64, v as f64);
        u + 1.0 > self.x1 && u < self.x2 && v + 1.0 > self.y1 && v < self.y2
    }
}

/// A labeled, scored 2D detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection2D {
    #[serde(rename = "box")]
    pub bbox: PixelBox,
    pub score: f64,
    pub label: String,
}

impl Detection2D {
    pub fn validate(&self, frame: &str, index: usize, width: usize, height: usize) -> Result<()> {
        let field = |f: &str| format!("detections[{index}].{f}");
        let b = &self.bbox;
        if ![b.x1, b.y1, b.x2, b.y2].iter().all(|v| v.is_finite()) || !(b.x1 < b.x2 && b.y1 < b.y2)
        {
            return Err(Error::validation(
                frame,
                field("box"),
                format!("need x1 < x2 and y1 < y2, got {b:?}"),
            ));
        }
        if b.clamped(width, height).is_empty() {
            return Err(Error::validation(
                frame,
                field("box"),
                format!("box {b:?} lies outside the {width}x{height} image"),
            ));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::validation(
                frame,
                field("score"),
                format!("must lie in [0, 1], got {}", self.score),
            ));
        }
        if self.label.trim().is_empty() {
            return Err(Error::validation(frame, field("label"), "label is empty"));
        }
        Ok(())
    }
}

/// A detection together with its pixel mask.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMask {
    pub detection: Detection2D,
    pub bitmap: BinaryMask,
}

impl InstanceMask {
    pub fn validate(&self, frame: &str, index: usize, width: usize, height: usize) -> Result<()> {
        self.detection.validate(frame, index, width, height)?;
        if self.bitmap.width() != width || self.bitmap.height() != height {
            return Err(Error::validation(
                frame,
                format!("masks[{index}]"),
                format!(
                    "mask is {}x{}, image is {width}x{height}",
                    self.bitmap.width(),
                    self.bitmap.height()
                ),
            ));
        }
        let bbox = self.detection.bbox.clamped(width, height);
        if let Some((u, v)) = self
            .bitmap
            .iter_set()
            .find(|&(u, v)| !bbox.contains_pixel(u, v))
        {
            return Err(Error::validation(
                frame,
                format!("masks[{index}]"),
                format!("pixel ({u}, {v}) lies outside detection box {bbox:?}"),
            ));
        }
        Ok(())
    }
}

/// One aligned depth view with its calibration and camera-to-world pose.
#[derive(Debug, Clone)]
pub struct DepthFrame {
    pub frame_id: String,
    pub depth: DepthMap,
    pub intrinsics: CameraIntrinsics,
    pub pose: CameraPose,
}

impl DepthFrame {
    pub fn validate(&self) -> Result<()> {
        let tag = |e: Error| match e {
            Error::Validation { field, message, .. } => {
                Error::validation(self.frame_id.clone(), field, message)
            }
            other => other,
        };
        self.intrinsics.validate().map_err(tag)?;
        self.pose.validate().map_err(tag)?;
        if self.depth.width() != self.intrinsics.width
            || self.depth.height() != self.intrinsics.height
        {
            return Err(Error::validation(
                &self.frame_id,
                "depth",
                format!(
                    "depth is {}x{} but intrinsics say {}x{}",
                    self.depth.width(),
                    self.depth.height(),
                    self.intrinsics.width,
                    self.intrinsics.height
                ),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tight_box_and_containment() {
        let mut m = BinaryMask::new(6, 5);
        m.set(2, 1, true);
        m.set(4, 3, true);
        let b = PixelBox::around(&m).unwrap();
        assert_eq!(b, PixelBox::new(2.0, 1.0, 5.0, 4.0));
        assert!(m.iter_set().all(|(u, v)| b.contains_pixel(u, v)));
        assert!(!b.contains_pixel(5, 3));
        assert!(!b.contains_pixel(1, 1));
    }

    #[test]
    fn detection_validation() {
        let det = |x1, y1, x2, y2, score| Detection2D {
            bbox: PixelBox::new(x1, y1, x2, y2),
            score,
            label: "chair".into(),
        };
        assert!(det(0.0, 0.0, 10.0, 10.0, 0.5)
            .validate("f", 0, 20, 20)
            .is_ok());
        assert!(det(5.0, 0.0, 5.0, 10.0, 0.5)
            .validate("f", 0, 20, 20)
            .is_err());
        assert!(det(0.0, 0.0, 10.0, 10.0, 1.5)
            .validate("f", 0, 20, 20)
            .is_err());
        assert!(det(25.0, 0.0, 30.0, 10.0, 0.5)
            .validate("f", 0, 20, 20)
            .is_err());
        // partially outside is fine once clamped
        assert!(det(-4.0, -4.0, 3.0, 3.0, 0.5)
            .validate("f", 0, 20, 20)
            .is_ok());
    }

    #[test]
    fn mask_outside_box_is_reported_with_frame() {
        let mut bitmap = BinaryMask::new(8, 8);
        bitmap.set(7, 7, true);
        let im = InstanceMask {
            detection: Detection2D {
                bbox: PixelBox::new(0.0, 0.0, 4.0, 4.0),
                score: 1.0,
                label: "cup".into(),
            },
            bitmap,
        };
        let err = im.validate("frame_003", 2, 8, 8).unwrap_err().to_string();
        assert!(
            err.contains("frame_003") && err.contains("masks[2]"),
            "{err}"
        );
    }

    #[test]
    fn depth_map_rejects_negative_and_nan() {
        assert!(DepthMap::new(2, 1, vec![1.0, -0.5]).is_err());
        assert!(DepthMap::new(2, 1, vec![f64::NAN, 0.5]).is_err());
        assert!(DepthMap::new(2, 2, vec![1.0; 3]).is_err());
    }
}
