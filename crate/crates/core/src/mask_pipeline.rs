//! Mask refinement and per-object depth isolation: erosion, masked depth
//! lookup, and z-score outlier rejection.

use crate::error::{Error, Result};
use crate::scene_io::{BinaryMask, DepthFrame, Detection2D, InstanceMask};

/// Default z-score threshold.
pub const DEFAULT_TAU: f64 = 2.0;

/// Binary structuring element with odd dimensions, anchored at its center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    bitmap: BinaryMask,
    offsets: Vec<(isize, isize)>,
}

impl Default for StructuringElement {
    /// 3×3 all ones.
    fn default() -> Self {
        Self::square(3).expect("3x3 kernel is valid")
    }
}

impl StructuringElement {
    pub fn new(bitmap: BinaryMask) -> Result<Self> {
        let (w, h) = (bitmap.width(), bitmap.height());
        if w % 2 == 0 || h % 2 == 0 {
            return Err(Error::Config(format!(
                "structuring element must have odd dimensions, got {w}x{h}"
            )));
        }
        let (cx, cy) = (w / 2, h / 2);
        if !bitmap.get(cx, cy) {
            return Err(Error::Config(
                "structuring element center must be set".into(),
            ));
        }
        let offsets = bitmap
            .iter_set()
            .map(|(u, v)| (u as isize - cx as isize, v as isize - cy as isize))
            .collect();
        Ok(Self { bitmap, offsets })
    }

    pub fn square(side: usize) -> Result<Self> {
        Self::new(BinaryMask::from_fn(side, side, |_, _| true))
    }

    pub fn bitmap(&self) -> &BinaryMask {
        &self.bitmap
    }

    /// Offsets `(du, dv)` of the set cells relative to the center.
    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }
}

/// Binary erosion: an output pixel is set iff every kernel-covered input
/// pixel is set. Pixels outside the image count as unset.
pub fn erode(mask: &BinaryMask, kernel: &StructuringElement) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut out = BinaryMask::new(w, h);
    let Some((u0, v0, u1, v1)) = mask.bounds() else {
        return out;
    };
    for v in v0..=v1 {
        for u in u0..=u1 {
            if !mask.get(u, v) {
                continue;
            }
            let (us, vs) = (u as isize, v as isize);
            if kernel
                .offsets()
                .iter()
                .all(|&(du, dv)| mask.get_signed(us + du, vs + dv))
            {
                out.set(u, v, true);
            }
        }
    }
    out
}

pub fn erode_mask(mask: &InstanceMask, kernel: &StructuringElement) -> InstanceMask {
    InstanceMask {
        detection: mask.detection.clone(),
        bitmap: erode(&mask.bitmap, kernel),
    }
}

/// Binary dilation with the reflected kernel; used only to perturb synthetic masks.
pub(crate) fn dilate(mask: &BinaryMask, kernel: &StructuringElement) -> BinaryMask {
    let mut out = BinaryMask::new(mask.width(), mask.height());
    for (u, v) in mask.iter_set() {
        for &(du, dv) in kernel.offsets() {
            let (x, y) = (u as isize + du, v as isize + dv);
            if x >= 0 && y >= 0 && (x as usize) < mask.width() && (y as usize) < mask.height() {
                out.set(x as usize, y as usize, true);
            }
        }
    }
    out
}

/// One valid depth reading at pixel `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthSample {
    pub u: u32,
    pub v: u32,
    pub depth: f64,
}

/// Sparse per-object depth: the valid readings under an eroded mask.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolatedDepth {
    /// Row-major pixel order.
    pub samples: Vec<DepthSample>,
    pub source_detection: Detection2D,
}

impl IsolatedDepth {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Collects the depth under every set mask pixel, skipping zero readings.
///
/// Panics if the mask and depth dimensions differ.
pub fn isolate_depth(frame: &DepthFrame, eroded: &InstanceMask) -> IsolatedDepth {
    let depth = &frame.depth;
    assert!(
        eroded.bitmap.width() == depth.width() && eroded.bitmap.height() == depth.height(),
        "mask {}x{} does not match depth {}x{}",
        eroded.bitmap.width(),
        eroded.bitmap.height(),
        depth.width(),
        depth.height()
    );
    let samples = eroded
        .bitmap
        .iter_set()
        .filter_map(|(u, v)| {
            let d = depth.get(u, v);
            (d > 0.0).then_some(DepthSample {
                u: u as u32,
                v: v as u32,
                depth: d,
            })
        })
        .collect();
    IsolatedDepth {
        samples,
        source_detection: eroded.detection.clone(),
    }
}

/// Mean and population standard deviation.
pub fn depth_stats(samples: &[DepthSample]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.depth).sum::<f64>() / n;
    let var = samples
        .iter()
        .map(|s| (s.depth - mean).powi(2))
        .sum::<f64>()
        / n;
    (mean, var.sqrt())
}

/// Keeps samples with `|d − μ| / σ < tau` (single pass). Inputs with fewer
/// than three samples or zero spread pass through unchanged.
pub fn zscore_filter(depths: &IsolatedDepth, tau: f64) -> IsolatedDepth {
    if depths.samples.len() < 3 {
        return depths.clone();
    }
    let (mean, sigma) = depth_stats(&depths.samples);
    if sigma == 0.0 || !sigma.is_finite() {
        return depths.clone();
    }
    let samples = depths
        .samples
        .iter()
        .filter(|s| ((s.depth - mean) / sigma).abs() < tau)
        .copied()
        .collect();
    IsolatedDepth {
        samples,
        source_detection: depths.source_detection.clone(),
    }
}
