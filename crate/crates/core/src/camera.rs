//! Pinhole intrinsics and rigid camera-to-world poses.

use nalgebra::{Matrix3, Matrix4, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-6;

/// Pinhole calibration: focal lengths and principal point in pixels, plus the
/// image size the calibration applies to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::validation("", field, msg));
        if !(self.fx.is_finite() && self.fx > 0.0) {
            return bad("intrinsics.fx", format!("must be > 0, got {}", self.fx));
        }
        if !(self.fy.is_finite() && self.fy > 0.0) {
            return bad("intrinsics.fy", format!("must be > 0, got {}", self.fy));
        }
        if self.width == 0 || self.height == 0 {
            return bad(
                "intrinsics.size",
                format!(
                    "image must be non-empty, got {}x{}",
                    self.width, self.height
                ),
            );
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return bad(
                "intrinsics.cx",
                format!("must lie in [0, {}), got {}", self.width, self.cx),
            );
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return bad(
                "intrinsics.cy",
                format!("must lie in [0, {}), got {}", self.height, self.cy),
            );
        }
        Ok(())
    }

    /// The 3x3 calibration matrix.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Forward projection of a camera-frame point. Returns `None` behind the camera.
    pub fn project(&self, p: &Point3<f64>) -> Option<(f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((p.x * self.fx / p.z + self.cx, p.y * self.fy / p.z + self.cy))
    }
}

/// Rigid transform taking camera-frame points into the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl CameraPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let pose = Self {
            rotation,
            translation,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .rotation
            .iter()
            .chain(self.translation.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::validation("", "pose", "non-finite entry"));
        }
        let gram = self.rotation.transpose() * self.rotation;
        let off = (gram - Matrix3::identity()).abs().max();
        if off > ORTHONORMAL_TOL {
            return Err(Error::validation(
                "",
                "pose.rotation",
                format!("not orthonormal (max |RᵀR − I| = {off:.3e})"),
            ));
        }
        let det = self.rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::validation(
                "",
                "pose.rotation",
                format!("determinant is {det}, expected +1"),
            ));
        }
        Ok(())
    }

    /// Builds a pose from a homogeneous 4x4 camera-to-world matrix.
    pub fn from_matrix(m: &Matrix4<f64>) -> Result<Self> {
        let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::validation(
                "",
                "pose",
                format!("last row must be 0 0 0 1, got {bottom:?}"),
            ));
        }
        Self::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Camera frame to world frame: `R·p + t`.
    #[inline]
    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    /// World frame to camera frame: `Rᵀ·(p − t)`.
    #[inline]
    pub fn inverse_transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation.transpose() * (p.coords - self.translation))
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Point3<f64> {
        Point3::from(self.translation)
    }

    /// Camera looking from `eye` toward `target`, with image rows pointing
    /// along `-up` (x right, y down, z forward).
    pub fn look_at(eye: Point3<f64>, target: Point3<f64>, up: Vector3<f64>) -> Result<Self> {
        let forward = target - eye;
        let z = forward
            .try_normalize(1e-12)
            .ok_or_else(|| Error::validation("", "pose", "look_at eye and target coincide"))?;
        let x = z
            .cross(&up)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::validation("", "pose", "look_at up is parallel to view"))?;
        let y = z.cross(&x);
        let rotation = Matrix3::from_columns(&[x, y, z]);
        Self::new(rotation, eye.coords)
    }
}
