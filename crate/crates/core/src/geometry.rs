//! Pinhole camera math shared by fusion and layout.
//!
//! Camera frame: `+z` forward, `+x` right, `+y` down, so the image axes and
//! the camera axes point the same way. No lens distortion is modelled.

use nalgebra::{Point3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `|q| - 1` for a quaternion to count as a rotation.
pub const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point is behind the camera (z = {z})")]
    BehindCamera { z: f64 },
    #[error("degenerate marker: apparent size {apparent_size_px} px")]
    DegenerateMarker { apparent_size_px: f64 },
}

/// A position on the image plane, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScreenPoint {
    pub x: f64,
    pub y: f64,
}

impl ScreenPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Width and height of an image or a screen-space box, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelSize {
    pub width: f64,
    pub height: f64,
}

/// Physical width and height, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSize {
    pub width: f64,
    pub height: f64,
}

impl MetricSize {
    pub const fn square(side: f64) -> Self {
        Self {
            width: side,
            height: side,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub focal_length_px: f64,
    pub principal_point: ScreenPoint,
    pub image_size: PixelSize,
}

impl CameraIntrinsics {
    /// Intrinsics with the principal point at the image center.
    pub fn centered(focal_length_px: f64, width: f64, height: f64) -> Self {
        Self {
            focal_length_px,
            principal_point: ScreenPoint::new(width / 2.0, height / 2.0),
            image_size: PixelSize { width, height },
        }
    }

    /// Every violated invariant, as a human readable message.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let f = self.focal_length_px;
        if !(f.is_finite() && f > 0.0) {
            out.push(format!("focal_length_px must be positive, got {f}"));
        }
        let PixelSize { width, height } = self.image_size;
        if !(width.is_finite() && width > 0.0 && height.is_finite() && height > 0.0) {
            out.push(format!("image_size must be positive, got {width} x {height}"));
        }
        let pp = self.principal_point;
        if !(pp.x.is_finite() && (0.0..=width).contains(&pp.x)) {
            out.push(format!("principal_point.x = {} outside [0, {width}]", pp.x));
        }
        if !(pp.y.is_finite() && (0.0..=height).contains(&pp.y)) {
            out.push(format!("principal_point.y = {} outside [0, {height}]", pp.y));
        }
        out
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match self.problems().into_iter().next() {
            None => Ok(()),
            Some(msg) => Err(GeometryError::InvalidArgument(msg)),
        }
    }
}

/// A 3D rotation stored as a quaternion `w + xi + yj + zk`.
///
/// Deserialization does not normalize; use [`Rotation::is_unit`] or
/// [`Rotation::to_unit`] before trusting values read from a file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Rotation {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Right-handed rotation of `angle_rad` about `axis` (need not be normalized).
    pub fn from_axis_angle(axis: Vector3<f64>, angle_rad: f64) -> Self {
        let q = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle_rad);
        Self::from_unit(q)
    }

    pub fn from_unit(q: UnitQuaternion<f64>) -> Self {
        let q = q.into_inner();
        Self {
            w: q.w,
            x: q.i,
            y: q.j,
            z: q.k,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_TOLERANCE
    }

    pub fn to_unit(&self) -> Result<UnitQuaternion<f64>, GeometryError> {
        if !self.is_unit() {
            return Err(GeometryError::InvalidArgument(format!(
                "rotation quaternion has norm {}, expected 1",
                self.norm()
            )));
        }
        Ok(UnitQuaternion::new_unchecked(Quaternion::new(
            self.w, self.x, self.y, self.z,
        )))
    }

    /// `self · other`: applying the result equals applying `other` first, then `self`.
    pub fn compose(&self, other: &Rotation) -> Result<Rotation, GeometryError> {
        Ok(Self::from_unit(self.to_unit()? * other.to_unit()?))
    }
}

/// Position, orientation and physical extent of a product face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldPose {
    pub position: Point3<f64>,
    pub rotation: Rotation,
    pub size: MetricSize,
}

impl WorldPose {
    pub fn validate(&self) -> Result<(), GeometryError> {
        self.rotation.to_unit()?;
        if !(self.size.width > 0.0 && self.size.height > 0.0) {
            return Err(GeometryError::InvalidArgument(format!(
                "pose size must be positive, got {} x {}",
                self.size.width, self.size.height
            )));
        }
        if !self.position.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::InvalidArgument("pose position is not finite".into()));
        }
        if self.position.z <= 0.0 {
            return Err(GeometryError::BehindCamera { z: self.position.z });
        }
        Ok(())
    }
}

/// Lift a pixel to the camera-frame point at `depth_m` along the optical axis.
pub fn screen_to_world(p: ScreenPoint, depth_m: f64, k: &CameraIntrinsics) -> Result<Point3<f64>, GeometryError> {
    if !(depth_m.is_finite() && depth_m > 0.0) {
        return Err(GeometryError::InvalidArgument(format!(
            "depth must be positive, got {depth_m}"
        )));
    }
    let f = k.focal_length_px;
    let c = k.principal_point;
    Ok(Point3::new(
        (p.x - c.x) * depth_m / f,
        (p.y - c.y) * depth_m / f,
        depth_m,
    ))
}

pub fn world_to_screen(w: &Point3<f64>, k: &CameraIntrinsics) -> Result<ScreenPoint, GeometryError> {
    if w.z.is_nan() || w.z <= 0.0 {
        return Err(GeometryError::BehindCamera { z: w.z });
    }
    let f = k.focal_length_px;
    let c = k.principal_point;
    Ok(ScreenPoint::new(f * w.x / w.z + c.x, f * w.y / w.z + c.y))
}

/// Distance to a marker of known side length from its apparent side length
/// (similar triangles).
pub fn marker_depth(physical_size_m: f64, apparent_size_px: f64, k: &CameraIntrinsics) -> Result<f64, GeometryError> {
    if !(apparent_size_px.is_finite() && apparent_size_px > 0.0) {
        return Err(GeometryError::DegenerateMarker { apparent_size_px });
    }
    if !(physical_size_m.is_finite() && physical_size_m > 0.0) {
        return Err(GeometryError::InvalidArgument(format!(
            "marker physical size must be positive, got {physical_size_m}"
        )));
    }
    Ok(k.focal_length_px * physical_size_m / apparent_size_px)
}

pub fn rotate_point(q: &Rotation, v: &Vector3<f64>) -> Result<Vector3<f64>, GeometryError> {
    Ok(q.to_unit()? * v)
}
