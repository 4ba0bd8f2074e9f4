//! Camera geometry: horizon-referenced depth, pixel/camera/user frame
//! conversions and the pixel-space observation model used by the tracker.
//!
//! Frames:
//! - image: column `u` to the right, row `v` downward, origin top-left.
//! - camera: `x` to the camera's right, `y` down, `z` along the optical axis.
//! - user: body-fixed, `x` to the user's right, `z` forward. A camera
//!   looking straight back has yaw `π`, so objects behind the user have
//!   negative `z`.
//!
//! Pitch enters only through the horizon row and a `cos(pitch)` scale on
//! the lateral pixel offset; roll is ignored.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default lower bound on the horizon deviation (pixels) below which a
/// detection is treated as touching the ground at or above the horizon.
pub const DEFAULT_MIN_DEVIATION_PX: f64 = 1.0;
/// Default upper bound on estimated depth (meters).
pub const DEFAULT_MAX_DEPTH_M: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("ground contact at or above the horizon (deviation {deviation:.3} px)")]
    AboveHorizon { deviation: f64 },
    #[error("object is not in front of the camera (depth {depth:.3} m)")]
    BehindCamera { depth: f64 },
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Self {
        Self { fx, fy, cx, cy }
    }

    /// Checks focal lengths and that the principal point lies inside an
    /// image of the given size.
    pub fn validate(&self, width: f64, height: f64) -> Result<(), String> {
        if !(self.fx > 0.0 && self.fx.is_finite()) {
            return Err(format!("fx must be positive, got {}", self.fx));
        }
        if !(self.fy > 0.0 && self.fy.is_finite()) {
            return Err(format!("fy must be positive, got {}", self.fy));
        }
        if !(0.0..=width).contains(&self.cx) {
            return Err(format!("cx={} outside image width {}", self.cx, width));
        }
        if !(0.0..=height).contains(&self.cy) {
            return Err(format!("cy={} outside image height {}", self.cy, height));
        }
        Ok(())
    }

    /// Horizontal field of view of an image `width` pixels wide.
    pub fn horizontal_fov(&self, width: f64) -> f64 {
        (self.cx / self.fx).atan() + ((width - self.cx) / self.fx).atan()
    }
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self::new(600.0, 600.0, 320.0, 320.0)
    }
}

/// Head (and camera) orientation reported by the IMU.
///
/// `pitch` is signed so that a positive value moves the horizon toward the
/// top of the image. `yaw` rotates the camera frame about the vertical axis
/// relative to the user frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ImuPose {
    pub pitch: f64,
    pub yaw: f64,
}

impl ImuPose {
    pub fn new(pitch: f64, yaw: f64) -> Self {
        Self { pitch, yaw: normalize_angle(yaw) }
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    Car,
    Cycle,
}

impl ObjectClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectClass::Car => "car",
            ObjectClass::Cycle => "cycle",
        }
    }
}

impl std::str::FromStr for ObjectClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "car" => Ok(ObjectClass::Car),
            "cycle" => Ok(ObjectClass::Cycle),
            other => Err(format!("unknown object class `{other}`")),
        }
    }
}

/// Axis-aligned detection box, top-left anchored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox2D {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub class: ObjectClass,
    pub score: f64,
}

impl BoundingBox2D {
    pub fn new(x: f64, y: f64, w: f64, h: f64, class: ObjectClass, score: f64) -> Self {
        Self { x, y, w, h, class, score }
    }

    /// Box with the given bottom-center pixel.
    pub fn from_bottom_center(u: f64, v: f64, w: f64, h: f64, class: ObjectClass) -> Self {
        Self::new(u - w / 2.0, v - h, w, h, class, 1.0)
    }

    /// The ground-contact pixel `(u, v)`.
    pub fn bottom_center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h)
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn iou(&self, other: &BoundingBox2D) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if ix <= 0.0 || iy <= 0.0 {
            return 0.0;
        }
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// True when the box lies inside a `width`×`height` image grown by
    /// `margin` pixels on every side.
    pub fn within_image(&self, width: f64, height: f64, margin: f64) -> bool {
        self.w > 0.0
            && self.h > 0.0
            && self.x >= -margin
            && self.y >= -margin
            && self.x + self.w <= width + margin
            && self.y + self.h <= height + margin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointCamera3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointUser3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PointUser3D {
    pub fn planar_range(&self) -> f64 {
        self.x.hypot(self.z)
    }
}

/// One pixel-space measurement of an object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Column of the ground-contact point relative to the principal column.
    pub u_offset: f64,
    /// Box height in pixels.
    pub pixel_height: f64,
    /// Ground-contact row minus horizon row.
    pub horizon_deviation: f64,
}

impl Observation {
    pub fn from_box(bbox: &BoundingBox2D, intr: &CameraIntrinsics, pitch: f64) -> Self {
        let (u, v) = bbox.bottom_center();
        Self {
            u_offset: u - intr.cx,
            pixel_height: bbox.h,
            horizon_deviation: v - horizon_line(intr, pitch),
        }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.u_offset, self.pixel_height, self.horizon_deviation]
    }
}

/// Clamp/guard parameters for [`estimate_depth_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthLimits {
    pub min_deviation_px: f64,
    pub max_depth: f64,
}

impl Default for DepthLimits {
    fn default() -> Self {
        Self { min_deviation_px: DEFAULT_MIN_DEVIATION_PX, max_depth: DEFAULT_MAX_DEPTH_M }
    }
}

/// Image row where the ground plane vanishes.
pub fn horizon_line(intr: &CameraIntrinsics, pitch: f64) -> f64 {
    intr.cy - intr.fy * pitch.tan()
}

/// Depth of a detection's ground-contact point from its deviation below the
/// horizon, with default limits.
pub fn estimate_depth(
    bbox: &BoundingBox2D,
    intr: &CameraIntrinsics,
    pitch: f64,
    camera_height: f64,
) -> Result<f64, GeometryError> {
    estimate_depth_with(bbox, intr, pitch, camera_height, &DepthLimits::default())
}

pub fn estimate_depth_with(
    bbox: &BoundingBox2D,
    intr: &CameraIntrinsics,
    pitch: f64,
    camera_height: f64,
    limits: &DepthLimits,
) -> Result<f64, GeometryError> {
    let deviation = bbox.y + bbox.h - horizon_line(intr, pitch);
    depth_from_deviation(deviation, intr, camera_height, limits)
}

pub fn depth_from_deviation(
    deviation: f64,
    intr: &CameraIntrinsics,
    camera_height: f64,
    limits: &DepthLimits,
) -> Result<f64, GeometryError> {
    if !(deviation > limits.min_deviation_px) {
        return Err(GeometryError::AboveHorizon { deviation });
    }
    Ok((intr.fy * camera_height / deviation).min(limits.max_depth))
}

/// Lifts the box's bottom-center pixel to the camera frame at `depth`.
pub fn backproject(bbox: &BoundingBox2D, depth: f64, intr: &CameraIntrinsics) -> PointCamera3D {
    let (u, v) = bbox.bottom_center();
    PointCamera3D {
        x: (u - intr.cx) * depth / intr.fx,
        y: (v - intr.cy) * depth / intr.fy,
        z: depth,
    }
}

pub fn camera_to_user(p: &PointCamera3D, yaw: f64) -> PointUser3D {
    let (s, c) = yaw.sin_cos();
    PointUser3D { x: c * p.x - s * p.z, y: p.y, z: s * p.x + c * p.z }
}

/// Inverse of [`camera_to_user`] in the ground plane: `(lateral, depth)` in
/// the camera frame.
pub fn user_to_camera_planar(x: f64, z: f64, yaw: f64) -> (f64, f64) {
    let (s, c) = yaw.sin_cos();
    (x * c + z * s, -x * s + z * c)
}

/// Predicted pixel measurement of a ground object at user-frame `(x, z)`
/// with physical height `obj_height`.
pub fn project_observation(
    x: f64,
    z: f64,
    obj_height: f64,
    pose: &ImuPose,
    intr: &CameraIntrinsics,
    camera_height: f64,
) -> Result<Observation, GeometryError> {
    let (lateral, depth) = user_to_camera_planar(x, z, pose.yaw);
    if !(depth > 0.0) {
        return Err(GeometryError::BehindCamera { depth });
    }
    Ok(Observation {
        u_offset: intr.fx * lateral / depth * pose.pitch.cos(),
        pixel_height: intr.fy * obj_height / depth,
        horizon_deviation: intr.fy * camera_height / depth,
    })
}

/// Jacobian of [`project_observation`] with respect to `(x, z)`; rows follow
/// the observation components.
pub fn observation_jacobian(
    x: f64,
    z: f64,
    obj_height: f64,
    pose: &ImuPose,
    intr: &CameraIntrinsics,
    camera_height: f64,
) -> Result<[[f64; 2]; 3], GeometryError> {
    let (s, c) = pose.yaw.sin_cos();
    let depth = -x * s + z * c;
    if !(depth > 0.0) {
        return Err(GeometryError::BehindCamera { depth });
    }
    let d2 = depth * depth;
    let lateral_gain = intr.fx * pose.pitch.cos() / d2;
    let h_gain = intr.fy * obj_height / d2;
    let e_gain = intr.fy * camera_height / d2;
    Ok([
        [lateral_gain * z, -lateral_gain * x],
        [h_gain * s, -h_gain * c],
        [e_gain * s, -e_gain * c],
    ])
}

/// Image box of an object with known size at user-frame `(x, z)`: the
/// forward counterpart of [`estimate_depth`] and [`backproject`].
pub fn project_box(
    x: f64,
    z: f64,
    obj_width: f64,
    obj_height: f64,
    class: ObjectClass,
    pose: &ImuPose,
    intr: &CameraIntrinsics,
    camera_height: f64,
) -> Result<BoundingBox2D, GeometryError> {
    let obs = project_observation(x, z, obj_height, pose, intr, camera_height)?;
    let (_, depth) = user_to_camera_planar(x, z, pose.yaw);
    let u = intr.cx + obs.u_offset;
    let v = horizon_line(intr, pose.pitch) + obs.horizon_deviation;
    let w = intr.fx * obj_width / depth;
    Ok(BoundingBox2D::from_bottom_center(u, v, w, obs.pixel_height, class))
}
