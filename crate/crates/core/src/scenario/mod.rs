//! Synthetic traffic world: user and vehicle trajectories, head motion, a
//! field-of-view and detection model, and the trace files they produce.

mod detector;
mod generate;
pub mod suite;
mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundingBox2D, CameraIntrinsics, ImuPose, ObjectClass};

pub use detector::{
    calibrate_midpoint, detection_probability, first_detection_range, median_first_detection, DetectionCurve,
    DetectorConfig, DetectorModel,
};
pub use generate::{generate, Scenario};
pub use trace::{read_trace, read_truth, write_trace, write_truth, TraceError, TraceHeader, TraceKind, TRACE_FORMAT, TRACE_VERSION};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid scenario config: {}", .issues.join("; "))]
pub struct InvalidConfig {
    pub issues: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UserMode {
    Standing,
    Walking,
    Jogging,
}

impl UserMode {
    pub fn default_speed(self) -> f64 {
        match self {
            UserMode::Standing => 0.0,
            UserMode::Walking => 1.4,
            UserMode::Jogging => 2.8,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            UserMode::Standing => "standing",
            UserMode::Walking => "walking",
            UserMode::Jogging => "jogging",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Road {
    AlongRoad,
    Intersection,
}

impl Road {
    pub fn as_str(self) -> &'static str {
        match self {
            Road::AlongRoad => "along_road",
            Road::Intersection => "intersection",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Light {
    Day,
    Night,
}

impl Light {
    pub fn as_str(self) -> &'static str {
        match self {
            Light::Day => "day",
            Light::Night => "night",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserConfig {
    pub mode: UserMode,
    /// Forward walking speed, m/s; defaults by mode.
    #[serde(default)]
    pub speed: Option<f64>,
    /// Body height, m. Recorded with the scenario; the camera height is
    /// configured separately.
    #[serde(default = "default_user_height")]
    pub height: f64,
}

fn default_user_height() -> f64 {
    1.7
}

impl UserConfig {
    pub fn speed(&self) -> f64 {
        self.speed.unwrap_or_else(|| self.mode.default_speed())
    }
}

impl Default for UserConfig {
    fn default() -> Self {
        Self { mode: UserMode::Walking, speed: None, height: default_user_height() }
    }
}

/// Sinusoidal yaw/pitch head motion plus Gaussian jitter, radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadMotion {
    pub yaw_amplitude: f64,
    pub yaw_period: f64,
    pub pitch_amplitude: f64,
    pub pitch_period: f64,
    pub jitter_std: f64,
    /// Standard deviation of IMU angle error on top of the true pose.
    #[serde(default = "default_imu_noise")]
    pub imu_noise_std: f64,
}

fn default_imu_noise() -> f64 {
    0.003
}

impl HeadMotion {
    pub fn for_mode(mode: UserMode) -> Self {
        let (yaw_amplitude, yaw_period, pitch_amplitude, pitch_period, jitter_std) = match mode {
            UserMode::Standing => (0.30, 7.0, 0.03, 4.0, 0.004),
            UserMode::Walking => (0.40, 5.5, 0.05, 1.1, 0.008),
            UserMode::Jogging => (0.50, 4.5, 0.08, 0.7, 0.015),
        };
        Self { yaw_amplitude, yaw_period, pitch_amplitude, pitch_period, jitter_std, imu_noise_std: default_imu_noise() }
    }

    pub fn still() -> Self {
        Self { yaw_amplitude: 0.0, yaw_period: 1.0, pitch_amplitude: 0.0, pitch_period: 1.0, jitter_std: 0.0, imu_noise_std: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpeedProfile {
    #[default]
    Constant,
    /// From absolute time `at`, slow at `rate` m/s² down to `min_speed`.
    DecelerateAt { at: f64, rate: f64, min_speed: f64 },
    /// From absolute time `at`, drift sideways at `lateral_speed` m/s
    /// (positive to the right of the heading) for `duration` seconds.
    LaneChangeAt { at: f64, lateral_speed: f64, duration: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub class: ObjectClass,
    pub spawn_time: f64,
    /// Position relative to the user at spawn time, m.
    pub x: f64,
    pub z: f64,
    /// Direction of travel in the world frame, radians; 0 is the user's
    /// forward direction.
    #[serde(default)]
    pub heading: f64,
    /// Ground speed, m/s.
    pub speed: f64,
    #[serde(default)]
    pub profile: SpeedProfile,
    #[serde(default)]
    pub width: Option<f64>,
    #[serde(default)]
    pub height: Option<f64>,
}

impl VehicleSpec {
    pub fn dimensions(&self) -> (f64, f64) {
        let (w, h) = match self.class {
            ObjectClass::Car => (1.8, 1.5),
            ObjectClass::Cycle => (0.6, 1.7),
        };
        (self.width.unwrap_or(w), self.height.unwrap_or(h))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub intrinsics: CameraIntrinsics,
    pub image_width: f64,
    pub image_height: f64,
    pub camera_height: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self { intrinsics: CameraIntrinsics::default(), image_width: 640.0, image_height: 640.0, camera_height: 1.55 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    pub duration: f64,
    #[serde(default = "default_tick_rate")]
    pub tick_rate: f64,
    #[serde(default)]
    pub user: UserConfig,
    #[serde(default)]
    pub head_motion: Option<HeadMotion>,
    #[serde(default)]
    pub vehicles: Vec<VehicleSpec>,
    #[serde(default = "default_road")]
    pub road: Road,
    #[serde(default = "default_light")]
    pub light: Light,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub camera: CameraConfig,
}

fn default_tick_rate() -> f64 {
    10.0
}

fn default_road() -> Road {
    Road::AlongRoad
}

fn default_light() -> Light {
    Light::Day
}

impl ScenarioConfig {
    pub fn new(seed: u64, duration: f64) -> Self {
        Self {
            name: String::new(),
            seed,
            duration,
            tick_rate: default_tick_rate(),
            user: UserConfig::default(),
            head_motion: None,
            vehicles: Vec::new(),
            road: default_road(),
            light: default_light(),
            detector: DetectorConfig::default(),
            camera: CameraConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, InvalidConfig> {
        let cfg: Self = toml::from_str(text).map_err(|e| InvalidConfig { issues: vec![e.to_string()] })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn head_motion(&self) -> HeadMotion {
        self.head_motion.clone().unwrap_or_else(|| HeadMotion::for_mode(self.user.mode))
    }

    pub fn fov(&self) -> f64 {
        self.detector.fov.unwrap_or_else(|| self.camera.intrinsics.horizontal_fov(self.camera.image_width))
    }

    pub fn n_ticks(&self) -> usize {
        (self.duration * self.tick_rate).round() as usize
    }

    pub fn validate(&self) -> Result<(), InvalidConfig> {
        let mut issues = Vec::new();
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            issues.push(format!("duration: must be positive, got {}", self.duration));
        }
        if !(self.tick_rate > 0.0 && self.tick_rate.is_finite()) {
            issues.push(format!("tick_rate: must be positive, got {}", self.tick_rate));
        }
        if let Some(s) = self.user.speed {
            if !(s >= 0.0) {
                issues.push(format!("user.speed: must be non-negative, got {s}"));
            }
        }
        if !(self.user.height > 0.0) {
            issues.push(format!("user.height: must be positive, got {}", self.user.height));
        }
        let hm = self.head_motion();
        if !(hm.yaw_period > 0.0 && hm.pitch_period > 0.0) {
            issues.push("head_motion: periods must be positive".into());
        }
        if !(hm.pitch_amplitude.abs() + 4.0 * hm.jitter_std < 1.2) {
            issues.push("head_motion.pitch_amplitude: too large".into());
        }
        if hm.jitter_std < 0.0 || hm.imu_noise_std < 0.0 {
            issues.push("head_motion: noise levels must be non-negative".into());
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            if !(v.spawn_time >= 0.0 && v.spawn_time < self.duration) {
                issues.push(format!("vehicles[{i}].spawn_time: {} outside [0, {})", v.spawn_time, self.duration));
            }
            if !(v.speed >= 0.0) {
                issues.push(format!("vehicles[{i}].speed: must be non-negative, got {}", v.speed));
            }
            let (w, h) = v.dimensions();
            if !(w > 0.0 && h > 0.0) {
                issues.push(format!("vehicles[{i}]: width and height must be positive"));
            }
            match v.profile {
                SpeedProfile::Constant => {}
                SpeedProfile::DecelerateAt { rate, min_speed, .. } => {
                    if !(rate > 0.0) || !(min_speed >= 0.0) {
                        issues.push(format!("vehicles[{i}].profile: rate must be positive and min_speed non-negative"));
                    }
                }
                SpeedProfile::LaneChangeAt { duration, .. } => {
                    if !(duration >= 0.0) {
                        issues.push(format!("vehicles[{i}].profile.duration: must be non-negative"));
                    }
                }
            }
        }
        let fov = self.fov();
        if !(fov > 0.0 && fov < std::f64::consts::PI) {
            issues.push(format!("detector.fov: must be in (0, pi), got {fov}"));
        }
        if let Err(e) = self.detector.validate() {
            issues.push(e);
        }
        if let Err(e) = self.camera.intrinsics.validate(self.camera.image_width, self.camera.image_height) {
            issues.push(format!("camera.intrinsics: {e}"));
        }
        if !(self.camera.camera_height > 0.0) {
            issues.push(format!("camera.camera_height: must be positive, got {}", self.camera.camera_height));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(InvalidConfig { issues })
        }
    }
}

/// One blink's payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub pose: ImuPose,
    pub detections: Vec<BoundingBox2D>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthObject {
    pub id: u64,
    pub class: ObjectClass,
    /// User-frame position, m.
    pub x: f64,
    pub z: f64,
    /// Velocity relative to the user, m/s.
    pub vx: f64,
    pub vz: f64,
    pub height: f64,
}

impl TruthObject {
    pub fn range(&self) -> f64 {
        self.x.hypot(self.z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthTick {
    pub t: f64,
    pub objects: Vec<TruthObject>,
    pub true_pose: ImuPose,
}
