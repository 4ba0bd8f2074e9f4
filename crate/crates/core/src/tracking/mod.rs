//! Multi-object tracking in the user frame: IoU association plus one EKF
//! per object.

pub mod assignment;
pub mod ekf;
mod tracker;

use thiserror::Error;

use crate::geometry::GeometryError;

pub use assignment::{max_weight_matching, pairs_total, Assignment};
pub use ekf::{confidence, TrackState};
pub use tracker::{match_tracks, Track, TrackSnapshot, Tracker, TrackerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum TrackingError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("innovation covariance is numerically singular (condition {condition:e})")]
    SingularInnovation { condition: f64 },
    #[error("frame time {current} does not follow previous frame time {previous}")]
    NonMonotonicTime { previous: f64, current: f64 },
}
