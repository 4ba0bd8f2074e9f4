//! Tracking of rear-approaching road users from sparse monocular samples.
//!
//! Each sample ("blink") is one camera frame reduced to its 2D detections
//! plus the IMU head pose at capture time. Detections are lifted to the
//! user's body frame through horizon-referenced depth, associated to tracks
//! with Kuhn-Munkres over IoU and filtered with an EKF. A tabular SARSA
//! agent decides at each tick whether to take the next blink, and a radial
//! time-to-collision rule raises alerts. The [`scenario`] and [`eval`]
//! modules provide a synthetic traffic world and a comparison harness.

// config checks are written `!(x > 0.0)` so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b, tol): (f64, f64, f64) = ($a, $b, $tol);
        assert!((a - b).abs() <= tol, "{} vs {} (tol {})", a, b, tol);
    }};
}

pub mod cli;
pub mod config;
pub mod eval;
pub mod geometry;
pub mod risk;
pub mod sampler;
pub mod scenario;
pub mod tracking;

pub use geometry::{BoundingBox2D, CameraIntrinsics, ImuPose, ObjectClass, Observation};
pub use risk::{RiskAssessment, RiskConfig};
pub use sampler::{Action, QTable, SamplerConfig, SamplerState, SarsaAgent};
pub use scenario::{Frame, GroundTruthTick, ScenarioConfig};
pub use tracking::{Track, TrackSnapshot, Tracker, TrackerConfig};
