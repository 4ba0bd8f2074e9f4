use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::geometry::{
    self, backproject, camera_to_user, estimate_depth_with, BoundingBox2D, CameraIntrinsics,
    DepthLimits, ImuPose, ObjectClass, Observation,
};
use crate::scenario::Frame;

use super::assignment::{max_weight_matching, Assignment};
use super::ekf::{self, TrackState};
use super::TrackingError;

/// Number of height samples after which the running mean turns into an
/// exponential average.
const HEIGHT_WINDOW: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Process-noise spectral density for cars, m²/s³.
    pub q_car: f64,
    /// Process-noise spectral density for cycles, m²/s³.
    pub q_cycle: f64,
    /// Measurement-noise variances (u offset, pixel height, horizon
    /// deviation), px².
    pub r_diag: [f64; 3],
    /// Initial covariance diagonal `(x, z, vx, vz)`.
    pub p0_diag: [f64; 4],
    pub iou_gate: f64,
    /// Tracks missed on more than this many consecutive blinks are dropped.
    pub miss_max: u32,
    pub gamma: f64,
    /// Tracks farther than this from the user are dropped, m.
    pub d_max: f64,
    pub depth_limits: DepthLimits,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            q_car: 2.0,
            q_cycle: 1.0,
            r_diag: [16.0, 9.0, 9.0],
            p0_diag: [4.0, 4.0, 16.0, 16.0],
            iou_gate: 0.1,
            miss_max: 3,
            gamma: 1e-6,
            d_max: 30.0,
            depth_limits: DepthLimits::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.q_car >= 0.0 && self.q_cycle >= 0.0) {
            return Err("tracker.q_car and tracker.q_cycle must be non-negative".into());
        }
        if self.r_diag.iter().any(|&v| !(v > 0.0)) {
            return Err("tracker.r_diag entries must be positive".into());
        }
        if self.p0_diag.iter().any(|&v| !(v > 0.0)) {
            return Err("tracker.p0_diag entries must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.iou_gate) {
            return Err(format!("tracker.iou_gate must be in [0, 1], got {}", self.iou_gate));
        }
        if !(self.gamma > 0.0) {
            return Err("tracker.gamma must be positive".into());
        }
        if !(self.d_max > 0.0) {
            return Err("tracker.d_max must be positive".into());
        }
        Ok(())
    }

    pub fn process_noise_for(&self, class: ObjectClass) -> f64 {
        match class {
            ObjectClass::Car => self.q_car,
            ObjectClass::Cycle => self.q_cycle,
        }
    }

    pub fn measurement_noise(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::from(self.r_diag))
    }

    pub fn initial_covariance(&self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&Vector4::from(self.p0_diag))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub state: TrackState,
    pub class: ObjectClass,
    /// Estimated physical height of the object, m.
    pub obj_height: f64,
    pub confidence: f64,
    pub miss_count: u32,
    /// Time of the last successful update, s.
    pub last_update: f64,
    /// Time the state refers to, s.
    pub time: f64,
    pub last_box: BoundingBox2D,
    /// Camera-frame depth at which `last_box` was observed, m.
    pub last_depth: f64,
    height_samples: u32,
}

impl Track {
    fn refresh_confidence(&mut self, gamma: f64) {
        self.confidence = self.state.confidence(gamma);
    }

    pub fn snapshot(&self) -> TrackSnapshot {
        let (x, z) = self.state.position();
        let (vx, vz) = self.state.velocity();
        TrackSnapshot {
            id: self.id,
            class: self.class,
            x,
            z,
            vx,
            vz,
            confidence: self.confidence,
            range: self.state.range(),
            obj_height: self.obj_height,
            miss_count: self.miss_count,
        }
    }

    /// Image box expected for this track under `pose`, or `None` when the
    /// predicted position is not in front of the camera.
    pub fn predicted_box(
        &self,
        pose: &ImuPose,
        intr: &CameraIntrinsics,
        camera_height: f64,
    ) -> Option<BoundingBox2D> {
        let (x, z) = self.state.position();
        let obs = geometry::project_observation(x, z, self.obj_height, pose, intr, camera_height).ok()?;
        let (_, depth) = geometry::user_to_camera_planar(x, z, pose.yaw);
        let scale = self.last_depth / depth;
        let u = intr.cx + obs.u_offset;
        let v = geometry::horizon_line(intr, pose.pitch) + obs.horizon_deviation;
        Some(BoundingBox2D::from_bottom_center(
            u,
            v,
            self.last_box.w * scale,
            self.last_box.h * scale,
            self.class,
        ))
    }
}

/// Plain view of a track at some instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSnapshot {
    pub id: u64,
    pub class: ObjectClass,
    pub x: f64,
    pub z: f64,
    pub vx: f64,
    pub vz: f64,
    pub confidence: f64,
    pub range: f64,
    pub obj_height: f64,
    pub miss_count: u32,
}

/// Associates tracks (in slice order) with detections by maximizing total
/// IoU between predicted and detected boxes. Pairs of different classes or
/// below `iou_gate` are never matched.
pub fn match_tracks(
    tracks: &[Track],
    detections: &[BoundingBox2D],
    pose: &ImuPose,
    intr: &CameraIntrinsics,
    camera_height: f64,
    iou_gate: f64,
) -> Assignment {
    let weights: Vec<Vec<f64>> = tracks
        .iter()
        .map(|t| {
            let predicted = t.predicted_box(pose, intr, camera_height);
            detections
                .iter()
                .map(|d| match predicted {
                    Some(p) if p.class == d.class => p.iou(d),
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    let pairs = max_weight_matching(&weights, iou_gate);

    let mut track_used = vec![false; tracks.len()];
    let mut det_used = vec![false; detections.len()];
    let mut out = Assignment::default();
    for &(i, j) in &pairs {
        track_used[i] = true;
        det_used[j] = true;
        out.pairs.push((tracks[i].id, j));
    }
    out.unmatched_tracks = tracks.iter().zip(&track_used).filter(|(_, u)| !**u).map(|(t, _)| t.id).collect();
    out.unmatched_detections = (0..detections.len()).filter(|&j| !det_used[j]).collect();
    out
}

/// Owns the live tracks of one pipeline.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    intrinsics: CameraIntrinsics,
    camera_height: f64,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<f64>,
}

impl Tracker {
    pub fn new(config: TrackerConfig, intrinsics: CameraIntrinsics, camera_height: f64) -> Self {
        Self { config, intrinsics, camera_height, tracks: Vec::new(), next_id: 1, last_frame: None }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.intrinsics
    }

    pub fn camera_height(&self) -> f64 {
        self.camera_height
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn snapshots(&self) -> Vec<TrackSnapshot> {
        self.tracks.iter().map(Track::snapshot).collect()
    }

    /// Tracks extrapolated to time `t` without touching the tracker.
    pub fn preview(&self, t: f64) -> Vec<TrackSnapshot> {
        self.tracks
            .iter()
            .map(|track| {
                let mut t2 = track.clone();
                self.predict_track(&mut t2, t);
                t2.snapshot()
            })
            .collect()
    }

    fn predict_track(&self, track: &mut Track, t: f64) {
        let dt = (t - track.time).max(0.0);
        track.state = ekf::predict(&track.state, dt, self.config.process_noise_for(track.class));
        track.time = t;
        track.refresh_confidence(self.config.gamma);
    }

    fn spawn(&mut self, det: &BoundingBox2D, pose: &ImuPose, t: f64) -> Option<u64> {
        let depth = estimate_depth_with(
            det,
            &self.intrinsics,
            pose.pitch,
            self.camera_height,
            &self.config.depth_limits,
        )
        .ok()?;
        let cam = backproject(det, depth, &self.intrinsics);
        let user = camera_to_user(&cam, pose.yaw);
        if user.planar_range() > self.config.d_max {
            return None;
        }
        let id = self.next_id;
        self.next_id += 1;
        let mut track = Track {
            id,
            state: TrackState::new(user.x, user.z, 0.0, 0.0, self.config.initial_covariance()),
            class: det.class,
            obj_height: det.h * depth / self.intrinsics.fy,
            confidence: 0.0,
            miss_count: 0,
            last_update: t,
            time: t,
            last_box: *det,
            last_depth: depth,
            height_samples: 1,
        };
        // P0 is the prior around the back-projected point; the detection
        // itself then tightens the position so later ones inform velocity
        self.apply_update(&mut track, det, pose, t).ok()?;
        track.height_samples = 1;
        self.tracks.push(track);
        Some(id)
    }

    fn apply_update(&self, track: &mut Track, det: &BoundingBox2D, pose: &ImuPose, t: f64) -> Result<(), TrackingError> {
        let obs = Observation::from_box(det, &self.intrinsics, pose.pitch);
        let state = ekf::update(
            &track.state,
            &obs,
            track.obj_height,
            pose,
            &self.intrinsics,
            self.camera_height,
            &self.config.measurement_noise(),
        )?;
        let (x, z) = state.position();
        let (_, depth) = geometry::user_to_camera_planar(x, z, pose.yaw);
        track.state = state;
        track.miss_count = 0;
        track.last_update = t;
        track.last_box = *det;
        if depth > 0.0 {
            track.last_depth = depth;
            track.height_samples += 1;
            let n = track.height_samples.min(HEIGHT_WINDOW) as f64;
            let sample = det.h * depth / self.intrinsics.fy;
            track.obj_height += (sample - track.obj_height) / n;
        }
        track.refresh_confidence(self.config.gamma);
        Ok(())
    }

    /// Consumes one blink: predict, associate, update, spawn, retire.
    pub fn step(&mut self, frame: &Frame) -> Result<Vec<TrackSnapshot>, TrackingError> {
        if let Some(prev) = self.last_frame {
            if !(frame.t > prev) {
                return Err(TrackingError::NonMonotonicTime { previous: prev, current: frame.t });
            }
        }
        self.last_frame = Some(frame.t);

        let mut tracks = std::mem::take(&mut self.tracks);
        for track in &mut tracks {
            self.predict_track(track, frame.t);
        }

        let assignment = match_tracks(
            &tracks,
            &frame.detections,
            &frame.pose,
            &self.intrinsics,
            self.camera_height,
            self.config.iou_gate,
        );

        let mut missed: Vec<u64> = assignment.unmatched_tracks.clone();
        for &(id, j) in &assignment.pairs {
            let track = tracks.iter_mut().find(|t| t.id == id).expect("assigned track exists");
            if self.apply_update(track, &frame.detections[j], &frame.pose, frame.t).is_err() {
                missed.push(id);
            }
        }
        for track in &mut tracks {
            if missed.contains(&track.id) {
                track.miss_count += 1;
            }
        }
        self.tracks = tracks;

        for &j in &assignment.unmatched_detections {
            self.spawn(&frame.detections[j], &frame.pose, frame.t);
        }

        let (miss_max, d_max) = (self.config.miss_max, self.config.d_max);
        self.tracks.retain(|t| t.miss_count <= miss_max && t.state.range() <= d_max);
        Ok(self.snapshots())
    }
}
