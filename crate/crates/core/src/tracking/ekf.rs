//! Constant-velocity EKF in the user ground plane.
//!
//! State is `[x, z, vx, vz]` in meters and meters/second; the measurement is
//! the pixel triple produced by [`geometry::project_observation`].

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, Vector3, Vector4};

use crate::geometry::{self, CameraIntrinsics, ImuPose, Observation};

use super::TrackingError;

/// Innovation covariances with a larger eigenvalue spread are rejected.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackState {
    pub x: Vector4<f64>,
    pub p: Matrix4<f64>,
}

impl TrackState {
    pub fn new(x: f64, z: f64, vx: f64, vz: f64, p: Matrix4<f64>) -> Self {
        Self { x: Vector4::new(x, z, vx, vz), p }
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x[0], self.x[1])
    }

    pub fn velocity(&self) -> (f64, f64) {
        (self.x[2], self.x[3])
    }

    pub fn range(&self) -> f64 {
        self.x[0].hypot(self.x[1])
    }

    pub fn confidence(&self, gamma: f64) -> f64 {
        confidence(&self.p, gamma)
    }
}

/// Tracking confidence `1 / (tr(P) + γ)`.
pub fn confidence(p: &Matrix4<f64>, gamma: f64) -> f64 {
    1.0 / (p.trace() + gamma)
}

pub fn transition(dt: f64) -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    f
}

/// White-noise-acceleration process noise with spectral density `q`.
pub fn process_noise(dt: f64, q: f64) -> Matrix4<f64> {
    let pos = q * dt.powi(3) / 3.0;
    let cross = q * dt * dt / 2.0;
    let vel = q * dt;
    let mut m = Matrix4::zeros();
    for (a, b) in [(0, 2), (1, 3)] {
        m[(a, a)] = pos;
        m[(a, b)] = cross;
        m[(b, a)] = cross;
        m[(b, b)] = vel;
    }
    m
}

fn symmetrize(p: &Matrix4<f64>) -> Matrix4<f64> {
    (p + p.transpose()) * 0.5
}

/// Propagates the state `dt` seconds ahead.
pub fn predict(state: &TrackState, dt: f64, q: f64) -> TrackState {
    let f = transition(dt);
    TrackState {
        x: f * state.x,
        p: symmetrize(&(f * state.p * f.transpose() + process_noise(dt, q))),
    }
}

/// Measurement Jacobian `∂h/∂X`, 3×4 with zero velocity columns.
pub fn observation_jacobian(
    state: &TrackState,
    obj_height: f64,
    pose: &ImuPose,
    intr: &CameraIntrinsics,
    camera_height: f64,
) -> Result<DMatrix<f64>, TrackingError> {
    let j = geometry::observation_jacobian(state.x[0], state.x[1], obj_height, pose, intr, camera_height)?;
    let mut h = DMatrix::zeros(3, 4);
    for (r, row) in j.iter().enumerate() {
        h[(r, 0)] = row[0];
        h[(r, 1)] = row[1];
    }
    Ok(h)
}

/// Generic Kalman correction given a residual, its Jacobian and noise.
///
/// Uses the Joseph form so the posterior stays symmetric positive
/// semi-definite.
pub fn correct(
    state: &TrackState,
    innovation: &DVector<f64>,
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<TrackState, TrackingError> {
    let p = DMatrix::from_column_slice(4, 4, state.p.as_slice());
    let s = h * &p * h.transpose() + r;
    let s = (&s + s.transpose()) * 0.5;

    let eig = s.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > 0.0) || max / min > MAX_INNOVATION_CONDITION {
        return Err(TrackingError::SingularInnovation { condition: if min > 0.0 { max / min } else { f64::INFINITY } });
    }
    let s_inv = s
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(TrackingError::SingularInnovation { condition: f64::INFINITY })?;

    let k = &p * h.transpose() * s_inv;
    let dx = &k * innovation;
    let ikh = DMatrix::<f64>::identity(4, 4) - &k * h;
    let p_post = &ikh * &p * ikh.transpose() + &k * r * k.transpose();

    let x = state.x + Vector4::from_column_slice(dx.as_slice());
    let p_post = Matrix4::from_column_slice(p_post.as_slice());
    Ok(TrackState { x, p: symmetrize(&p_post) })
}

/// EKF update with the pixel observation model.
pub fn update(
    state: &TrackState,
    obs: &Observation,
    obj_height: f64,
    pose: &ImuPose,
    intr: &CameraIntrinsics,
    camera_height: f64,
    r: &Matrix3<f64>,
) -> Result<TrackState, TrackingError> {
    let predicted =
        geometry::project_observation(state.x[0], state.x[1], obj_height, pose, intr, camera_height)?;
    let residual = Vector3::from(obs.to_array()) - Vector3::from(predicted.to_array());
    let h = observation_jacobian(state, obj_height, pose, intr, camera_height)?;
    let r = DMatrix::from_column_slice(3, 3, r.as_slice());
    correct(state, &DVector::from_column_slice(residual.as_slice()), &h, &r)
}
