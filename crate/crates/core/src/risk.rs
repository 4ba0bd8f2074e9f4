//! Radial time-to-collision and alerting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tracking::TrackSnapshot;

/// Radial speeds below this (m²/s, as `x·ẋ + z·ż`) count as tangential.
const RADIAL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RiskError {
    #[error("time to collision is undefined at the user's position")]
    DegeneratePosition,
}

/// Time to collision; positive when approaching, negative when receding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "seconds", rename_all = "snake_case")]
pub enum Ttc {
    Seconds(f64),
    NonApproaching,
}

impl Ttc {
    pub fn seconds(&self) -> Option<f64> {
        match self {
            Ttc::Seconds(s) => Some(*s),
            Ttc::NonApproaching => None,
        }
    }
}

pub fn ttc(x: f64, z: f64, vx: f64, vz: f64) -> Result<Ttc, RiskError> {
    let r2 = x * x + z * z;
    if r2 == 0.0 {
        return Err(RiskError::DegeneratePosition);
    }
    let radial = x * vx + z * vz;
    if radial.abs() < RADIAL_EPS {
        return Ok(Ttc::NonApproaching);
    }
    Ok(Ttc::Seconds(-r2 / radial))
}

/// `κ = max(0, 1 − t/t_r)` for approaching objects; receding and tangential
/// motion carry no risk.
pub fn risk_level(ttc: Ttc, t_r: f64) -> f64 {
    match ttc {
        Ttc::Seconds(t) if t > 0.0 => (1.0 - t / t_r).clamp(0.0, 1.0),
        _ => 0.0,
    }
}

/// Risk of a point with velocity; an object sitting on the user is maximal
/// risk.
pub fn kinematic_risk(x: f64, z: f64, vx: f64, vz: f64, t_r: f64) -> (Ttc, f64) {
    match ttc(x, z, vx, vz) {
        Ok(t) => (t, risk_level(t, t_r)),
        Err(RiskError::DegeneratePosition) => (Ttc::Seconds(0.0), 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    /// Risk sensitivity horizon `t_r`, s.
    pub t_r: f64,
    /// Alert when the overall risk reaches this level.
    pub alert_threshold: f64,
}

impl Default for RiskConfig {
    fn default() -> Self {
        Self { t_r: 3.3, alert_threshold: 0.01 }
    }
}

impl RiskConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.t_r > 0.0) {
            return Err(format!("risk.t_r must be positive, got {}", self.t_r));
        }
        if !(self.alert_threshold > 0.0 && self.alert_threshold <= 1.0) {
            return Err(format!("risk.alert_threshold must be in (0, 1], got {}", self.alert_threshold));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectRisk {
    pub track_id: u64,
    pub ttc: Ttc,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskAssessment {
    pub per_object: Vec<ObjectRisk>,
    pub gamma_overall: f64,
    pub alert: bool,
    pub timestamp: f64,
}

impl RiskAssessment {
    /// Ids of objects at or above the alert threshold.
    pub fn causes(&self, threshold: f64) -> Vec<u64> {
        self.per_object.iter().filter(|o| o.kappa >= threshold).map(|o| o.track_id).collect()
    }
}

pub fn assess(tracks: &[TrackSnapshot], config: &RiskConfig, now: f64) -> RiskAssessment {
    let per_object: Vec<ObjectRisk> = tracks
        .iter()
        .map(|t| {
            let (ttc, kappa) = kinematic_risk(t.x, t.z, t.vx, t.vz, config.t_r);
            ObjectRisk { track_id: t.id, ttc, kappa }
        })
        .collect();
    let gamma_overall = per_object.iter().map(|o| o.kappa).fold(0.0, f64::max);
    RiskAssessment {
        alert: gamma_overall >= config.alert_threshold,
        per_object,
        gamma_overall,
        timestamp: now,
    }
}
