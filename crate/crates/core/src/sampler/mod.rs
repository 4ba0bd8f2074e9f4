//! Blink scheduling as a small MDP solved online with tabular SARSA.
//!
//! The state is the lowest track confidence, the range of that track and
//! the time since the last blink, each discretized by an edge table. The
//! agent picks `Skip` or `Blink` every decision tick.

mod agent;
mod qtable;

use serde::{Deserialize, Serialize};

use crate::tracking::TrackSnapshot;

pub use agent::{choose_action, epsilon, reward, sarsa_update, SarsaAgent};
pub use qtable::{QEntry, QTable, QTableError, QTABLE_HEADER};

/// Slack on elapsed-time binning so that accumulated float error in tick
/// times does not push a value just under an edge.
const TIME_EDGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Skip = 0,
    Blink = 1,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Skip, Action::Blink];

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Action::Skip),
            1 => Some(Action::Blink),
            _ => None,
        }
    }

    pub fn is_blink(self) -> bool {
        self == Action::Blink
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SamplerState {
    pub conf_bin: u8,
    pub dist_bin: u8,
    pub dt_bin: u8,
}

impl SamplerState {
    pub fn new(conf_bin: u8, dist_bin: u8, dt_bin: u8) -> Self {
        Self { conf_bin, dist_bin, dt_bin }
    }
}

/// Index of the bin holding `value`: the number of edges `<= value`, so a
/// value on an edge lands in the upper bin.
pub fn bin_index(edges: &[f64], value: f64) -> u8 {
    edges.iter().take_while(|&&e| e <= value).count() as u8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Reward added for each blink (a cost, so non-positive).
    pub sample_cost: f64,
    pub epsilon0: f64,
    pub eta: f64,
    /// Discount factor.
    pub beta: f64,
    pub conf_edges: Vec<f64>,
    /// Range edges, m.
    pub dist_edges: Vec<f64>,
    /// Elapsed-time edges, s.
    pub dt_edges: Vec<f64>,
    /// Blink unconditionally once this long has passed without one, s.
    pub dt_max: Option<f64>,
    pub learning: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            sample_cost: -0.05,
            epsilon0: 1.0,
            eta: 0.1,
            beta: 0.9,
            conf_edges: vec![0.02, 0.1, 0.5],
            dist_edges: vec![5.0, 10.0, 20.0],
            dt_edges: vec![0.2, 0.5, 1.0],
            dt_max: Some(2.0),
            learning: true,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.sample_cost <= 0.0) {
            return Err(format!("sampler.sample_cost must be <= 0, got {}", self.sample_cost));
        }
        if !(self.epsilon0 > 0.0 && self.epsilon0 <= 1.0) {
            return Err(format!("sampler.epsilon0 must be in (0, 1], got {}", self.epsilon0));
        }
        if !(self.eta > 0.0) {
            return Err(format!("sampler.eta must be > 0, got {}", self.eta));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(format!("sampler.beta must be in [0, 1), got {}", self.beta));
        }
        for (name, edges) in [
            ("conf_edges", &self.conf_edges),
            ("dist_edges", &self.dist_edges),
            ("dt_edges", &self.dt_edges),
        ] {
            if edges.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(format!("sampler.{name} must be strictly increasing"));
            }
            if edges.len() > 200 {
                return Err(format!("sampler.{name} has too many edges"));
            }
        }
        if let Some(d) = self.dt_max {
            if !(d > 0.0) {
                return Err(format!("sampler.dt_max must be positive, got {d}"));
            }
        }
        Ok(())
    }

    /// Confidence bin reserved for "nothing tracked".
    pub fn no_tracks_bin(&self) -> u8 {
        self.conf_edges.len() as u8 + 1
    }

    pub fn farthest_dist_bin(&self) -> u8 {
        self.dist_edges.len() as u8
    }
}

/// Track with the lowest confidence, ties going to the lower id.
pub fn least_confident(tracks: &[TrackSnapshot]) -> Option<&TrackSnapshot> {
    tracks.iter().min_by(|a, b| a.confidence.total_cmp(&b.confidence).then(a.id.cmp(&b.id)))
}

pub fn observe_state(tracks: &[TrackSnapshot], now: f64, last_blink: f64, config: &SamplerConfig) -> SamplerState {
    let elapsed = (now - last_blink).max(0.0);
    let dt_bin = bin_index(&config.dt_edges, elapsed + TIME_EDGE_SLACK);
    match least_confident(tracks) {
        None => SamplerState::new(config.no_tracks_bin(), config.farthest_dist_bin(), dt_bin),
        Some(t) => SamplerState::new(
            bin_index(&config.conf_edges, t.confidence),
            bin_index(&config.dist_edges, t.range),
            dt_bin,
        ),
    }
}
