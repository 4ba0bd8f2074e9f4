use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sampler::{least_confident, Action, QTable, SamplerConfig, SarsaAgent};
use crate::tracking::TrackSnapshot;

use super::{sampler_rng, EvalError};

/// Blink scheduling strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerKind {
    /// Blink on every tick.
    EveryFrame,
    /// Blink once per `period_ticks` ticks on average, starting at the first
    /// tick; fractional periods alternate between neighbouring gaps.
    Interval { period_ticks: f64 },
    /// Blink with probability `p` on each tick.
    Random { p: f64 },
    /// Blink while the least confident track is below `c_min`, and whenever
    /// the maximum gap has elapsed.
    ConfidenceThreshold { c_min: f64 },
    /// Learned policy.
    Sarsa,
}

impl SamplerKind {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::Config(m));
        match *self {
            SamplerKind::Interval { period_ticks } if !(period_ticks >= 1.0) => {
                bad(format!("interval period_ticks must be >= 1, got {period_ticks}"))
            }
            SamplerKind::Random { p } if !(0.0..=1.0).contains(&p) => bad(format!("random p must be in [0, 1], got {p}")),
            SamplerKind::ConfidenceThreshold { c_min } if !(c_min >= 0.0) => {
                bad(format!("confidence c_min must be non-negative, got {c_min}"))
            }
            _ => Ok(()),
        }
    }

    /// Short stable name used in reports.
    pub fn label(&self) -> String {
        self.to_string()
    }

    pub fn is_learning(&self) -> bool {
        matches!(self, SamplerKind::Sarsa)
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplerKind::EveryFrame => write!(f, "every_frame"),
            SamplerKind::Interval { period_ticks } => write!(f, "interval:{period_ticks}"),
            SamplerKind::Random { p } => write!(f, "random:{p}"),
            SamplerKind::ConfidenceThreshold { c_min } => write!(f, "confidence:{c_min}"),
            SamplerKind::Sarsa => write!(f, "sarsa"),
        }
    }
}

/// Parses `name[:param]`, e.g. `interval:4`, `random:0.25`, `sarsa`.
impl FromStr for SamplerKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let num = |default: f64| -> Result<f64, EvalError> {
            param.map_or(Ok(default), |p| {
                p.parse().map_err(|_| EvalError::Config(format!("bad parameter `{p}` for sampler `{name}`")))
            })
        };
        let kind = match name {
            "every_frame" | "every-frame" => SamplerKind::EveryFrame,
            "interval" => SamplerKind::Interval { period_ticks: num(4.0)? },
            "random" => SamplerKind::Random { p: num(0.25)? },
            "confidence" | "confidence_threshold" => SamplerKind::ConfidenceThreshold { c_min: num(0.1)? },
            "sarsa" => SamplerKind::Sarsa,
            other => return Err(EvalError::Config(format!("unknown sampler `{other}`"))),
        };
        if matches!(kind, SamplerKind::EveryFrame | SamplerKind::Sarsa) && param.is_some() {
            return Err(EvalError::Config(format!("sampler `{name}` takes no parameter")));
        }
        kind.validate()?;
        Ok(kind)
    }
}

/// A sampler with its run-time state.
#[derive(Debug, Clone)]
pub enum Policy {
    EveryFrame,
    Interval { period: f64, credit: f64 },
    Random { p: f64, rng: Box<ChaCha8Rng> },
    ConfidenceThreshold { c_min: f64, dt_max: Option<f64>, forced: u64 },
    Sarsa(Box<SarsaAgent>),
}

impl Policy {
    pub fn new(kind: &SamplerKind, config: &SamplerConfig, initial_q: Option<QTable>, seed: u64) -> Self {
        match *kind {
            SamplerKind::EveryFrame => Policy::EveryFrame,
            SamplerKind::Interval { period_ticks } => Policy::Interval { period: period_ticks, credit: period_ticks },
            SamplerKind::Random { p } => Policy::Random { p, rng: Box::new(sampler_rng(seed)) },
            SamplerKind::ConfidenceThreshold { c_min } => {
                Policy::ConfidenceThreshold { c_min, dt_max: config.dt_max, forced: 0 }
            }
            SamplerKind::Sarsa => {
                let q = initial_q.unwrap_or_default();
                Policy::Sarsa(Box::new(SarsaAgent::with_table(config.clone(), q, seed)))
            }
        }
    }

    pub fn decide(&mut self, tracks: &[TrackSnapshot], now: f64, last_blink: f64) -> Action {
        let blink = match self {
            Policy::EveryFrame => true,
            Policy::Interval { period, credit } => {
                let fire = *credit >= *period - 1e-9;
                if fire {
                    *credit -= *period;
                }
                *credit += 1.0;
                fire
            }
            Policy::Random { p, rng } => rng.random::<f64>() < *p,
            Policy::ConfidenceThreshold { c_min, dt_max, forced } => {
                let low = least_confident(tracks).is_some_and(|t| t.confidence < *c_min);
                let stale = dt_max.is_some_and(|d| now - last_blink >= d - 1e-9);
                if stale && !low {
                    *forced += 1;
                }
                low || stale
            }
            Policy::Sarsa(agent) => return agent.tick(tracks, now, last_blink),
        };
        if blink {
            Action::Blink
        } else {
            Action::Skip
        }
    }

    pub fn forced_blinks(&self) -> u64 {
        match self {
            Policy::ConfidenceThreshold { forced, .. } => *forced,
            Policy::Sarsa(agent) => agent.forced_blinks(),
            _ => 0,
        }
    }

    pub fn into_q_table(self) -> Option<QTable> {
        match self {
            Policy::Sarsa(agent) => Some(agent.into_q_table()),
            _ => None,
        }
    }
}
