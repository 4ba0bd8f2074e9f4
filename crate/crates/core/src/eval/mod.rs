//! Replays a trace through sampler, tracker and risk assessment and scores
//! the alerts against danger labels computed from ground truth.
//!
//! Every tick after the warm-up is one assessment. A tick is dangerous when
//! the alert rule, applied to the true states of objects within `d_max`,
//! fires. Alongside these tick counts, approach episodes (maximal runs of
//! dangerous ticks) and alert episodes (maximal runs of alert ticks) give an
//! event-level view.

mod compare;
mod policy;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::risk::{assess, kinematic_risk, RiskConfig};
use crate::sampler::{QTable, SamplerConfig};
use crate::scenario::{Frame, GroundTruthTick, Light, Road, TraceHeader, UserMode};
use crate::tracking::{TrackSnapshot, Tracker, TrackerConfig, TrackingError};

pub use compare::{compare, matched_baselines, Aggregate, AxisBreakdown, Comparison, SUMMARY_POWER_NOTE};
pub use policy::{Policy, SamplerKind};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("config error: {0}")]
    Config(String),
    #[error("trace and truth are not aligned: {0}")]
    Misaligned(String),
    #[error(transparent)]
    Tracking(#[from] TrackingError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub tracker: TrackerConfig,
    pub risk: RiskConfig,
    pub sampler: SamplerConfig,
    /// Ticks before this time train the sampler and the tracker but are not
    /// scored, s.
    pub warmup_s: f64,
    /// Tracks farther than this from a true object do not count as its
    /// estimate, m.
    pub match_radius: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tracker: TrackerConfig::default(),
            risk: RiskConfig::default(),
            sampler: SamplerConfig::default(),
            warmup_s: 60.0,
            match_radius: 5.0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        self.tracker.validate().map_err(EvalError::Config)?;
        self.risk.validate().map_err(EvalError::Config)?;
        self.sampler.validate().map_err(EvalError::Config)?;
        if !(self.warmup_s >= 0.0) {
            return Err(EvalError::Config(format!("warmup_s must be non-negative, got {}", self.warmup_s)));
        }
        if !(self.match_radius > 0.0) {
            return Err(EvalError::Config(format!("match_radius must be positive, got {}", self.match_radius)));
        }
        Ok(())
    }
}

/// Danger label of one ground-truth tick: the alert rule applied to the true
/// states of objects within `d_max`.
pub fn ground_truth_danger(tick: &GroundTruthTick, risk: &RiskConfig, d_max: f64) -> bool {
    truth_gamma(tick, risk, d_max) >= risk.alert_threshold
}

/// Overall risk of the true objects within `d_max`.
pub fn truth_gamma(tick: &GroundTruthTick, risk: &RiskConfig, d_max: f64) -> f64 {
    tick.objects
        .iter()
        .filter(|o| o.range() <= d_max)
        .map(|o| kinematic_risk(o.x, o.z, o.vx, o.vz, risk.t_r).1)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTags {
    pub name: String,
    pub seed: u64,
    pub mode: UserMode,
    pub road: Road,
    pub light: Light,
    pub n_cars: usize,
    pub n_cycles: usize,
}

impl ScenarioTags {
    pub fn from_header(h: &TraceHeader) -> Self {
        Self { name: h.name.clone(), seed: h.seed, mode: h.mode, road: h.road, light: h.light, n_cars: h.n_cars, n_cycles: h.n_cycles }
    }

    /// `cars`, `cycles` or `mixed`.
    pub fn vehicle_mix(&self) -> &'static str {
        match (self.n_cars, self.n_cycles) {
            (_, 0) => "cars",
            (0, _) => "cycles",
            _ => "mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EventCounts {
    /// Maximal runs of dangerous ticks.
    pub episodes: u64,
    /// Episodes with no alert on any of their ticks.
    pub missed_episodes: u64,
    /// Maximal runs of alert ticks.
    pub alert_episodes: u64,
    /// Alert episodes overlapping no dangerous tick.
    pub false_alert_episodes: u64,
}

impl EventCounts {
    pub fn fnr(&self) -> f64 {
        ratio(self.missed_episodes, self.episodes)
    }

    pub fn fpr(&self) -> f64 {
        ratio(self.false_alert_episodes, self.alert_episodes)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: ScenarioTags,
    pub sampler: String,
    pub seed: u64,
    pub n_ticks: u64,
    pub n_warmup_ticks: u64,
    /// Scored ticks.
    pub n_assessments: u64,
    pub n_fp: u64,
    pub n_fn: u64,
    pub n_tp: u64,
    pub fpr: f64,
    pub fnr: f64,
    /// Blinks in the scored window.
    pub blink_count: u64,
    pub warmup_blink_count: u64,
    /// `blink_count / n_assessments`; 1 for a sampler that blinks every tick.
    pub blink_fraction: f64,
    /// Blinks imposed by the maximum-gap rule.
    pub forced_blinks: u64,
    /// Mean distance between true objects within `d_max` and their nearest
    /// track, over scored ticks; None when nothing was matched.
    pub mean_tracking_error: Option<f64>,
    pub tracking_samples: u64,
    pub events: EventCounts,
    pub event_fnr: f64,
    pub event_fpr: f64,
}

/// One alert tick with the tracks that caused it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertEvent {
    pub t: f64,
    pub gamma: f64,
    pub causes: Vec<u64>,
    pub dangerous: bool,
    pub scored: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub alerts: Vec<AlertEvent>,
    /// Final table of a learning sampler.
    pub q_table: Option<QTable>,
}

/// Greedy nearest-pair association of true positions to tracks within
/// `radius`; returns the matched distances.
pub fn tracking_errors(truth: &[(f64, f64)], tracks: &[TrackSnapshot], radius: f64) -> Vec<f64> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &(x, z)) in truth.iter().enumerate() {
        for (j, t) in tracks.iter().enumerate() {
            let d = (t.x - x).hypot(t.z - z);
            if d <= radius {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_t = vec![false; truth.len()];
    let mut used_k = vec![false; tracks.len()];
    let mut out = Vec::new();
    for (d, i, j) in pairs {
        if !used_t[i] && !used_k[j] {
            used_t[i] = true;
            used_k[j] = true;
            out.push(d);
        }
    }
    out
}

/// Counts maximal runs of `true` and how many of them satisfy `hit`.
fn runs(flags: &[bool], hit: impl Fn(usize, usize) -> bool) -> (u64, u64) {
    let (mut total, mut hits) = (0, 0);
    let mut k = 0;
    while k < flags.len() {
        if flags[k] {
            let start = k;
            while k < flags.len() && flags[k] {
                k += 1;
            }
            total += 1;
            if hit(start, k) {
                hits += 1;
            }
        } else {
            k += 1;
        }
    }
    (total, hits)
}

/// Event-level counts from per-tick danger labels and alerts.
pub fn event_counts(danger: &[bool], alert: &[bool]) -> EventCounts {
    let (episodes, detected) = runs(danger, |a, b| alert[a..b].iter().any(|&x| x));
    let (alert_episodes, true_alerts) = runs(alert, |a, b| danger[a..b].iter().any(|&x| x));
    EventCounts {
        episodes,
        missed_episodes: episodes - detected,
        alert_episodes,
        false_alert_episodes: alert_episodes - true_alerts,
    }
}

/// Runs one sampler over an aligned trace.
///
/// `initial_q` seeds a learning sampler's table (it keeps learning from it).
pub fn run_pipeline(
    header: &TraceHeader,
    frames: &[Frame],
    truth: &[GroundTruthTick],
    kind: &SamplerKind,
    config: &EvalConfig,
    seed: u64,
    initial_q: Option<QTable>,
) -> Result<RunOutput, EvalError> {
    config.validate()?;
    kind.validate()?;
    if frames.len() != truth.len() {
        return Err(EvalError::Misaligned(format!("{} frames vs {} truth ticks", frames.len(), truth.len())));
    }
    if let Some(k) = frames.iter().zip(truth).position(|(f, g)| (f.t - g.t).abs() > 1e-9) {
        return Err(EvalError::Misaligned(format!("tick {k}: frame t={} vs truth t={}", frames[k].t, truth[k].t)));
    }

    let mut tracker = Tracker::new(config.tracker.clone(), header.intrinsics, header.camera_height);
    let mut policy = Policy::new(kind, &config.sampler, initial_q, seed);
    let d_max = config.tracker.d_max;

    let mut last_blink = f64::NEG_INFINITY;
    let (mut n_warm, mut blink_count, mut warmup_blinks) = (0u64, 0u64, 0u64);
    let (mut n_fp, mut n_fn, mut n_tp) = (0u64, 0u64, 0u64);
    let mut err_sum = 0.0;
    let mut err_n = 0u64;
    let mut danger_flags = Vec::new();
    let mut alert_flags = Vec::new();
    let mut alerts = Vec::new();

    for (frame, gt) in frames.iter().zip(truth) {
        let now = frame.t;
        let scored = now >= config.warmup_s - 1e-9;
        let predicted = tracker.preview(now);
        let action = policy.decide(&predicted, now, last_blink);
        let tracks = if action.is_blink() {
            last_blink = now;
            if scored {
                blink_count += 1;
            } else {
                warmup_blinks += 1;
            }
            tracker.step(frame)?
        } else {
            predicted
        };

        let assessment = assess(&tracks, &config.risk, now);
        let danger = ground_truth_danger(gt, &config.risk, d_max);
        if assessment.alert {
            alerts.push(AlertEvent {
                t: now,
                gamma: assessment.gamma_overall,
                causes: assessment.causes(config.risk.alert_threshold),
                dangerous: danger,
                scored,
            });
        }
        if !scored {
            n_warm += 1;
            continue;
        }
        match (assessment.alert, danger) {
            (true, false) => n_fp += 1,
            (false, true) => n_fn += 1,
            (true, true) => n_tp += 1,
            (false, false) => {}
        }
        danger_flags.push(danger);
        alert_flags.push(assessment.alert);

        let near: Vec<(f64, f64)> = gt.objects.iter().filter(|o| o.range() <= d_max).map(|o| (o.x, o.z)).collect();
        for d in tracking_errors(&near, &tracks, config.match_radius) {
            err_sum += d;
            err_n += 1;
        }
    }

    let n_a = danger_flags.len() as u64;
    let events = event_counts(&danger_flags, &alert_flags);
    let report = RunReport {
        scenario: ScenarioTags::from_header(header),
        sampler: kind.label(),
        seed,
        n_ticks: frames.len() as u64,
        n_warmup_ticks: n_warm,
        n_assessments: n_a,
        n_fp,
        n_fn,
        n_tp,
        fpr: ratio(n_fp, n_a),
        fnr: ratio(n_fn, n_a),
        blink_count,
        warmup_blink_count: warmup_blinks,
        blink_fraction: ratio(blink_count, n_a),
        forced_blinks: policy.forced_blinks(),
        mean_tracking_error: (err_n > 0).then(|| err_sum / err_n as f64),
        tracking_samples: err_n,
        event_fnr: events.fnr(),
        event_fpr: events.fpr(),
        events,
    };
    Ok(RunOutput { report, alerts, q_table: policy.into_q_table() })
}

/// Trains a learning sampler by running it over `scenarios` in order,
/// carrying its table from one to the next. Nothing is scored.
pub fn train_sarsa(
    scenarios: &[crate::scenario::Scenario],
    config: &EvalConfig,
    seed: u64,
    initial_q: Option<QTable>,
) -> Result<QTable, EvalError> {
    let config = EvalConfig { warmup_s: 0.0, ..config.clone() };
    let mut q = initial_q.unwrap_or_default();
    for (i, sc) in scenarios.iter().enumerate() {
        let out = run_pipeline(&sc.header, &sc.frames, &sc.truth, &SamplerKind::Sarsa, &config, seed.wrapping_add(i as u64), Some(q))?;
        q = out.q_table.expect("learning sampler returns its table");
    }
    Ok(q)
}

/// Seeded RNG for a sampler, independent of the scenario's own streams.
pub(crate) fn sampler_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(11);
    rng
}
