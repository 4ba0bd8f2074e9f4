use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sampler::QTable;
use crate::scenario::Scenario;

use super::{run_pipeline, EvalConfig, EvalError, RunReport, SamplerKind};

/// Header line of the human-readable summary.
pub const SUMMARY_POWER_NOTE: &str = "power proxy: blinks (camera frames captured and processed) per scored tick; \
     camera capture and detection dominate the per-frame energy, so energy scales with this fraction";

/// Means over a group of runs. Rate means are taken per run; pooled rates
/// divide summed counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub sampler: String,
    pub runs: usize,
    pub mean_fpr: f64,
    pub mean_fnr: f64,
    pub pooled_fpr: f64,
    pub pooled_fnr: f64,
    pub mean_event_fpr: f64,
    pub mean_event_fnr: f64,
    pub mean_blink_fraction: f64,
    pub mean_tracking_error: Option<f64>,
}

impl Aggregate {
    /// Aggregates `rows`, which must already be in canonical order.
    fn of(sampler: &str, rows: &[&RunReport]) -> Self {
        let n = rows.len() as f64;
        let mean = |f: &dyn Fn(&RunReport) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
        let sum = |f: &dyn Fn(&RunReport) -> u64| rows.iter().map(|r| f(r)).sum::<u64>();
        let n_a = sum(&|r| r.n_assessments);
        let pooled = |c: u64| if n_a == 0 { 0.0 } else { c as f64 / n_a as f64 };
        let err_n = sum(&|r| r.tracking_samples);
        let err_sum: f64 = rows.iter().map(|r| r.mean_tracking_error.unwrap_or(0.0) * r.tracking_samples as f64).sum();
        Self {
            sampler: sampler.to_string(),
            runs: rows.len(),
            mean_fpr: mean(&|r| r.fpr),
            mean_fnr: mean(&|r| r.fnr),
            pooled_fpr: pooled(sum(&|r| r.n_fp)),
            pooled_fnr: pooled(sum(&|r| r.n_fn)),
            mean_event_fpr: mean(&|r| r.event_fpr),
            mean_event_fnr: mean(&|r| r.event_fnr),
            mean_blink_fraction: mean(&|r| r.blink_fraction),
            mean_tracking_error: (err_n > 0).then(|| err_sum / err_n as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBreakdown {
    /// `mode`, `road`, `light` or `vehicles`.
    pub axis: String,
    pub value: String,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// One record per (scenario, sampler, seed), in canonical order.
    pub rows: Vec<RunReport>,
    /// One record per sampler.
    pub aggregates: Vec<Aggregate>,
    pub breakdown: Vec<AxisBreakdown>,
}

fn canonical_key(r: &RunReport) -> (String, String, u64, u64) {
    (r.sampler.clone(), r.scenario.name.clone(), r.scenario.seed, r.seed)
}

impl Comparison {
    /// Builds the tables from rows in any order.
    pub fn from_rows(mut rows: Vec<RunReport>) -> Self {
        rows.sort_by_key(canonical_key);
        let mut by_sampler: BTreeMap<&str, Vec<&RunReport>> = BTreeMap::new();
        let mut by_axis: BTreeMap<(&str, String, &str), Vec<&RunReport>> = BTreeMap::new();
        for r in &rows {
            by_sampler.entry(&r.sampler).or_default().push(r);
            let t = &r.scenario;
            for (axis, value) in [
                ("mode", t.mode.as_str().to_string()),
                ("road", t.road.as_str().to_string()),
                ("light", t.light.as_str().to_string()),
                ("vehicles", t.vehicle_mix().to_string()),
            ] {
                by_axis.entry((axis, value, &r.sampler)).or_default().push(r);
            }
        }
        let aggregates = by_sampler.iter().map(|(s, rs)| Aggregate::of(s, rs)).collect();
        let breakdown = by_axis
            .iter()
            .map(|((axis, value, s), rs)| AxisBreakdown {
                axis: axis.to_string(),
                value: value.clone(),
                aggregate: Aggregate::of(s, rs),
            })
            .collect();
        Self { aggregates, breakdown, rows }
    }

    pub fn aggregate(&self, sampler: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.sampler == sampler)
    }

    /// Plain-text table of the per-sampler aggregates and the breakdown.
    pub fn summary(&self) -> String {
        let labels: Vec<(String, &Aggregate)> = self
            .aggregates
            .iter()
            .map(|a| (a.sampler.clone(), a))
            .chain(self.breakdown.iter().map(|b| (format!("{}={} {}", b.axis, b.value, b.aggregate.sampler), &b.aggregate)))
            .collect();
        let w = labels.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max("sampler".len());
        let mut out = String::new();
        let _ = writeln!(out, "# {SUMMARY_POWER_NOTE}");
        let _ = writeln!(
            out,
            "{:<w$} {:>5} {:>8} {:>8} {:>8} {:>8} {:>8} {:>9}",
            "sampler", "runs", "fpr", "fnr", "ev_fpr", "ev_fnr", "blinks", "trk_err"
        );
        for (i, (label, a)) in labels.iter().enumerate() {
            if i == self.aggregates.len() {
                let _ = writeln!(out);
            }
            let err = a.mean_tracking_error.map_or("-".to_string(), |e| format!("{e:.3}"));
            let _ = writeln!(
                out,
                "{:<w$} {:>5} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>9}",
                label, a.runs, a.mean_fpr, a.mean_fnr, a.mean_event_fpr, a.mean_event_fnr, a.mean_blink_fraction, err
            );
        }
        out
    }
}

/// Runs every sampler with every seed on every scenario, in parallel.
///
/// A learning sampler starts from `initial_q` (or an empty table) in each
/// run; runs do not share tables.
pub fn compare(
    scenarios: &[Scenario],
    samplers: &[SamplerKind],
    seeds: &[u64],
    config: &EvalConfig,
    initial_q: Option<&QTable>,
) -> Result<Comparison, EvalError> {
    if samplers.is_empty() {
        return Err(EvalError::Config("no samplers to compare".into()));
    }
    if scenarios.is_empty() {
        return Err(EvalError::Config("no scenarios to compare".into()));
    }
    if seeds.is_empty() {
        return Err(EvalError::Config("no seeds to compare".into()));
    }
    config.validate()?;
    for s in samplers {
        s.validate()?;
    }
    let jobs: Vec<(&Scenario, &SamplerKind, u64)> = scenarios
        .iter()
        .flat_map(|sc| samplers.iter().flat_map(move |k| seeds.iter().map(move |&seed| (sc, k, seed))))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(sc, kind, seed)| {
            run_pipeline(&sc.header, &sc.frames, &sc.truth, kind, config, seed, initial_q.cloned()).map(|o| o.report)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Comparison::from_rows(rows))
}

/// Interval and random baselines spending the same blink budget as `report`.
pub fn matched_baselines(report: &RunReport) -> [SamplerKind; 2] {
    let frac = report.blink_fraction;
    let period = if frac > 0.0 { 1.0 / frac } else { (report.n_ticks + 1) as f64 };
    [SamplerKind::Interval { period_ticks: period.max(1.0) }, SamplerKind::Random { p: frac.clamp(0.0, 1.0) }]
}
