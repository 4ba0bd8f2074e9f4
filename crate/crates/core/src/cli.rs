//! Command implementations behind the `rearguard` binary.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::{config_hash, RunConfig, SuiteConfig};
use crate::eval::{compare, run_pipeline, train_sarsa, Comparison, EvalError, RunReport, SamplerKind, SUMMARY_POWER_NOTE};
use crate::sampler::{QTable, QTableError};
use crate::scenario::suite::{standard_scenario, variant, STANDARD_DURATION_S, STANDARD_SUITE_SIZE};
use crate::scenario::{
    generate, read_trace, read_truth, write_trace, write_truth, InvalidConfig, Scenario, ScenarioConfig, TraceError,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<InvalidConfig> for CliError {
    fn from(e: InvalidConfig) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Tracking(_) => CliError::Internal(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<QTableError> for CliError {
    fn from(e: QTableError) -> Self {
        match e {
            QTableError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn load_q(path: &Path) -> Result<QTable, CliError> {
    QTable::load(path).map_err(|e| match e {
        QTableError::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => CliError::Config(format!("{}: {other}", path.display())),
    })
}

pub fn load_scenario_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = read_text(path)?;
    ScenarioConfig::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Paths written by `generate`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub trace: PathBuf,
    pub truth: PathBuf,
}

/// File stem for a scenario's trace pair.
fn stem(cfg: &ScenarioConfig) -> String {
    if cfg.name.is_empty() {
        format!("scenario-{}", cfg.seed)
    } else {
        cfg.name.clone()
    }
}

pub fn write_scenario(sc: &Scenario, out_dir: &Path, stem: &str) -> Result<Generated, CliError> {
    ensure_dir(out_dir)?;
    let trace = out_dir.join(format!("{stem}.trace.jsonl"));
    let truth = out_dir.join(format!("{stem}.truth.jsonl"));
    write_trace(&trace, &sc.header, &sc.frames)?;
    write_truth(&truth, &sc.header, &sc.truth)?;
    Ok(Generated { trace, truth })
}

pub fn cmd_generate(config: &Path, out_dir: &Path, seed: Option<u64>) -> Result<Generated, CliError> {
    let mut cfg = load_scenario_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let sc = generate(&cfg)?;
    write_scenario(&sc, out_dir, &stem(&cfg))
}

/// Command-line overrides shared by `run` and `compare`.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub samplers: Vec<SamplerKind>,
    pub warmup_s: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub report: PathBuf,
    pub alerts: PathBuf,
    pub q_table: Option<PathBuf>,
    pub run: RunReport,
}

#[derive(Serialize)]
struct RunReportFile<'a> {
    config_hash: &'a str,
    power_proxy: &'a str,
    report: &'a RunReport,
}

pub fn load_run_config(path: &Path, ov: &Overrides) -> Result<RunConfig, CliError> {
    let text = read_text(path)?;
    let mut cfg = RunConfig::from_toml(&text, &base_dir(path)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(s) = ov.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &ov.out {
        cfg.out = Some(o.clone());
    }
    match ov.samplers.as_slice() {
        [] => {}
        [k] => cfg.sampler = k.clone(),
        _ => return Err(CliError::Config("run takes a single --sampler".into())),
    }
    if let Some(w) = ov.warmup_s {
        cfg.warmup_s = w;
    }
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

fn load_run_scenario(cfg: &RunConfig) -> Result<Scenario, CliError> {
    let src = &cfg.scenario;
    if let (Some(trace), Some(truth)) = (&src.trace, &src.truth) {
        let (header, frames) = read_trace(trace)?;
        let (_, truth) = read_truth(truth)?;
        return Ok(Scenario { header, frames, truth });
    }
    let scenario_cfg = match (&src.config, &src.inline) {
        (Some(p), _) => load_scenario_config(p)?,
        (None, Some(inline)) => inline.clone(),
        (None, None) => return Err(CliError::Config("scenario: no source".into())),
    };
    Ok(generate(&scenario_cfg)?)
}

pub fn cmd_run(config: &Path, ov: &Overrides) -> Result<RunArtifacts, CliError> {
    let cfg = load_run_config(config, ov)?;
    let out_dir = cfg.out.clone().ok_or_else(|| CliError::Config("out: required (set `out` or pass --out)".into()))?;
    let sc = load_run_scenario(&cfg)?;
    let initial_q = cfg.q_table.as_deref().map(load_q).transpose()?;
    let seed = cfg.seed.expect("validated");
    let output = run_pipeline(&sc.header, &sc.frames, &sc.truth, &cfg.sampler, &cfg.eval_config(), seed, initial_q)?;

    ensure_dir(&out_dir)?;
    // where the files go is not part of what was computed
    let hash = config_hash(&RunConfig { out: None, ..cfg.clone() });
    let file = RunReportFile { config_hash: &hash, power_proxy: SUMMARY_POWER_NOTE, report: &output.report };
    let report = out_dir.join("report.json");
    write_text(&report, &(serde_json::to_string_pretty(&file).expect("report serializes") + "\n"))?;

    let alerts = out_dir.join("alerts.jsonl");
    let mut lines = String::new();
    for a in &output.alerts {
        lines += &serde_json::to_string(a).expect("alert serializes");
        lines.push('\n');
    }
    write_text(&alerts, &lines)?;

    let q_table = match &output.q_table {
        Some(q) => {
            let p = out_dir.join("qtable.txt");
            write_text(&p, &q.to_text())?;
            Some(p)
        }
        None => None,
    };
    Ok(RunArtifacts { report, alerts, q_table, run: output.report })
}

#[derive(Debug, Clone)]
pub struct CompareArtifacts {
    pub report: PathBuf,
    pub summary_path: PathBuf,
    pub summary: String,
    pub comparison: Comparison,
}

#[derive(Serialize)]
struct ComparisonFile<'a> {
    config_hash: &'a str,
    power_proxy: &'a str,
    #[serde(flatten)]
    comparison: &'a Comparison,
}

pub fn load_suite_config(path: &Path, ov: &Overrides) -> Result<SuiteConfig, CliError> {
    let text = read_text(path)?;
    let mut cfg =
        SuiteConfig::from_toml(&text, &base_dir(path)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(s) = ov.seed {
        cfg.seeds = vec![s];
    }
    if let Some(o) = &ov.out {
        cfg.out = Some(o.clone());
    }
    if !ov.samplers.is_empty() {
        cfg.samplers = ov.samplers.iter().map(|k| k.to_string()).collect();
    }
    if let Some(w) = ov.warmup_s {
        cfg.warmup_s = w;
    }
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

/// Scenario configs named by a suite, in file order.
pub fn suite_scenarios(cfg: &SuiteConfig) -> Result<Vec<ScenarioConfig>, CliError> {
    let s = &cfg.suite;
    let mut out = Vec::new();
    if s.standard {
        let n = s.count.unwrap_or(STANDARD_SUITE_SIZE);
        let d = s.duration.unwrap_or(STANDARD_DURATION_S);
        out.extend((0..n).map(|i| standard_scenario(i, d)));
    }
    for p in &s.configs {
        out.push(load_scenario_config(p)?);
    }
    out.extend(s.inline.iter().cloned());
    Ok(out)
}

/// Generates scenarios in parallel.
pub fn generate_all(configs: &[ScenarioConfig]) -> Result<Vec<Scenario>, CliError> {
    use rayon::prelude::*;
    configs.par_iter().map(|c| generate(c).map_err(CliError::from)).collect()
}

/// Training scenarios for a suite's pretraining step.
pub fn pretrain_scenarios(cfg: &SuiteConfig) -> Vec<ScenarioConfig> {
    match &cfg.pretrain {
        None => Vec::new(),
        Some(p) => (0..p.scenarios).map(|i| variant(i, p.seed_offset + i as u64 + 1, p.duration)).collect(),
    }
}

pub fn cmd_compare(config: &Path, ov: &Overrides) -> Result<CompareArtifacts, CliError> {
    let cfg = load_suite_config(config, ov)?;
    let out_dir = cfg.out.clone().ok_or_else(|| CliError::Config("out: required (set `out` or pass --out)".into()))?;
    let samplers = cfg.sampler_kinds().map_err(CliError::Config)?;
    let eval = cfg.eval_config();
    let scenarios = generate_all(&suite_scenarios(&cfg)?)?;

    let mut initial_q = cfg.q_table.as_deref().map(load_q).transpose()?;
    if cfg.pretrain.is_some() && samplers.iter().any(SamplerKind::is_learning) {
        let training = generate_all(&pretrain_scenarios(&cfg))?;
        let seed = cfg.seeds[0];
        initial_q = Some(train_sarsa(&training, &eval, seed, initial_q)?);
    }

    let comparison = compare(&scenarios, &samplers, &cfg.seeds, &eval, initial_q.as_ref())?;
    ensure_dir(&out_dir)?;
    let hash = config_hash(&SuiteConfig { out: None, ..cfg.clone() });
    let file = ComparisonFile { config_hash: &hash, power_proxy: SUMMARY_POWER_NOTE, comparison: &comparison };
    let report = out_dir.join("comparison.json");
    write_text(&report, &(serde_json::to_string_pretty(&file).expect("comparison serializes") + "\n"))?;
    let summary = format!("# config {hash}\n{}", comparison.summary());
    let summary_path = out_dir.join("summary.txt");
    write_text(&summary_path, &summary)?;
    Ok(CompareArtifacts { report, summary_path, summary, comparison })
}
