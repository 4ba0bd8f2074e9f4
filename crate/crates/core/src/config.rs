//! Run and suite configuration files (TOML) and their content hash.
//!
//! Relative paths inside a config file are resolved against the file's own
//! directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eval::{EvalConfig, SamplerKind};
use crate::risk::RiskConfig;
use crate::sampler::SamplerConfig;
use crate::scenario::ScenarioConfig;
use crate::tracking::TrackerConfig;

/// Where a run gets its trace from: a recorded trace/truth pair, a scenario
/// config file, or a scenario given inline.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inline: Option<ScenarioConfig>,
}

impl ScenarioSource {
    pub fn validate(&self) -> Result<(), String> {
        let recorded = self.trace.is_some() || self.truth.is_some();
        let n = [recorded, self.config.is_some(), self.inline.is_some()].iter().filter(|&&b| b).count();
        if n != 1 {
            return Err("scenario: give exactly one of `trace` + `truth`, `config`, or `inline`".into());
        }
        if recorded && (self.trace.is_none() || self.truth.is_none()) {
            return Err("scenario: `trace` and `truth` must be given together".into());
        }
        if let Some(cfg) = &self.inline {
            cfg.validate().map_err(|e| format!("scenario.inline: {e}"))?;
        }
        Ok(())
    }

    fn resolve(&mut self, base: &Path) {
        for p in [&mut self.trace, &mut self.truth, &mut self.config].into_iter().flatten() {
            *p = resolve_path(base, p);
        }
    }
}

fn resolve_path(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn default_sampler() -> SamplerKind {
    SamplerKind::Sarsa
}

fn default_warmup() -> f64 {
    EvalConfig::default().warmup_s
}

fn default_match_radius() -> f64 {
    EvalConfig::default().match_radius
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Sampler seed; required here or on the command line.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub scenario: ScenarioSource,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerKind,
    /// Q-table to start a learning sampler from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_table: Option<PathBuf>,
    #[serde(default = "default_warmup")]
    pub warmup_s: f64,
    #[serde(default = "default_match_radius")]
    pub match_radius: f64,
    #[serde(default)]
    pub tracker: TrackerConfig,
    #[serde(default)]
    pub risk: RiskConfig,
    #[serde(default)]
    pub sarsa: SamplerConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, String> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.scenario.resolve(base);
        if let Some(q) = &cfg.q_table {
            cfg.q_table = Some(resolve_path(base, q));
        }
        if let Some(o) = &cfg.out {
            cfg.out = Some(resolve_path(base, o));
        }
        Ok(cfg)
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            tracker: self.tracker.clone(),
            risk: self.risk,
            sampler: self.sarsa.clone(),
            warmup_s: self.warmup_s,
            match_radius: self.match_radius,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.seed.is_none() {
            return Err("seed: required (set `seed` in the config or pass --seed)".into());
        }
        self.scenario.validate()?;
        self.sampler.validate().map_err(|e| e.to_string())?;
        self.eval_config().validate().map_err(|e| e.to_string())
    }
}

/// Scenarios to compare over.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSource {
    /// Include the standard suite.
    #[serde(default)]
    pub standard: bool,
    /// Length of each standard scenario, s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    /// Only the first `count` standard scenarios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Scenario config files.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub configs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inline: Vec<ScenarioConfig>,
}

/// Offline training of a learning sampler before it is compared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PretrainConfig {
    /// Standard-suite indices shifted by this offset give the training
    /// scenarios' seeds, so they differ from the evaluated ones.
    pub seed_offset: u64,
    pub scenarios: usize,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub seeds: Vec<u64>,
    pub samplers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub suite: SuiteSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_table: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pretrain: Option<PretrainConfig>,
    #[serde(default = "default_warmup")]
    pub warmup_s: f64,
    #[serde(default = "default_match_radius")]
    pub match_radius: f64,
    #[serde(default)]
    pub tracker: TrackerConfig,
    #[serde(default)]
    pub risk: RiskConfig,
    #[serde(default)]
    pub sarsa: SamplerConfig,
}

impl SuiteConfig {
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, String> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.suite.configs = cfg.suite.configs.iter().map(|p| resolve_path(base, p)).collect();
        if let Some(q) = &cfg.q_table {
            cfg.q_table = Some(resolve_path(base, q));
        }
        if let Some(o) = &cfg.out {
            cfg.out = Some(resolve_path(base, o));
        }
        Ok(cfg)
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            tracker: self.tracker.clone(),
            risk: self.risk,
            sampler: self.sarsa.clone(),
            warmup_s: self.warmup_s,
            match_radius: self.match_radius,
        }
    }

    pub fn sampler_kinds(&self) -> Result<Vec<SamplerKind>, String> {
        if self.samplers.is_empty() {
            return Err("samplers: at least one sampler is required".into());
        }
        self.samplers.iter().map(|s| s.parse().map_err(|e: crate::eval::EvalError| e.to_string())).collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.seeds.is_empty() {
            return Err("seeds: at least one seed is required".into());
        }
        self.sampler_kinds()?;
        let s = &self.suite;
        if !s.standard && s.configs.is_empty() && s.inline.is_empty() {
            return Err("suite: no scenarios (set `standard = true`, `configs` or `inline`)".into());
        }
        if let Some(d) = s.duration {
            if !(d > 0.0) {
                return Err(format!("suite.duration must be positive, got {d}"));
            }
        }
        for (i, c) in s.inline.iter().enumerate() {
            c.validate().map_err(|e| format!("suite.inline[{i}]: {e}"))?;
        }
        if let Some(p) = &self.pretrain {
            if !(p.duration > 0.0) || p.scenarios == 0 {
                return Err("pretrain: duration and scenarios must be positive".into());
            }
        }
        self.eval_config().validate().map_err(|e| e.to_string())
    }
}

/// Hex SHA-256 of a value's canonical JSON form.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(&json))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_resolves_paths() {
        let cfg = RunConfig::from_toml(
            "seed = 3\nsampler = { kind = \"interval\", period_ticks = 4.0 }\n[scenario]\ntrace = \"a.jsonl\"\ntruth = \"/abs/b.jsonl\"\n",
            Path::new("/base"),
        )
        .unwrap();
        assert_eq!(cfg.scenario.trace.as_deref(), Some(Path::new("/base/a.jsonl")));
        assert_eq!(cfg.scenario.truth.as_deref(), Some(Path::new("/abs/b.jsonl")));
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn run_config_requires_one_source_and_a_seed() {
        let cfg = RunConfig::from_toml("[scenario]\ntrace = \"a\"\n", Path::new(".")).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.contains("seed"), "{err}");
        let cfg = RunConfig::from_toml("seed = 1\n[scenario]\ntrace = \"a\"\n", Path::new(".")).unwrap();
        assert!(cfg.validate().unwrap_err().contains("together"));
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::from_toml("seed = 1\n[scenario]\nconfig = \"s.toml\"\n", Path::new("/x")).unwrap();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.seed = Some(2);
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn suite_config_checks_samplers() {
        let cfg = SuiteConfig::from_toml(
            "seeds = [1]\nsamplers = [\"every_frame\", \"nope\"]\n[suite]\nstandard = true\n",
            Path::new("."),
        )
        .unwrap();
        assert!(cfg.validate().unwrap_err().contains("nope"));
    }
}
