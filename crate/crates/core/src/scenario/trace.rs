//! Line-delimited JSON trace files.
//!
//! Line 1 is a [`TraceHeader`]; every following line is one record, a
//! [`Frame`] in a trace file or a [`GroundTruthTick`] in a truth file.
//! Records are in strictly increasing time order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CameraIntrinsics, ObjectClass};

use super::{Frame, GroundTruthTick, Light, Road, ScenarioConfig, UserMode};

pub const TRACE_FORMAT: &str = "rearguard-trace";
pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}: trace version {found} is not supported (expected {expected})")]
    VersionMismatch { path: String, found: u64, expected: u32 },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl TraceError {
    pub fn line(&self) -> Option<usize> {
        match self {
            TraceError::Parse { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Trace,
    Truth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub format: String,
    pub version: u32,
    pub kind: TraceKind,
    pub name: String,
    pub seed: u64,
    pub tick_rate: f64,
    pub duration: f64,
    pub intrinsics: CameraIntrinsics,
    pub image_width: f64,
    pub image_height: f64,
    pub camera_height: f64,
    pub mode: UserMode,
    pub road: Road,
    pub light: Light,
    pub n_cars: usize,
    pub n_cycles: usize,
}

impl TraceHeader {
    pub fn for_config(config: &ScenarioConfig, kind: TraceKind) -> Self {
        let count = |c| config.vehicles.iter().filter(|v| v.class == c).count();
        Self {
            format: TRACE_FORMAT.to_string(),
            version: TRACE_VERSION,
            kind,
            name: config.name.clone(),
            seed: config.seed,
            tick_rate: config.tick_rate,
            duration: config.duration,
            intrinsics: config.camera.intrinsics,
            image_width: config.camera.image_width,
            image_height: config.camera.image_height,
            camera_height: config.camera.camera_height,
            mode: config.user.mode,
            road: config.road,
            light: config.light,
            n_cars: count(ObjectClass::Car),
            n_cycles: count(ObjectClass::Cycle),
        }
    }
}

trait Timed {
    fn time(&self) -> f64;
}

impl Timed for Frame {
    fn time(&self) -> f64 {
        self.t
    }
}

impl Timed for GroundTruthTick {
    fn time(&self) -> f64 {
        self.t
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TraceError + '_ {
    move |source| TraceError::Io { path: path.display().to_string(), source }
}

fn write_records<T: Serialize>(path: &Path, header: &TraceHeader, records: &[T]) -> Result<(), TraceError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let mut line = |v: String| writeln!(out, "{v}").map_err(io_err(path));
    line(serde_json::to_string(header).expect("header serializes"))?;
    for r in records {
        line(serde_json::to_string(r).expect("record serializes"))?;
    }
    out.flush().map_err(io_err(path))
}

fn read_records<T: DeserializeOwned + Timed>(path: &Path, kind: TraceKind) -> Result<(TraceHeader, Vec<T>), TraceError> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_records(BufReader::new(file), &path.display().to_string(), kind)
}

fn parse_records<T: DeserializeOwned + Timed, R: BufRead>(
    reader: R,
    path: &str,
    kind: TraceKind,
) -> Result<(TraceHeader, Vec<T>), TraceError> {
    let parse_err = |line: usize, message: String| TraceError::Parse { path: path.to_string(), line, message };
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
    let first = first.map_err(|e| TraceError::Io { path: path.to_string(), source: e })?;
    let raw: serde_json::Value = serde_json::from_str(&first).map_err(|e| parse_err(1, e.to_string()))?;
    if raw.get("format").and_then(|f| f.as_str()) != Some(TRACE_FORMAT) {
        return Err(parse_err(1, format!("not a {TRACE_FORMAT} file")));
    }
    match raw.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == TRACE_VERSION as u64 => {}
        Some(v) => return Err(TraceError::VersionMismatch { path: path.to_string(), found: v, expected: TRACE_VERSION }),
        None => return Err(parse_err(1, "missing field `version`".into())),
    }
    let header: TraceHeader = serde_json::from_value(raw).map_err(|e| parse_err(1, e.to_string()))?;
    if header.kind != kind {
        return Err(parse_err(1, format!("expected a {kind:?} file, found {:?}", header.kind).to_lowercase()));
    }

    let mut records: Vec<T> = Vec::new();
    for (n, line) in lines {
        let line = line.map_err(|e| TraceError::Io { path: path.to_string(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = serde_json::from_str(&line).map_err(|e| parse_err(n, e.to_string()))?;
        if let Some(prev) = records.last() {
            if !(rec.time() > prev.time()) {
                return Err(parse_err(n, format!("time {} does not increase", rec.time())));
            }
        }
        records.push(rec);
    }
    Ok((header, records))
}

pub fn write_trace(path: &Path, header: &TraceHeader, frames: &[Frame]) -> Result<(), TraceError> {
    let header = TraceHeader { kind: TraceKind::Trace, ..header.clone() };
    write_records(path, &header, frames)
}

pub fn read_trace(path: &Path) -> Result<(TraceHeader, Vec<Frame>), TraceError> {
    read_records(path, TraceKind::Trace)
}

pub fn write_truth(path: &Path, header: &TraceHeader, ticks: &[GroundTruthTick]) -> Result<(), TraceError> {
    let header = TraceHeader { kind: TraceKind::Truth, ..header.clone() };
    write_records(path, &header, ticks)
}

pub fn read_truth(path: &Path) -> Result<(TraceHeader, Vec<GroundTruthTick>), TraceError> {
    read_records(path, TraceKind::Truth)
}
