//! Python bindings for the rearguard tracking pipeline.
//!
//! Configuration structs cross the boundary as JSON text (any field left
//! out takes its default); reports come back as JSON text too, so Python
//! callers can `json.loads` them.

use std::path::PathBuf;

use nalgebra::Matrix4;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;

use rearguard::eval::{self, EvalConfig, SamplerKind};
use rearguard::geometry::{self, BoundingBox2D, CameraIntrinsics, ImuPose, ObjectClass};
use rearguard::risk::{self, RiskConfig, Ttc};
use rearguard::sampler::{QTable, SamplerConfig};
use rearguard::scenario::{self, Frame, ScenarioConfig};
use rearguard::tracking::{TrackSnapshot, TrackerConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn from_json<T: DeserializeOwned + Default>(text: Option<&str>) -> PyResult<T> {
    match text {
        None => Ok(T::default()),
        Some(t) => serde_json::from_str(t).map_err(value_err),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

fn parse_class(name: &str) -> PyResult<ObjectClass> {
    name.parse().map_err(value_err)
}

/// Pinhole camera: intrinsics plus mounting height above the ground.
#[pyclass(name = "Camera", from_py_object)]
#[derive(Clone)]
struct PyCamera {
    intr: CameraIntrinsics,
    #[pyo3(get)]
    height: f64,
}

#[pymethods]
impl PyCamera {
    #[new]
    #[pyo3(signature = (fx=None, fy=None, cx=None, cy=None, height=1.6))]
    fn new(fx: Option<f64>, fy: Option<f64>, cx: Option<f64>, cy: Option<f64>, height: f64) -> PyResult<Self> {
        let d = CameraIntrinsics::default();
        let intr = CameraIntrinsics::new(fx.unwrap_or(d.fx), fy.unwrap_or(d.fy), cx.unwrap_or(d.cx), cy.unwrap_or(d.cy));
        let positive = height > 0.0 && intr.fx > 0.0 && intr.fy > 0.0;
        if !positive {
            return Err(PyValueError::new_err("focal lengths and height must be positive"));
        }
        Ok(Self { intr, height })
    }

    #[getter]
    fn intrinsics(&self) -> (f64, f64, f64, f64) {
        (self.intr.fx, self.intr.fy, self.intr.cx, self.intr.cy)
    }

    /// Image row of the horizon at head pitch `pitch` (rad, positive up).
    fn horizon_line(&self, pitch: f64) -> f64 {
        geometry::horizon_line(&self.intr, pitch)
    }

    /// Ground-contact depth of a box, m.
    fn estimate_depth(&self, bbox: &PyBox, pitch: f64) -> PyResult<f64> {
        geometry::estimate_depth(&bbox.0, &self.intr, pitch, self.height).map_err(value_err)
    }

    /// Image box of an object of the given size at user-frame `(x, z)`.
    #[pyo3(signature = (x, z, width, height, class_name, pitch, yaw))]
    #[allow(clippy::too_many_arguments)]
    fn project_box(
        &self,
        x: f64,
        z: f64,
        width: f64,
        height: f64,
        class_name: &str,
        pitch: f64,
        yaw: f64,
    ) -> PyResult<PyBox> {
        let pose = ImuPose::new(pitch, yaw);
        geometry::project_box(x, z, width, height, parse_class(class_name)?, &pose, &self.intr, self.height)
            .map(PyBox)
            .map_err(value_err)
    }

    fn __repr__(&self) -> String {
        let i = &self.intr;
        format!("Camera(fx={}, fy={}, cx={}, cy={}, height={})", i.fx, i.fy, i.cx, i.cy, self.height)
    }
}

/// Detection box, top-left anchored, in pixels.
#[pyclass(name = "Box", from_py_object)]
#[derive(Clone)]
struct PyBox(BoundingBox2D);

#[pymethods]
impl PyBox {
    #[new]
    #[pyo3(signature = (x, y, w, h, class_name="car", score=1.0))]
    fn new(x: f64, y: f64, w: f64, h: f64, class_name: &str, score: f64) -> PyResult<Self> {
        Ok(Self(BoundingBox2D::new(x, y, w, h, parse_class(class_name)?, score)))
    }

    #[getter]
    fn x(&self) -> f64 {
        self.0.x
    }
    #[getter]
    fn y(&self) -> f64 {
        self.0.y
    }
    #[getter]
    fn w(&self) -> f64 {
        self.0.w
    }
    #[getter]
    fn h(&self) -> f64 {
        self.0.h
    }
    #[getter]
    fn class_name(&self) -> &'static str {
        self.0.class.as_str()
    }
    #[getter]
    fn score(&self) -> f64 {
        self.0.score
    }

    fn bottom_center(&self) -> (f64, f64) {
        self.0.bottom_center()
    }

    fn iou(&self, other: &PyBox) -> f64 {
        self.0.iou(&other.0)
    }

    fn __repr__(&self) -> String {
        let b = &self.0;
        format!("Box({:.1}, {:.1}, {:.1}, {:.1}, {:?})", b.x, b.y, b.w, b.h, b.class.as_str())
    }
}

/// A track's estimated state in the user frame (x right, z forward).
#[pyclass(name = "Track", get_all, from_py_object)]
#[derive(Clone)]
struct PyTrack {
    id: u64,
    class_name: &'static str,
    x: f64,
    z: f64,
    vx: f64,
    vz: f64,
    confidence: f64,
    range: f64,
    obj_height: f64,
    miss_count: u32,
}

impl From<TrackSnapshot> for PyTrack {
    fn from(s: TrackSnapshot) -> Self {
        Self {
            id: s.id,
            class_name: s.class.as_str(),
            x: s.x,
            z: s.z,
            vx: s.vx,
            vz: s.vz,
            confidence: s.confidence,
            range: s.range,
            obj_height: s.obj_height,
            miss_count: s.miss_count,
        }
    }
}

impl PyTrack {
    fn snapshot(&self) -> TrackSnapshot {
        TrackSnapshot {
            id: self.id,
            class: self.class_name.parse().expect("names come from ObjectClass"),
            x: self.x,
            z: self.z,
            vx: self.vx,
            vz: self.vz,
            confidence: self.confidence,
            range: self.range,
            obj_height: self.obj_height,
            miss_count: self.miss_count,
        }
    }
}

#[pymethods]
impl PyTrack {
    fn __repr__(&self) -> String {
        format!(
            "Track(id={}, {}, x={:.2}, z={:.2}, vx={:.2}, vz={:.2}, conf={:.3})",
            self.id, self.class_name, self.x, self.z, self.vx, self.vz, self.confidence
        )
    }
}

fn snapshots(tracks: &[PyTrack]) -> Vec<TrackSnapshot> {
    tracks.iter().map(PyTrack::snapshot).collect()
}

/// Multi-object tracker fed one blink at a time.
#[pyclass(name = "Tracker")]
struct PyTracker(rearguard::Tracker);

#[pymethods]
impl PyTracker {
    #[new]
    #[pyo3(signature = (camera, config_json=None))]
    fn new(camera: &PyCamera, config_json: Option<&str>) -> PyResult<Self> {
        let config: TrackerConfig = from_json(config_json)?;
        config.validate().map_err(value_err)?;
        Ok(Self(rearguard::Tracker::new(config, camera.intr, camera.height)))
    }

    /// Processes a blink taken at time `t` and returns the live tracks.
    fn step(&mut self, t: f64, pitch: f64, yaw: f64, detections: Vec<PyBox>) -> PyResult<Vec<PyTrack>> {
        let frame = Frame { t, pose: ImuPose::new(pitch, yaw), detections: detections.into_iter().map(|b| b.0).collect() };
        let tracks = self.0.step(&frame).map_err(value_err)?;
        Ok(tracks.into_iter().map(PyTrack::from).collect())
    }

    /// Tracks extrapolated to `t` without updating the tracker.
    fn preview(&self, t: f64) -> Vec<PyTrack> {
        self.0.preview(t).into_iter().map(PyTrack::from).collect()
    }

    fn tracks(&self) -> Vec<PyTrack> {
        self.0.snapshots().into_iter().map(PyTrack::from).collect()
    }

    fn __len__(&self) -> usize {
        self.0.tracks().len()
    }
}

/// Time to collision of a point with relative velocity, s; `None` when the
/// motion is tangential.
#[pyfunction]
fn ttc(x: f64, z: f64, vx: f64, vz: f64) -> PyResult<Option<f64>> {
    risk::ttc(x, z, vx, vz).map(|t| t.seconds()).map_err(value_err)
}

/// Risk level in [0, 1] for a time to collision (`None` means no approach).
#[pyfunction]
#[pyo3(signature = (ttc, t_r=3.3))]
fn risk_level(ttc: Option<f64>, t_r: f64) -> f64 {
    risk::risk_level(ttc.map_or(Ttc::NonApproaching, Ttc::Seconds), t_r)
}

/// Scores a set of tracks; returns the assessment as JSON.
#[pyfunction]
#[pyo3(signature = (tracks, now, config_json=None))]
fn assess(tracks: Vec<PyTrack>, now: f64, config_json: Option<&str>) -> PyResult<String> {
    let config: RiskConfig = from_json(config_json)?;
    config.validate().map_err(value_err)?;
    to_json(&risk::assess(&snapshots(&tracks), &config, now))
}

/// Track confidence `1 / (trace(P) + gamma)` from a 4x4 covariance.
#[pyfunction]
#[pyo3(signature = (covariance, gamma=1.0))]
fn confidence(covariance: [[f64; 4]; 4], gamma: f64) -> f64 {
    let p = Matrix4::from_fn(|i, j| covariance[i][j]);
    rearguard::tracking::ekf::confidence(&p, gamma)
}

/// Learned blink scheduler.
#[pyclass(name = "SarsaAgent")]
struct PyAgent(rearguard::SarsaAgent);

#[pymethods]
impl PyAgent {
    #[new]
    #[pyo3(signature = (seed, config_json=None, q_table=None))]
    fn new(seed: u64, config_json: Option<&str>, q_table: Option<&str>) -> PyResult<Self> {
        let config: SamplerConfig = from_json(config_json)?;
        config.validate().map_err(value_err)?;
        let q = q_table.map(QTable::from_text).transpose().map_err(value_err)?.unwrap_or_default();
        Ok(Self(rearguard::SarsaAgent::with_table(config, q, seed)))
    }

    /// Decides for the tick at `now`; True means take a blink.
    fn tick(&mut self, tracks: Vec<PyTrack>, now: f64, last_blink: f64) -> bool {
        self.0.tick(&snapshots(&tracks), now, last_blink).is_blink()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.current_epsilon()
    }

    #[getter]
    fn forced_blinks(&self) -> u64 {
        self.0.forced_blinks()
    }

    #[setter]
    fn set_learning(&mut self, on: bool) {
        self.0.set_learning(on);
    }

    #[getter]
    fn learning(&self) -> bool {
        self.0.config().learning
    }

    /// The Q-table in its text format.
    fn q_table(&self) -> String {
        self.0.q_table().to_text()
    }
}

/// A generated trace with aligned ground truth.
#[pyclass(name = "Scenario")]
struct PyScenario(scenario::Scenario);

#[pymethods]
impl PyScenario {
    #[getter]
    fn name(&self) -> &str {
        &self.0.header.name
    }

    #[getter]
    fn tick_rate(&self) -> f64 {
        self.0.header.tick_rate
    }

    #[getter]
    fn camera(&self) -> PyCamera {
        PyCamera { intr: self.0.header.intrinsics, height: self.0.header.camera_height }
    }

    fn __len__(&self) -> usize {
        self.0.frames.len()
    }

    /// Frame `i` as `(t, pitch, yaw, boxes)`.
    fn frame(&self, i: usize) -> PyResult<(f64, f64, f64, Vec<PyBox>)> {
        let f = self.0.frames.get(i).ok_or_else(|| PyValueError::new_err(format!("frame {i} out of range")))?;
        Ok((f.t, f.pose.pitch, f.pose.yaw, f.detections.iter().copied().map(PyBox).collect()))
    }

    /// Ground truth of tick `i` as JSON.
    fn truth(&self, i: usize) -> PyResult<String> {
        let t = self.0.truth.get(i).ok_or_else(|| PyValueError::new_err(format!("tick {i} out of range")))?;
        to_json(t)
    }

    /// Writes `<name>.trace.jsonl` and `<name>.truth.jsonl` into `dir`;
    /// returns both paths.
    fn write(&self, dir: PathBuf) -> PyResult<(String, String)> {
        let io = |e: scenario::TraceError| PyIOError::new_err(e.to_string());
        std::fs::create_dir_all(&dir).map_err(|e| PyIOError::new_err(format!("{}: {e}", dir.display())))?;
        let name = &self.0.header.name;
        let trace = dir.join(format!("{name}.trace.jsonl"));
        let truth = dir.join(format!("{name}.truth.jsonl"));
        scenario::write_trace(&trace, &self.0.header, &self.0.frames).map_err(io)?;
        scenario::write_truth(&truth, &self.0.header, &self.0.truth).map_err(io)?;
        Ok((trace.display().to_string(), truth.display().to_string()))
    }
}

/// Builds a scenario from TOML text.
#[pyfunction]
fn generate(config_toml: &str) -> PyResult<PyScenario> {
    let config = ScenarioConfig::from_toml(config_toml).map_err(value_err)?;
    scenario::generate(&config).map(PyScenario).map_err(value_err)
}

/// One of the built-in traffic scenarios.
#[pyfunction]
#[pyo3(signature = (index, duration=120.0))]
fn standard_scenario(index: usize, duration: f64) -> PyResult<PyScenario> {
    let config = scenario::suite::standard_scenario(index, duration);
    scenario::generate(&config).map(PyScenario).map_err(value_err)
}

fn eval_config(text: Option<&str>) -> PyResult<EvalConfig> {
    let config: EvalConfig = from_json(text)?;
    config.validate().map_err(value_err)?;
    Ok(config)
}

/// Runs one sampler (e.g. `"sarsa"`, `"interval:4"`) over a scenario and
/// returns `{"report": ..., "q_table": ...}` as JSON.
#[pyfunction]
#[pyo3(signature = (scenario, sampler, seed, config_json=None, q_table=None))]
fn run(
    py: Python<'_>,
    scenario: &PyScenario,
    sampler: &str,
    seed: u64,
    config_json: Option<&str>,
    q_table: Option<&str>,
) -> PyResult<String> {
    let kind: SamplerKind = sampler.parse().map_err(value_err)?;
    let config = eval_config(config_json)?;
    let q = q_table.map(QTable::from_text).transpose().map_err(value_err)?;
    let sc = &scenario.0;
    let out = py
        .detach(|| eval::run_pipeline(&sc.header, &sc.frames, &sc.truth, &kind, &config, seed, q))
        .map_err(value_err)?;
    to_json(&serde_json::json!({
        "report": out.report,
        "alerts": out.alerts,
        "q_table": out.q_table.map(|q| q.to_text()),
    }))
}

/// Runs every sampler with every seed on every scenario; returns the
/// comparison as JSON.
#[pyfunction]
#[pyo3(signature = (scenarios, samplers, seeds, config_json=None))]
fn compare(
    py: Python<'_>,
    scenarios: Vec<PyRef<'_, PyScenario>>,
    samplers: Vec<String>,
    seeds: Vec<u64>,
    config_json: Option<&str>,
) -> PyResult<String> {
    let kinds = samplers.iter().map(|s| s.parse::<SamplerKind>()).collect::<Result<Vec<_>, _>>().map_err(value_err)?;
    let config = eval_config(config_json)?;
    let owned: Vec<scenario::Scenario> = scenarios.iter().map(|s| s.0.clone()).collect();
    let cmp = py.detach(|| eval::compare(&owned, &kinds, &seeds, &config, None)).map_err(value_err)?;
    to_json(&cmp)
}

#[pymodule]
fn rearguard_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCamera>()?;
    m.add_class::<PyBox>()?;
    m.add_class::<PyTrack>()?;
    m.add_class::<PyTracker>()?;
    m.add_class::<PyAgent>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(ttc, m)?)?;
    m.add_function(wrap_pyfunction!(risk_level, m)?)?;
    m.add_function(wrap_pyfunction!(assess, m)?)?;
    m.add_function(wrap_pyfunction!(confidence, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(standard_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    Ok(())
}
