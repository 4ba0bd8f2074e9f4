//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Built without the libtest harness so the lines are
//! always printed.

#![allow(clippy::needless_range_loop)]

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rearguard::cli::{cmd_run, generate_all, Overrides};
use rearguard::eval::{compare, matched_baselines, run_pipeline, EvalConfig, RunReport, SamplerKind};
use rearguard::geometry::{estimate_depth, observation_jacobian, project_box, project_observation};
use rearguard::risk::{risk_level, ttc, Ttc};
use rearguard::sampler::{observe_state, Action, SamplerConfig, SamplerState, SarsaAgent};
use rearguard::scenario::suite::{standard_suite, STANDARD_DURATION_S};
use rearguard::scenario::{generate, HeadMotion, Scenario, ScenarioConfig, SpeedProfile, UserConfig, UserMode, VehicleSpec};
use rearguard::tracking::{ekf, max_weight_matching, pairs_total, TrackSnapshot, TrackState};
use rearguard::{CameraIntrinsics, ImuPose, ObjectClass};

use common::{brute_force_matching, finite_difference, kalman_update, median, toy_mdp};

// Tolerances, fixed up front.
const GEOMETRY_REL_TOL: f64 = 0.01;
const GEOMETRY_TIME_S: f64 = 5.0;
const JACOBIAN_REL_TOL: f64 = 1e-4;
const LINEAR_KF_TOL: f64 = 1e-9;
const SARSA_Q_TOL: f64 = 0.05;
const SARSA_STEPS: usize = 50_000;
const SARSA_TIME_S: f64 = 30.0;
const CAR_MEDIAN: (f64, f64) = (12.0, 1.0);
const CYCLE_MEDIAN: (f64, f64) = (6.0, 0.8);
const BLINK_BUDGET: f64 = 0.35;
const FNR_SLACK: f64 = 0.02;
const BUDGET_MATCH: f64 = 0.10;
const SUITE_SEEDS: u64 = 20;
/// Forced-blink interval used for the suite comparisons, s. The library
/// default (2 s) is reported alongside for reference.
const SUITE_DT_MAX: f64 = 0.5;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(600.0, 600.0, 320.0, 320.0)
}

fn geometry_round_trip() -> Outcome {
    let start = Instant::now();
    let intr = intrinsics();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_depth: f64 = 0.0;
    for _ in 0..10_000 {
        let depth = rng.random_range(2.0..60.0);
        let pitch = rng.random_range(-15.0f64..15.0).to_radians();
        let yaw = PI + rng.random_range(-0.5..0.5);
        let lateral = depth * rng.random_range(-0.45..0.45);
        // camera-frame ground point to the user frame
        let (s, c) = yaw.sin_cos();
        let (x, z) = (c * lateral - s * depth, s * lateral + c * depth);
        let pose = ImuPose::new(pitch, yaw);
        let bbox = project_box(x, z, 1.8, 1.5, ObjectClass::Car, &pose, &intr, 1.55).map_err(|e| e.to_string())?;
        let d = estimate_depth(&bbox, &intr, pitch, 1.55).map_err(|e| e.to_string())?;
        worst_depth = worst_depth.max((d - depth).abs() / depth);
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "10000 points, max rel depth err {worst_depth:.2e} (<= {GEOMETRY_REL_TOL}), {secs:.2} s (< {GEOMETRY_TIME_S} s)"
    );
    if worst_depth <= GEOMETRY_REL_TOL && secs < GEOMETRY_TIME_S {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn jacobian_check() -> Outcome {
    let intr = intrinsics();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 1000 {
        let pose = ImuPose::new(rng.random_range(-0.25..0.25), PI + rng.random_range(-0.6..0.6));
        let (x, z) = (rng.random_range(-12.0..12.0), rng.random_range(-60.0..-2.0));
        let (vx, vz) = (rng.random_range(-3.0..3.0), rng.random_range(-2.0..15.0));
        let height = rng.random_range(1.0..2.0);
        let state = TrackState::new(x, z, vx, vz, Matrix4::identity());
        let Ok(h) = ekf::observation_jacobian(&state, height, &pose, &intr, 1.55) else { continue };
        let f = |v: &[f64]| {
            project_observation(v[0], v[1], height, &pose, &intr, 1.55).expect("in range").to_array().to_vec()
        };
        let fd = finite_difference(f, &[x, z, vx, vz], 1e-4);
        let scale = (0..3).flat_map(|r| (0..4).map(move |c| (r, c))).map(|(r, c)| h[(r, c)].abs()).fold(0.0, f64::max);
        for r in 0..3 {
            for c in 0..4 {
                // entries far below the matrix scale are compared against that scale
                let denom = h[(r, c)].abs().max(1e-3 * scale);
                worst = worst.max((h[(r, c)] - fd[r][c]).abs() / denom);
            }
        }
        // the planar helper agrees with the filter's matrix
        let j = observation_jacobian(x, z, height, &pose, &intr, 1.55).map_err(|e| e.to_string())?;
        if (0..3).any(|r| j[r][0] != h[(r, 0)] || j[r][1] != h[(r, 1)]) {
            return Err("geometry and filter Jacobians disagree".into());
        }
        n += 1;
    }
    let detail = format!("1000 states, max rel err {worst:.2e} (<= {JACOBIAN_REL_TOL:.0e})");
    if worst <= JACOBIAN_REL_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn assignment_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut ties = 0;
    for k in 0..1000 {
        let rows = rng.random_range(0..=5);
        let cols = rng.random_range(0..=5);
        // every other instance draws from a coarse grid, so exact ties occur
        let coarse = k % 2 == 1;
        let weights: Vec<Vec<f64>> = (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| {
                        if rng.random::<f64>() < 0.25 {
                            0.0
                        } else if coarse {
                            rng.random_range(0..=4) as f64 * 0.25
                        } else {
                            rng.random::<f64>()
                        }
                    })
                    .collect()
            })
            .collect();
        let gate = if k % 3 == 0 { 0.0 } else { 0.3 };
        let got = max_weight_matching(&weights, gate);
        let (best, expected) = brute_force_matching(&weights, gate);
        let total = pairs_total(&weights, &got);
        if total != best || got != expected {
            return Err(format!("instance {k}: {got:?} (total {total}) vs {expected:?} (total {best})"));
        }
        if coarse && !expected.is_empty() {
            ties += 1;
        }
    }
    Ok(format!("1000 instances (n <= 5) identical totals and pair sets, {ties} on a tie-prone grid"))
}

fn linear_kf_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let dt = 0.1;
    let q = 2.0;
    // textbook constant-velocity model, written out independently
    let mut f = DMatrix::<f64>::identity(4, 4);
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    let mut qm = DMatrix::<f64>::zeros(4, 4);
    for (a, b) in [(0, 2), (1, 3)] {
        qm[(a, a)] = q * dt.powi(3) / 3.0;
        qm[(a, b)] = q * dt.powi(2) / 2.0;
        qm[(b, a)] = q * dt.powi(2) / 2.0;
        qm[(b, b)] = q * dt;
    }
    let mut lib = TrackState::new(1.0, -20.0, 0.0, 5.0, Matrix4::from_diagonal(&nalgebra::Vector4::new(4.0, 4.0, 16.0, 16.0)));
    let mut x = DVector::from_column_slice(lib.x.as_slice());
    let mut p = DMatrix::from_column_slice(4, 4, lib.p.as_slice());
    let mut worst: f64 = 0.0;
    for step in 0..1000 {
        let h = DMatrix::from_fn(3, 4, |_, _| rng.random_range(-1.0..1.0));
        let r = DMatrix::from_diagonal(&DVector::from_fn(3, |_, _| rng.random_range(0.5..5.0)));
        let y = DVector::from_fn(3, |_, _| rng.random_range(-10.0..10.0));

        lib = ekf::predict(&lib, dt, q);
        x = &f * &x;
        p = &f * &p * f.transpose() + &qm;

        let innovation = &y - &h * DVector::from_column_slice(lib.x.as_slice());
        lib = ekf::correct(&lib, &innovation, &h, &r).map_err(|e| format!("step {step}: {e}"))?;
        let (xn, pn) = kalman_update(&x, &p, &y, &h, &r);
        x = xn;
        p = (&pn + pn.transpose()) * 0.5;

        let dx = (0..4).map(|i| (lib.x[i] - x[i]).abs()).fold(0.0, f64::max);
        let dp = (0..16).map(|i| (lib.p.as_slice()[i] - p.as_slice()[i]).abs()).fold(0.0, f64::max);
        worst = worst.max(dx).max(dp);
    }
    let detail = format!("1000 predict/update steps, max abs diff {worst:.2e} (<= {LINEAR_KF_TOL:.0e})");
    if worst <= LINEAR_KF_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn toy_config() -> SamplerConfig {
    SamplerConfig { epsilon0: 1.0, eta: 0.005, beta: toy_mdp().beta, dt_max: None, ..SamplerConfig::default() }
}

/// Sampler states standing in for the toy MDP's states.
fn toy_state(s: usize, cfg: &SamplerConfig) -> SamplerState {
    match s {
        0 => SamplerState::new(cfg.no_tracks_bin(), cfg.farthest_dist_bin(), 0),
        1 => SamplerState::new(0, 0, 0),
        _ => SamplerState::new(3, 0, 0),
    }
}

fn toy_action(a: usize) -> Action {
    if a == 1 {
        Action::Blink
    } else {
        Action::Skip
    }
}

fn train_toy(seed: u64) -> SarsaAgent {
    let mdp = toy_mdp();
    let cfg = toy_config();
    let mut env = ChaCha8Rng::seed_from_u64(seed);
    env.set_stream(1);
    let mut agent = SarsaAgent::new(cfg.clone(), seed);
    let mut s = 0;
    let mut a = agent.choose(toy_state(s, &cfg)).as_u8() as usize;
    for _ in 0..SARSA_STEPS {
        let s2 = mdp.step(s, a, env.random());
        agent.advance();
        let a2 = agent.choose(toy_state(s2, &cfg)).as_u8() as usize;
        agent.learn_with_reward(toy_state(s, &cfg), toy_action(a), mdp.rewards[s][a], toy_state(s2, &cfg), toy_action(a2));
        s = s2;
        a = a2;
    }
    agent
}

fn sarsa_convergence() -> Outcome {
    let start = Instant::now();
    let mdp = toy_mdp();
    let q_star = mdp.q_star();
    let policy = mdp.optimal_policy();
    let cfg = toy_config();
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let agent = train_toy(seed);
        let q = agent.q_table();
        let mut err: f64 = 0.0;
        let mut greedy_ok = true;
        for s in 0..3 {
            for a in 0..2 {
                err = err.max((q.value(toy_state(s, &cfg), toy_action(a)) - q_star[s][a]).abs());
            }
            greedy_ok &= q.greedy(toy_state(s, &cfg)) == toy_action(policy[s]);
        }
        worst = worst.max(err);
        if greedy_ok && err <= SARSA_Q_TOL {
            passed += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "{passed}/10 seeds greedy-optimal with max |Q - Q*| {worst:.4} (<= {SARSA_Q_TOL}) after {SARSA_STEPS} steps, {secs:.2} s (< {SARSA_TIME_S} s)"
    );
    if passed == 10 && secs < SARSA_TIME_S {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn snapshot(range: f64, confidence: f64) -> TrackSnapshot {
    TrackSnapshot {
        id: 1,
        class: ObjectClass::Car,
        x: 0.0,
        z: -range,
        vx: 0.0,
        vz: 5.0,
        confidence,
        range,
        obj_height: 1.5,
        miss_count: 0,
    }
}

/// The trained toy agent blinks on a close, uncertain object and mostly
/// skips when nothing is tracked right after a blink.
fn trained_agent_behavior() -> Outcome {
    let mut agent = train_toy(0);
    agent.set_learning(false);
    let cfg = agent.config().clone();
    let near = [snapshot(4.0, 0.01)];
    let s = observe_state(&near, 10.05, 10.0, &cfg);
    if s != toy_state(1, &cfg) {
        return Err(format!("4 m low-confidence track maps to {s:?}"));
    }
    let near_action = agent.tick(&near, 10.05, 10.0);
    let mut skips = 0;
    for k in 0..100 {
        let now = 20.0 + k as f64;
        if agent.tick(&[], now + 0.05, now) == Action::Skip {
            skips += 1;
        }
    }
    let detail = format!("4 m / low confidence -> {near_action:?}; no tracks just after a blink -> skip {skips}/100 (> 80)");
    if near_action == Action::Blink && skips > 80 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn approach(class: ObjectClass, seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(seed, 7.0);
    cfg.user = UserConfig { mode: UserMode::Standing, speed: None, height: 1.7 };
    cfg.head_motion = Some(HeadMotion::still());
    let speed = cfg.detector.calibration_speed;
    // enter at a random point within one tick so sampling phase varies
    let z = -(45.0 + rng_phase(seed) * speed / cfg.tick_rate);
    cfg.vehicles.push(VehicleSpec {
        class,
        spawn_time: 0.0,
        x: 0.0,
        z,
        heading: 0.0,
        speed,
        profile: SpeedProfile::Constant,
        width: None,
        height: None,
    });
    cfg
}

fn rng_phase(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(99);
    rng.random()
}

fn first_detection(sc: &Scenario) -> Option<f64> {
    sc.frames
        .iter()
        .zip(&sc.truth)
        .find(|(f, _)| !f.detections.is_empty())
        .and_then(|(_, g)| g.objects.first().map(|o| o.range()))
}

fn detector_calibration() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (class, (target, tol)) in [(ObjectClass::Car, CAR_MEDIAN), (ObjectClass::Cycle, CYCLE_MEDIAN)] {
        let mut ranges: Vec<f64> = (0..1000u64)
            .into_par_iter()
            .map(|seed| generate(&approach(class, seed + 1)).map(|sc| first_detection(&sc).unwrap_or(0.0)))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let m = median(&mut ranges);
        ok &= (m - target).abs() <= tol;
        lines.push(format!("{} median {m:.2} m ({target} +/- {tol})", class.as_str()));
    }
    let detail = format!("1000 approaches each: {}", lines.join(", "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Suite {
    scenarios: Vec<Scenario>,
}

impl Suite {
    fn new() -> Self {
        Self { scenarios: generate_all(&standard_suite(STANDARD_DURATION_S)).expect("standard suite generates") }
    }
}

fn suite_config(dt_max: f64) -> EvalConfig {
    let mut cfg = EvalConfig::default();
    cfg.sampler.dt_max = Some(dt_max);
    cfg
}

fn seeds() -> Vec<u64> {
    (1..=SUITE_SEEDS).collect()
}

fn efficiency(suite: &Suite, dt_max: f64) -> Result<(f64, f64, f64), String> {
    let cmp = compare(&suite.scenarios, &[SamplerKind::EveryFrame, SamplerKind::Sarsa], &seeds(), &suite_config(dt_max), None)
        .map_err(|e| e.to_string())?;
    let every = cmp.aggregate("every_frame").ok_or("no every_frame rows")?;
    let sarsa = cmp.aggregate("sarsa").ok_or("no sarsa rows")?;
    Ok((sarsa.mean_blink_fraction / every.mean_blink_fraction, every.mean_fnr, sarsa.mean_fnr))
}

fn comparative_efficiency(suite: &Suite) -> Outcome {
    let (frac, every_fnr, sarsa_fnr) = efficiency(suite, SUITE_DT_MAX)?;
    let (d_frac, _, d_fnr) = efficiency(suite, SamplerConfig::default().dt_max.expect("default set"))?;
    let detail = format!(
        "20 scenarios x {SUITE_SEEDS} seeds, dt_max {SUITE_DT_MAX} s: blink fraction {frac:.3} (<= {BLINK_BUDGET}), \
         FNR {sarsa_fnr:.4} vs every-frame {every_fnr:.4}, +{:.2} pp (<= {:.0} pp); \
         [reference, dt_max 2 s: blink fraction {d_frac:.3}, FNR +{:.2} pp]",
        100.0 * (sarsa_fnr - every_fnr),
        100.0 * FNR_SLACK,
        100.0 * (d_fnr - every_fnr),
    );
    if frac <= BLINK_BUDGET && sarsa_fnr - every_fnr <= FNR_SLACK {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run(sc: &Scenario, kind: &SamplerKind, cfg: &EvalConfig, seed: u64) -> RunReport {
    run_pipeline(&sc.header, &sc.frames, &sc.truth, kind, cfg, seed, None).expect("pipeline runs").report
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn comparative_accuracy(suite: &Suite) -> Outcome {
    let cfg = suite_config(SUITE_DT_MAX);
    let jobs: Vec<(&Scenario, u64)> = suite.scenarios.iter().flat_map(|sc| seeds().into_iter().map(move |s| (sc, s))).collect();
    // (sarsa, interval, random) for every scenario and seed, each baseline
    // given the blink fraction SARSA spent on that run
    let triples: Vec<[RunReport; 3]> = jobs
        .par_iter()
        .map(|&(sc, seed)| {
            let sarsa = run(sc, &SamplerKind::Sarsa, &cfg, seed);
            let [interval, random] = matched_baselines(&sarsa);
            let i = run(sc, &interval, &cfg, seed);
            let r = run(sc, &random, &cfg, seed);
            [sarsa, i, r]
        })
        .collect();
    let stat = |k: usize, f: fn(&RunReport) -> f64| mean(triples.iter().map(|t| f(&t[k])));
    let blinks = [0, 1, 2].map(|k| stat(k, |r| r.blink_fraction));
    let fpr = [0, 1, 2].map(|k| stat(k, |r| r.fpr));
    let matched = blinks[1..].iter().all(|b| (b / blinks[0] - 1.0).abs() <= BUDGET_MATCH);
    let detail = format!(
        "{} runs each, blink fraction sarsa {:.3} / interval {:.3} / random {:.3} (within +/-{:.0}%), \
         mean FPR sarsa {:.5} <= interval {:.5} and <= random {:.5}",
        triples.len(),
        blinks[0],
        blinks[1],
        blinks[2],
        100.0 * BUDGET_MATCH,
        fpr[0],
        fpr[1],
        fpr[2],
    );
    if matched && fpr[0] <= fpr[1] && fpr[0] <= fpr[2] {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const DETERMINISM_SCENARIO: &str = r#"
name = "determinism"
seed = 17
duration = 90.0
[user]
mode = "walking"
[[vehicles]]
class = "car"
spawn_time = 2.0
x = 1.5
z = -45.0
speed = 9.0
[[vehicles]]
class = "cycle"
spawn_time = 30.0
x = -1.2
z = -30.0
speed = 5.0
profile = { kind = "lane_change_at", at = 33.0, lateral_speed = 0.8, duration = 1.5 }
[[vehicles]]
class = "car"
spawn_time = 55.0
x = 2.5
z = -50.0
speed = 11.0
profile = { kind = "decelerate_at", at = 58.0, rate = 2.0, min_speed = 0.0 }
"#;

const DETERMINISM_RUN: &str = r#"
seed = 5
sampler = { kind = "sarsa" }
warmup_s = 20.0
[scenario]
config = "scenario.toml"
"#;

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("scenario.toml"), DETERMINISM_SCENARIO).map_err(|e| e.to_string())?;
    let config = dir.path().join("run.toml");
    std::fs::write(&config, DETERMINISM_RUN).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for sub in ["a", "b"] {
        let ov = Overrides { out: Some(dir.path().join(sub)), ..Default::default() };
        let a = cmd_run(&config, &ov).map_err(|e| e.to_string())?;
        let q = a.q_table.ok_or("sarsa run wrote no Q-table")?;
        let read = |p: &std::path::Path| std::fs::read(p).map_err(|e| e.to_string());
        outputs.push((read(&a.report)?, read(&a.alerts)?, read(&q)?));
    }
    let same = outputs[0] == outputs[1];
    let detail = format!(
        "two runs: report {} bytes, alerts {} bytes, Q-table {} bytes, byte-identical: {same}",
        outputs[0].0.len(),
        outputs[0].1.len(),
        outputs[0].2.len()
    );
    if same {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn risk_examples() -> Outcome {
    let checks = [
        ("ttc(0,-10,0,2) = 5.0", ttc(0.0, -10.0, 0.0, 2.0).ok().and_then(|t| t.seconds()) == Some(5.0)),
        ("ttc(0,-10,0,-2) = -5.0", ttc(0.0, -10.0, 0.0, -2.0).ok().and_then(|t| t.seconds()) == Some(-5.0)),
        ("ttc(10,0,0,3) non-approaching", ttc(10.0, 0.0, 0.0, 3.0) == Ok(Ttc::NonApproaching)),
        ("kappa(0+) = 1", risk_level(Ttc::Seconds(f64::MIN_POSITIVE), 3.3) == 1.0),
        ("kappa(5.0) = 0", risk_level(Ttc::Seconds(5.0), 3.3) == 0.0),
        ("kappa(1.65) = 0.5", risk_level(Ttc::Seconds(1.65), 3.3) == 0.5),
    ];
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        Ok(format!("{} worked examples exact", checks.len()))
    } else {
        Err(format!("failed: {}", failed.join(", ")))
    }
}

fn main() {
    let suite = Suite::new();
    let criteria: Vec<Criterion<'_>> = vec![
        ("1 geometry round trip", Box::new(geometry_round_trip)),
        ("2 observation Jacobian", Box::new(jacobian_check)),
        ("3 assignment oracle", Box::new(assignment_oracle)),
        ("4 linear Kalman equivalence", Box::new(linear_kf_equivalence)),
        ("5 SARSA convergence", Box::new(sarsa_convergence)),
        ("5b trained agent decisions", Box::new(trained_agent_behavior)),
        ("6 detector calibration", Box::new(detector_calibration)),
        ("7 comparative efficiency", Box::new(|| comparative_efficiency(&suite))),
        ("8 comparative accuracy", Box::new(|| comparative_accuracy(&suite))),
        ("10 determinism", Box::new(determinism)),
        ("11 TTC and risk examples", Box::new(risk_examples)),
    ];
    let mut failures = 0;
    for (name, check) in &criteria {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(d) => println!("PASS  {name}: {d}"),
            Err(d) => {
                failures += 1;
                println!("FAIL  {name}: {d}");
            }
        }
        if name.starts_with("8 ") {
            println!(
                "INFO  9 headline field-dataset rates: not reproducible, the field recordings are unavailable; \
                 criteria 7 and 8 stand in as ordering checks"
            );
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
