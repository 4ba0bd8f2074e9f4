//! The standard 20-scenario evaluation suite.
//!
//! Scenarios cycle through user mode, road type and lighting; vehicle
//! arrivals are drawn from each scenario's seed.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::ObjectClass;

use super::{Light, Road, ScenarioConfig, SpeedProfile, UserConfig, UserMode, VehicleSpec};

pub const STANDARD_SUITE_SIZE: usize = 20;
pub const STANDARD_DURATION_S: f64 = 180.0;

/// Axis values of scenario `i` of the standard suite.
fn axes(i: usize) -> (UserMode, Road, Light, f64) {
    let mode = [UserMode::Standing, UserMode::Walking, UserMode::Jogging][i % 3];
    let road = if i.is_multiple_of(2) { Road::AlongRoad } else { Road::Intersection };
    let light = if i % 4 == 3 { Light::Night } else { Light::Day };
    // share of cycles among arrivals
    let cycle_share = [0.0, 0.3, 0.6, 0.3, 1.0][i % 5];
    (mode, road, light, cycle_share)
}

/// Scenario `index` (0-based) of the standard suite with the given length.
pub fn standard_scenario(index: usize, duration: f64) -> ScenarioConfig {
    variant(index, index as u64 + 1, duration)
}

/// Scenario with the axes of standard scenario `index` but arrivals drawn
/// from `seed`.
pub fn variant(index: usize, seed: u64, duration: f64) -> ScenarioConfig {
    let (mode, road, light, cycle_share) = axes(index % STANDARD_SUITE_SIZE);
    let mut cfg = ScenarioConfig::new(seed, duration);
    cfg.name = format!("s{seed:03}-{}-{}-{}", mode.as_str(), road.as_str(), light.as_str());
    cfg.user = UserConfig { mode, speed: None, height: 1.7 };
    cfg.road = road;
    cfg.light = light;
    cfg.vehicles = arrivals(seed, duration, road, cycle_share);
    cfg
}

pub fn standard_suite(duration: f64) -> Vec<ScenarioConfig> {
    (0..STANDARD_SUITE_SIZE).map(|i| standard_scenario(i, duration)).collect()
}

/// Vehicle arrivals: mostly rear approaches along the user's path, with
/// crossing traffic behind the user at intersections.
pub fn arrivals(seed: u64, duration: f64, road: Road, cycle_share: f64) -> Vec<VehicleSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    let mut out = Vec::new();
    let mut t = rng.random_range(1.0..4.0);
    while t < duration - 5.0 {
        let class = if rng.random::<f64>() < cycle_share { ObjectClass::Cycle } else { ObjectClass::Car };
        let (lo, hi) = match class {
            ObjectClass::Car => (6.0, 12.0),
            ObjectClass::Cycle => (3.0, 6.5),
        };
        let speed = rng.random_range(lo..hi);
        let crossing = road == Road::Intersection && rng.random::<f64>() < 0.4;
        let kind = rng.random::<f64>();
        let spec = if crossing {
            let from_left = rng.random::<bool>();
            let behind = rng.random_range(4.0..12.0);
            VehicleSpec {
                class,
                spawn_time: t,
                x: if from_left { -40.0 } else { 40.0 },
                z: -behind,
                heading: if from_left { FRAC_PI_2 } else { -FRAC_PI_2 },
                speed,
                profile: SpeedProfile::Constant,
                width: None,
                height: None,
            }
        } else {
            let lane = [1.2, 1.8, 2.5, 3.5, -1.5][rng.random_range(0..5usize)];
            let profile = if kind < 0.2 {
                SpeedProfile::DecelerateAt { at: t + rng.random_range(2.0..4.0), rate: rng.random_range(1.5..3.0), min_speed: 0.0 }
            } else if kind < 0.35 {
                let toward = if lane > 0.0 { -1.0 } else { 1.0 };
                SpeedProfile::LaneChangeAt { at: t + rng.random_range(1.0..3.0), lateral_speed: toward * 0.8, duration: 1.5 }
            } else {
                SpeedProfile::Constant
            };
            VehicleSpec {
                class,
                spawn_time: t,
                x: lane,
                z: -rng.random_range(35.0..60.0),
                heading: 0.0,
                speed,
                profile,
                width: None,
                height: None,
            }
        };
        out.push(spec);
        t += rng.random_range(7.0..15.0);
    }
    out
}
