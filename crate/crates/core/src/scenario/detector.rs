//! Range-dependent detection probability.
//!
//! Each class has a logistic curve `p(r) = 1 / (1 + exp((r - m) / s))`. The
//! configured quantity is not the midpoint `m` but the median range at
//! which an object closing at a reference speed is first detected when the
//! detector runs on every tick; `m` is solved for by bisection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::ObjectClass;

use super::Light;

/// Phases averaged over when locating the first-detection median.
const CALIBRATION_PHASES: usize = 64;
/// Curve widths of lead-in before the target range, enough for `p` to be
/// negligible at the start of the approach.
const LEAD_IN_SCALES: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionCurve {
    /// Median first-detection range of the reference approach, m.
    pub first_detect_range: f64,
    /// Logistic width, m.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Full horizontal field of view, rad; defaults to the camera's.
    pub fov: Option<f64>,
    pub car: DetectionCurve,
    pub cycle: DetectionCurve,
    /// Closing speed of the reference approach used for calibration, m/s.
    pub calibration_speed: f64,
    /// Range scale applied at night, in (0, 1].
    pub night_range_factor: f64,
    /// Gaussian noise on each box coordinate, px.
    pub box_noise_std: f64,
    /// A farther object within this bearing of a nearer one is hidden, deg.
    pub occlusion_deg: f64,
    /// Replace the logistic draw with a hard cut at `first_detect_range`.
    pub deterministic: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            fov: None,
            car: DetectionCurve { first_detect_range: 12.0, scale: 1.5 },
            cycle: DetectionCurve { first_detect_range: 6.0, scale: 0.75 },
            calibration_speed: 8.33,
            night_range_factor: 0.7,
            box_noise_std: 2.0,
            occlusion_deg: 3.0,
            deterministic: false,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, c) in [("car", &self.car), ("cycle", &self.cycle)] {
            if !(c.first_detect_range > 0.0 && c.scale > 0.0) {
                return Err(format!("detector.{name}: first_detect_range and scale must be positive"));
            }
        }
        if !(self.calibration_speed > 0.0) {
            return Err(format!("detector.calibration_speed must be positive, got {}", self.calibration_speed));
        }
        if !(self.night_range_factor > 0.0 && self.night_range_factor <= 1.0) {
            return Err(format!("detector.night_range_factor must be in (0, 1], got {}", self.night_range_factor));
        }
        if !(self.box_noise_std >= 0.0) || !(self.occlusion_deg >= 0.0) {
            return Err("detector: box_noise_std and occlusion_deg must be non-negative".into());
        }
        Ok(())
    }

    pub fn curve(&self, class: ObjectClass) -> DetectionCurve {
        match class {
            ObjectClass::Car => self.car,
            ObjectClass::Cycle => self.cycle,
        }
    }

    /// Solves the curve midpoints for the given tick rate.
    pub fn resolve(&self, tick_rate: f64) -> DetectorModel {
        let solve = |c: DetectionCurve| {
            (calibrate_midpoint(c.first_detect_range, c.scale, self.calibration_speed, tick_rate), c.scale)
        };
        DetectorModel {
            car: solve(self.car),
            cycle: solve(self.cycle),
            car_cut: self.car.first_detect_range,
            cycle_cut: self.cycle.first_detect_range,
            night_range_factor: self.night_range_factor,
            deterministic: self.deterministic,
        }
    }
}

/// Detector curves with solved midpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    car: (f64, f64),
    cycle: (f64, f64),
    car_cut: f64,
    cycle_cut: f64,
    night_range_factor: f64,
    deterministic: bool,
}

impl DetectorModel {
    /// `(midpoint, scale)` for a class and lighting.
    pub fn curve(&self, class: ObjectClass, light: Light) -> (f64, f64) {
        let (m, s) = match class {
            ObjectClass::Car => self.car,
            ObjectClass::Cycle => self.cycle,
        };
        let f = self.light_factor(light);
        (m * f, s * f)
    }

    fn light_factor(&self, light: Light) -> f64 {
        match light {
            Light::Day => 1.0,
            Light::Night => self.night_range_factor,
        }
    }

    pub fn probability(&self, range: f64, class: ObjectClass, light: Light) -> f64 {
        if self.deterministic {
            let cut = match class {
                ObjectClass::Car => self.car_cut,
                ObjectClass::Cycle => self.cycle_cut,
            };
            return if range <= cut * self.light_factor(light) { 1.0 } else { 0.0 };
        }
        let (m, s) = self.curve(class, light);
        logistic(range, m, s)
    }
}

fn logistic(range: f64, midpoint: f64, scale: f64) -> f64 {
    1.0 / (1.0 + ((range - midpoint) / scale).exp())
}

/// Probability of detecting an object at `range` in one frame.
pub fn detection_probability(range: f64, class: ObjectClass, light: Light, config: &DetectorConfig, tick_rate: f64) -> f64 {
    config.resolve(tick_rate).probability(range, class, light)
}

/// Probability, averaged over sampling phase, that an approach at `speed`
/// sampled at `tick_rate` has not been detected before reaching `range`.
fn undetected_beyond(range: f64, midpoint: f64, scale: f64, speed: f64, tick_rate: f64) -> f64 {
    let step = speed / tick_rate;
    let start = range.max(midpoint) + LEAD_IN_SCALES * scale + step;
    let ticks = ((start - range) / step).ceil() as usize + 1;
    let mut total = 0.0;
    for i in 0..CALIBRATION_PHASES {
        let phase = (i as f64 + 0.5) / CALIBRATION_PHASES as f64 * step;
        let mut miss = 1.0;
        for k in 0..ticks {
            let r = start - phase - k as f64 * step;
            if r < range {
                break;
            }
            miss *= 1.0 - logistic(r, midpoint, scale);
        }
        total += miss;
    }
    total / CALIBRATION_PHASES as f64
}

/// Median first-detection range of a constant-speed approach.
pub fn median_first_detection(midpoint: f64, scale: f64, speed: f64, tick_rate: f64) -> f64 {
    // undetected_beyond is increasing in range
    let (mut lo, mut hi) = (0.0, midpoint.max(0.0) + LEAD_IN_SCALES * scale);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if undetected_beyond(mid, midpoint, scale, speed, tick_rate) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Logistic midpoint whose first-detection median equals `target`.
pub fn calibrate_midpoint(target: f64, scale: f64, speed: f64, tick_rate: f64) -> f64 {
    // a later midpoint means earlier detection, so the median grows with m
    let (mut lo, mut hi) = (target - LEAD_IN_SCALES * scale, target + LEAD_IN_SCALES * scale);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if undetected_beyond(target, mid, scale, speed, tick_rate) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Simulates one approach from `start` and returns the range at the first
/// successful detection (0 if the object arrives undetected).
pub fn first_detection_range<R: Rng + ?Sized>(
    midpoint: f64,
    scale: f64,
    start: f64,
    speed: f64,
    tick_rate: f64,
    rng: &mut R,
) -> f64 {
    let step = speed / tick_rate;
    let mut r = start - rng.random::<f64>() * step;
    while r > 0.0 {
        if rng.random::<f64>() < logistic(r, midpoint, scale) {
            return r;
        }
        r -= step;
    }
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn point_blank_saturates() {
        let cfg = DetectorConfig::default();
        assert!(detection_probability(0.5, ObjectClass::Car, Light::Day, &cfg, 10.0) >= 0.99);
        assert!(detection_probability(0.5, ObjectClass::Cycle, Light::Night, &cfg, 10.0) >= 0.99);
    }

    #[test]
    fn monotone_in_range() {
        let model = DetectorConfig::default().resolve(10.0);
        let mut prev = 1.0;
        for i in 0..200 {
            let p = model.probability(i as f64 * 0.25, ObjectClass::Car, Light::Day);
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn calibration_hits_target_median() {
        let m = calibrate_midpoint(12.0, 1.5, 8.33, 10.0);
        assert_close!(median_first_detection(m, 1.5, 8.33, 10.0), 12.0, 1e-6);
        // several tries happen before the midpoint is reached
        assert!(m < 12.0);
    }

    #[test]
    fn simulated_median_matches() {
        let m = calibrate_midpoint(6.0, 0.75, 8.33, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ranges: Vec<f64> = (0..4001).map(|_| first_detection_range(m, 0.75, 60.0, 8.33, 10.0, &mut rng)).collect();
        ranges.sort_by(f64::total_cmp);
        assert_close!(ranges[2000], 6.0, 0.2);
    }

    #[test]
    fn night_shrinks_range() {
        let model = DetectorConfig::default().resolve(10.0);
        let day = model.probability(10.0, ObjectClass::Car, Light::Day);
        let night = model.probability(10.0, ObjectClass::Car, Light::Night);
        assert!(night < day);
    }

    #[test]
    fn deterministic_cut() {
        let cfg = DetectorConfig { deterministic: true, ..Default::default() };
        let model = cfg.resolve(10.0);
        assert_eq!(model.probability(12.0, ObjectClass::Car, Light::Day), 1.0);
        assert_eq!(model.probability(12.01, ObjectClass::Car, Light::Day), 0.0);
    }
}
