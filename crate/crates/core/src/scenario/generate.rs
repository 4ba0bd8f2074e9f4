use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{project_box, user_to_camera_planar, BoundingBox2D, ImuPose};

use super::{
    DetectorModel, Frame, GroundTruthTick, InvalidConfig, ScenarioConfig, SpeedProfile, TraceHeader, TraceKind,
    TruthObject, VehicleSpec,
};

/// Vehicles this far ahead of the user, or this far away, leave the world.
const DESPAWN_AHEAD_M: f64 = 30.0;
const DESPAWN_RANGE_M: f64 = 200.0;

/// A generated trace with its ground truth, tick-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub header: TraceHeader,
    pub frames: Vec<Frame>,
    pub truth: Vec<GroundTruthTick>,
}

impl Scenario {
    pub fn truth_header(&self) -> TraceHeader {
        TraceHeader { kind: TraceKind::Truth, ..self.header.clone() }
    }
}

struct Vehicle<'a> {
    id: u64,
    spec: &'a VehicleSpec,
    /// World-frame position, m.
    pos: (f64, f64),
    /// Time of `pos`.
    t: f64,
    state: Life,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Life {
    Pending,
    Active,
    Gone,
}

impl Vehicle<'_> {
    fn speed(&self, t: f64) -> f64 {
        let s0 = self.spec.speed;
        match self.spec.profile {
            SpeedProfile::DecelerateAt { at, rate, min_speed } if t > at => {
                (s0 - rate * (t - at)).max(min_speed.min(s0))
            }
            _ => s0,
        }
    }

    fn lateral_speed(&self, t: f64) -> f64 {
        match self.spec.profile {
            SpeedProfile::LaneChangeAt { at, lateral_speed, duration } if t >= at && t < at + duration => {
                lateral_speed
            }
            _ => 0.0,
        }
    }

    fn velocity(&self, t: f64) -> (f64, f64) {
        let (s, c) = self.spec.heading.sin_cos();
        let v = self.speed(t);
        let l = self.lateral_speed(t);
        (v * s + l * c, v * c - l * s)
    }

    /// Times inside `(t0, t1)` where the velocity changes slope or jumps.
    fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut pts = match self.spec.profile {
            SpeedProfile::Constant => vec![],
            SpeedProfile::DecelerateAt { at, rate, min_speed } => {
                let stop = at + (self.spec.speed - min_speed).max(0.0) / rate;
                vec![at, stop]
            }
            SpeedProfile::LaneChangeAt { at, duration, .. } => vec![at, at + duration],
        };
        pts.retain(|&p| p > t0 && p < t1);
        pts.sort_by(f64::total_cmp);
        pts
    }

    /// Integrates the piecewise-linear velocity exactly up to `t1`.
    fn advance(&mut self, t1: f64) {
        let mut knots = vec![self.t];
        knots.extend(self.breakpoints(self.t, t1));
        knots.push(t1);
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let dt = b - a;
            if dt <= 0.0 {
                continue;
            }
            // evaluate just inside the piece so jumps at the knots do not leak in
            let eps = dt * 1e-9;
            let va = self.velocity(a + eps);
            let vb = self.velocity(b - eps);
            self.pos.0 += 0.5 * (va.0 + vb.0) * dt;
            self.pos.1 += 0.5 * (va.1 + vb.1) * dt;
        }
        self.t = t1;
    }
}

/// Head orientation at `t`: sinusoids with seeded phases.
struct Head {
    yaw_amp: f64,
    yaw_period: f64,
    yaw_phase: f64,
    pitch_amp: f64,
    pitch_period: f64,
    pitch_phase: f64,
}

impl Head {
    fn at(&self, t: f64) -> (f64, f64) {
        let yaw = self.yaw_amp * (TAU * t / self.yaw_period + self.yaw_phase).sin();
        let pitch = self.pitch_amp * (TAU * t / self.pitch_period + self.pitch_phase).sin();
        (pitch, yaw)
    }
}

fn gaussian(std: f64) -> Normal<f64> {
    Normal::new(0.0, std).expect("non-negative std")
}

pub fn generate(config: &ScenarioConfig) -> Result<Scenario, InvalidConfig> {
    config.validate()?;
    let header = TraceHeader::for_config(config, TraceKind::Trace);
    let model: DetectorModel = config.detector.resolve(config.tick_rate);
    let hm = config.head_motion();
    let intr = config.camera.intrinsics;
    let cam_h = config.camera.camera_height;
    let (img_w, img_h) = (config.camera.image_width, config.camera.image_height);
    let half_fov = 0.5 * config.fov();
    let occlusion = config.detector.occlusion_deg.to_radians();
    let user_speed = config.user.speed();

    // independent streams so that e.g. adding a vehicle does not change the head path
    let mut head_rng = ChaCha8Rng::seed_from_u64(config.seed);
    head_rng.set_stream(1);
    let mut det_rng = ChaCha8Rng::seed_from_u64(config.seed);
    det_rng.set_stream(2);

    let head = Head {
        yaw_amp: hm.yaw_amplitude,
        yaw_period: hm.yaw_period,
        yaw_phase: head_rng.random::<f64>() * TAU,
        pitch_amp: hm.pitch_amplitude,
        pitch_period: hm.pitch_period,
        pitch_phase: head_rng.random::<f64>() * TAU,
    };
    let jitter = gaussian(hm.jitter_std);
    let imu = gaussian(hm.imu_noise_std);
    let box_noise = gaussian(config.detector.box_noise_std);

    let mut vehicles: Vec<Vehicle> = config
        .vehicles
        .iter()
        .enumerate()
        .map(|(i, spec)| Vehicle { id: i as u64 + 1, spec, pos: (0.0, 0.0), t: 0.0, state: Life::Pending })
        .collect();

    let n = config.n_ticks();
    let mut frames = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 / config.tick_rate;
        let user_z = user_speed * t;

        let (pitch0, yaw0) = head.at(t);
        let true_pitch = pitch0 + jitter.sample(&mut head_rng);
        let head_yaw = yaw0 + jitter.sample(&mut head_rng);
        let true_pose = ImuPose::new(true_pitch, PI + head_yaw);
        let measured = ImuPose::new(
            true_pitch + imu.sample(&mut head_rng),
            PI + head_yaw + imu.sample(&mut head_rng),
        );

        let mut objects = Vec::new();
        for v in vehicles.iter_mut() {
            match v.state {
                Life::Gone => continue,
                Life::Pending if t + 1e-12 >= v.spec.spawn_time => {
                    let s = v.spec.spawn_time;
                    v.pos = (v.spec.x, user_speed * s + v.spec.z);
                    v.t = s;
                    v.state = Life::Active;
                }
                Life::Pending => continue,
                Life::Active => {}
            }
            v.advance(t);
            let (x, z) = (v.pos.0, v.pos.1 - user_z);
            if z > DESPAWN_AHEAD_M || x.hypot(z) > DESPAWN_RANGE_M {
                v.state = Life::Gone;
                continue;
            }
            let (wx, wz) = v.velocity(t);
            objects.push(TruthObject {
                id: v.id,
                class: v.spec.class,
                x,
                z,
                vx: wx,
                vz: wz - user_speed,
                height: v.spec.dimensions().1,
            });
        }

        // visible candidates as (depth, bearing, object index)
        let mut visible: Vec<(f64, f64, usize)> = objects
            .iter()
            .enumerate()
            .filter_map(|(i, o)| {
                let (lateral, depth) = user_to_camera_planar(o.x, o.z, true_pose.yaw);
                let bearing = lateral.atan2(depth);
                (depth > 0.0 && bearing.abs() <= half_fov).then_some((depth, bearing, i))
            })
            .collect();
        visible.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));

        let mut detections: Vec<BoundingBox2D> = Vec::new();
        for (j, &(_, bearing, i)) in visible.iter().enumerate() {
            let o = &objects[i];
            // fixed number of draws per visible object keeps the stream aligned
            let hit: f64 = det_rng.random();
            let score = 0.5 + 0.5 * det_rng.random::<f64>();
            let noise = [
                box_noise.sample(&mut det_rng),
                box_noise.sample(&mut det_rng),
                box_noise.sample(&mut det_rng),
                box_noise.sample(&mut det_rng),
            ];
            if visible[..j].iter().any(|&(_, b, _)| (b - bearing).abs() < occlusion) {
                continue;
            }
            if hit >= model.probability(o.range(), o.class, config.light) {
                continue;
            }
            let (w, h) = config.vehicles[(o.id - 1) as usize].dimensions();
            let Ok(b) = project_box(o.x, o.z, w, h, o.class, &true_pose, &intr, cam_h) else {
                continue;
            };
            let (u, v) = b.bottom_center();
            if !(0.0..=img_w).contains(&u) || !(0.0..=img_h).contains(&v) {
                continue;
            }
            detections.push(BoundingBox2D::new(
                b.x + noise[0],
                b.y + noise[1],
                (b.w + noise[2]).max(1.0),
                (b.h + noise[3]).max(1.0),
                o.class,
                score,
            ));
        }

        frames.push(Frame { t, pose: measured, detections });
        truth.push(GroundTruthTick { t, objects, true_pose });
    }
    Ok(Scenario { header, frames, truth })
}
