//! Seeded sampling of bodies and scenario parameters for dataset generation.
//! Every episode derives its own RNG from `(base seed, episode index)`, so
//! generation is deterministic regardless of worker layout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geom::{Quat, Vec3};
use crate::scalar::Real;

use super::body::{Pose, RigidBody, Shape};
use super::scenario::{Perturbation, Scenario, ScenarioKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    Sphere,
    Box,
    Capsule,
    Cylinder,
}

impl ShapeKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(Self::Sphere),
            "box" => Ok(Self::Box),
            "capsule" => Ok(Self::Capsule),
            "cylinder" => Ok(Self::Cylinder),
            other => Err(crate::Error::Config(format!("unknown shape '{other}'"))),
        }
    }
}

/// Sampling ranges for one scenario's episode generation.
#[derive(Debug, Clone)]
pub struct ScenarioConfig<R> {
    pub kind: ScenarioKind,
    pub episodes: usize,
    pub seed: u64,
    pub gravity: R,
    pub shapes: Vec<ShapeKind>,
    /// Characteristic size (radius / half extent), meters.
    pub size_range: (R, R),
    pub mass_range: (R, R),
    pub friction_range: (R, R),
    pub restitution_range: (R, R),
    /// Freefall drop height above the sensor, meters.
    pub drop_height_range: (R, R),
    /// Horizontal spawn jitter, meters.
    pub spawn_jitter: R,
    pub incline_angle_range: (R, R),
    pub perturb_accel_range: (R, R),
    pub perturb_duration: R,
}

impl<R: Real> ScenarioConfig<R> {
    pub fn defaults(kind: ScenarioKind) -> Self {
        let shapes = match kind {
            // flat-face contact keeps the stick/slide physics clean
            ScenarioKind::Incline => vec![ShapeKind::Box],
            // elongated bodies topple or slide depending on the push
            ScenarioKind::Perturb => vec![ShapeKind::Cylinder, ShapeKind::Box],
            ScenarioKind::Freefall => {
                vec![ShapeKind::Sphere, ShapeKind::Box, ShapeKind::Capsule, ShapeKind::Cylinder]
            }
        };
        Self {
            kind,
            episodes: match kind {
                ScenarioKind::Freefall => 200,
                _ => 300,
            },
            seed: 0,
            gravity: R::c(9.81),
            shapes,
            size_range: (R::c(0.008), R::c(0.018)),
            mass_range: (R::c(0.05), R::c(0.2)),
            friction_range: (R::c(0.2), R::c(0.8)),
            restitution_range: (R::zero(), R::c(0.4)),
            drop_height_range: (R::c(0.02), R::c(0.06)),
            spawn_jitter: R::c(0.005),
            incline_angle_range: (R::c(5f64.to_radians()), R::c(35f64.to_radians())),
            perturb_accel_range: (R::c(5.0), R::c(40.0)),
            perturb_duration: R::c(0.1),
        }
    }
}

fn sample_range<R: Real>(rng: &mut ChaCha8Rng, range: (R, R)) -> R {
    let u = R::c(rng.gen::<f64>());
    range.0 + (range.1 - range.0) * u
}

/// Uniform random unit quaternion (Shoemake's method).
fn sample_orientation<R: Real>(rng: &mut ChaCha8Rng) -> Quat<R> {
    let u1 = rng.gen::<f64>();
    let u2 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
    let u3 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    Quat::new(R::c(b * u3.cos()), R::c(a * u2.sin()), R::c(a * u2.cos()), R::c(b * u3.sin()))
}

fn sample_shape<R: Real>(rng: &mut ChaCha8Rng, cfg: &ScenarioConfig<R>) -> Shape<R> {
    let kind = cfg.shapes[rng.gen_range(0..cfg.shapes.len())];
    let s = sample_range(rng, cfg.size_range);
    match kind {
        ShapeKind::Sphere => Shape::Sphere { radius: s },
        ShapeKind::Box => {
            let ay = sample_range(rng, cfg.size_range);
            let az = sample_range(rng, cfg.size_range);
            Shape::Box { half_extents: Vec3::new(s, ay, az) }
        }
        ShapeKind::Capsule => Shape::Capsule { half_length: s, radius: s * R::half() },
        ShapeKind::Cylinder => Shape::Cylinder { half_length: s, radius: s * R::c(0.6) },
    }
}

/// Drop the body along -z until its lowest support point touches the plane.
fn settle_on_plane<R: Real>(body: &mut RigidBody<R>) {
    let n = Vec3::unit_z();
    let min_d = body
        .support_points(n, R::c(1e-7))
        .iter()
        .map(|p| n.dot(*p))
        .fold(R::infinity(), R::min);
    body.position.z -= min_d;
}

/// Sample the scenario parameters and spawn state for one episode.
pub fn sample_episode<R: Real>(cfg: &ScenarioConfig<R>, episode_index: u64) -> (Scenario<R>, RigidBody<R>) {
    let seed = cfg.seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(episode_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let shape = sample_shape(&mut rng, cfg);
    let mass = sample_range(&mut rng, cfg.mass_range);
    let jitter_x = sample_range(&mut rng, (-cfg.spawn_jitter, cfg.spawn_jitter));
    let jitter_y = sample_range(&mut rng, (-cfg.spawn_jitter, cfg.spawn_jitter));
    let color = [
        R::c(rng.gen_range(0.3..1.0)),
        R::c(rng.gen_range(0.3..1.0)),
        R::c(rng.gen_range(0.3..1.0)),
    ];

    let mut body = RigidBody::new(
        shape,
        mass,
        Pose { position: Vec3::new(jitter_x, jitter_y, R::zero()), orientation: Quat::identity() },
    );
    body.color = color;
    body.friction = sample_range(&mut rng, cfg.friction_range);
    body.restitution = sample_range(&mut rng, cfg.restitution_range);

    let mut scenario = Scenario::new(cfg.kind, cfg.gravity, seed);
    match cfg.kind {
        ScenarioKind::Freefall => {
            body.orientation = sample_orientation(&mut rng);
            let h = sample_range(&mut rng, cfg.drop_height_range);
            body.position.z = h + body.shape.bounding_radius();
            body.ang_vel_body = Vec3::new(
                sample_range(&mut rng, (-R::c(3.0), R::c(3.0))),
                sample_range(&mut rng, (-R::c(3.0), R::c(3.0))),
                sample_range(&mut rng, (-R::c(3.0), R::c(3.0))),
            );
        }
        ScenarioKind::Incline => {
            let theta = sample_range(&mut rng, cfg.incline_angle_range);
            scenario = scenario.with_incline(theta).expect("configured incline angle in range");
            // flat face down, random yaw, resting on the plane
            let yaw = R::c(rng.gen::<f64>() * 2.0 * std::f64::consts::PI);
            body.orientation = Quat::from_axis_angle(Vec3::unit_z(), yaw);
            settle_on_plane(&mut body);
        }
        ScenarioKind::Perturb => {
            let yaw = R::c(rng.gen::<f64>() * 2.0 * std::f64::consts::PI);
            body.orientation = Quat::from_axis_angle(Vec3::unit_z(), yaw);
            settle_on_plane(&mut body);
            let magnitude = sample_range(&mut rng, cfg.perturb_accel_range);
            let direction = R::c(rng.gen::<f64>() * 2.0 * std::f64::consts::PI);
            scenario = scenario.with_perturbation(Perturbation {
                magnitude,
                direction,
                duration: cfg.perturb_duration,
            });
        }
    }
    (scenario, body)
}
