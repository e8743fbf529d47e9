//! Episode runner: physics stepping coupled to the compliance solve and the
//! tactile/visual render pipeline, with rest and fall-off detection.

use crate::compliance::{solve_equilibrium, SpringField};
use crate::error::Result;
use crate::geom::Vec3;
use crate::heightfield::{normals_from_covariance, HeightMap, ScalarField};
use crate::render::{render_tactile, DarkeningParams, ImageRgb, PhongParams, Rgb};
use crate::scalar::Real;

use super::body::{Pose, RigidBody};
use super::contact::{step, StepParams, SupportPlane};
use super::scenario::{detect_rest, RestState, Scenario};
use super::visual::render_visual;

/// Sensor pixel grid. The sensor plane is z = 0, centered at the origin.
#[derive(Debug, Clone, Copy)]
pub struct SensorGeometry<R> {
    pub width_px: usize,
    pub height_px: usize,
    pub pitch: R,
    pub gel_thickness: R,
}

impl<R: Real> SensorGeometry<R> {
    pub fn half_width(&self) -> R {
        R::from_usize(self.width_px).unwrap() * self.pitch * R::half()
    }

    pub fn half_height(&self) -> R {
        R::from_usize(self.height_px).unwrap() * self.pitch * R::half()
    }

    /// Metric coordinates of a pixel center.
    pub fn pixel_center(&self, px: usize, py: usize) -> (R, R) {
        let x = (R::from_usize(px).unwrap() + R::half()) * self.pitch - self.half_width();
        let y = (R::from_usize(py).unwrap() + R::half()) * self.pitch - self.half_height();
        (x, y)
    }
}

/// Everything needed to turn a body pose into sensor observations.
#[derive(Debug, Clone)]
pub struct SensorRig<R> {
    pub geometry: SensorGeometry<R>,
    pub springs: SpringField<R>,
    pub phong: PhongParams<R>,
    pub darkening: DarkeningParams<R>,
    pub background: Rgb<R>,
    /// Distance at which the visual channel fades to black.
    pub visual_far: R,
    pub normal_radius: usize,
}

impl<R: Real> SensorRig<R> {
    pub fn with_defaults(geometry: SensorGeometry<R>, springs: SpringField<R>) -> Self {
        Self {
            geometry,
            springs,
            phong: PhongParams::default_rig(),
            darkening: DarkeningParams::new(R::half(), geometry.gel_thickness),
            background: [R::c(0.05); 3],
            visual_far: R::c(0.1),
            normal_radius: 2,
        }
    }

    /// Undeformed gap between the body's lower surface and the sensor plane
    /// at each pixel; +∞ where the body does not cover the pixel.
    pub fn clearance_field(&self, body: &RigidBody<R>) -> ScalarField<R> {
        let g = &self.geometry;
        ScalarField::from_fn(g.width_px, g.height_px, g.pitch, |px, py| {
            let (x, y) = g.pixel_center(px, py);
            body.raycast_up(x, y).unwrap_or(R::infinity())
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame<R> {
    pub visual: ImageRgb<R>,
    pub tactile: ImageRgb<R>,
    pub pose: Pose<R>,
    pub contact_mask: Vec<bool>,
    pub contact_active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord<R> {
    pub scenario: Scenario<R>,
    /// Body state at spawn.
    pub initial_body: RigidBody<R>,
    pub frames: Vec<Frame<R>>,
    pub rest: RestState<R>,
    /// Body never rested and never fell off within the frame budget.
    pub unresolved: bool,
    /// Frames whose compliance load had to be clamped at spring capacity.
    pub saturated_frames: usize,
}

impl<R: Real> EpisodeRecord<R> {
    pub fn condition(&self) -> Option<[R; 3]> {
        self.scenario.condition()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EpisodeParams<R> {
    pub dt: R,
    pub max_frames: usize,
    /// Physics steps per recorded frame.
    pub frame_stride: usize,
    pub lin_thresh: R,
    pub ang_thresh: R,
    pub rest_window: usize,
}

impl<R: Real> Default for EpisodeParams<R> {
    fn default() -> Self {
        Self {
            dt: R::c(1.0 / 240.0),
            max_frames: 200,
            frame_stride: 12,
            lin_thresh: R::c(1e-3),
            ang_thresh: R::c(1e-2),
            rest_window: 30,
        }
    }
}

/// Render one observation frame given the average normal load over the
/// preceding window. Returns the frame and whether the load saturated the
/// springs.
pub fn render_frame<R: Real>(body: &RigidBody<R>, rig: &SensorRig<R>, load: R) -> Result<(Frame<R>, bool)> {
    let clearance = rig.clearance_field(body);
    let finite_px = clearance.values.iter().filter(|c| c.is_finite()).count();
    let capacity = rig.springs.stiffness * rig.springs.gel_thickness * R::from_usize(finite_px).unwrap();
    let mut saturated = false;
    let effective_load = if load > capacity {
        saturated = true;
        capacity
    } else {
        load
    };
    let (depth, mask) = if effective_load > R::zero() && finite_px > 0 {
        let sol = solve_equilibrium(&clearance, effective_load, &rig.springs)?;
        (sol.depth, sol.mask)
    } else {
        (
            HeightMap::flat(rig.geometry.width_px, rig.geometry.height_px, rig.geometry.pitch)?,
            vec![false; rig.geometry.width_px * rig.geometry.height_px],
        )
    };
    let normals = normals_from_covariance(&depth, rig.normal_radius)?;
    let tactile = render_tactile(&depth, &normals, &rig.phong, &rig.darkening)?;
    let visual = render_visual(Some(body), &rig.geometry, rig.background, rig.visual_far);
    let contact_active = mask.iter().any(|&m| m);
    Ok((Frame { visual, tactile, pose: body.pose(), contact_mask: mask, contact_active }, saturated))
}

fn fell_off<R: Real>(body: &RigidBody<R>, geometry: &SensorGeometry<R>) -> bool {
    let margin = body.shape.bounding_radius() + R::c(0.02);
    body.position.x.abs() > geometry.half_width() + margin
        || body.position.y.abs() > geometry.half_height() + margin
        || body.position.z < -R::c(0.05)
}

/// Static weight supported by the plane, used for the load of the initial
/// frame when the body spawns already in contact.
fn static_load<R: Real>(body: &RigidBody<R>, gravity: Vec3<R>) -> R {
    let n = Vec3::unit_z();
    let touching = body
        .support_points(n, R::c(1e-6))
        .iter()
        .any(|p| n.dot(*p) <= R::c(1e-5));
    if touching {
        (-gravity.z) * body.mass
    } else {
        R::zero()
    }
}

/// Run one full episode: step physics, record frames through the sensor
/// pipeline, stop at rest, fall-off, or the frame budget.
pub fn run_episode<R: Real>(
    scenario: &Scenario<R>,
    body: &RigidBody<R>,
    rig: &SensorRig<R>,
    params: &EpisodeParams<R>,
) -> Result<EpisodeRecord<R>> {
    let gravity = scenario.gravity_vec();
    let plane = SupportPlane { normal: Vec3::unit_z(), offset: R::zero(), friction: body.friction };
    let mut body_state = body.clone();
    let mut frames = Vec::new();
    let mut saturated_frames = 0usize;

    let (frame0, sat0) = render_frame(&body_state, rig, static_load(&body_state, gravity))?;
    saturated_frames += sat0 as usize;
    frames.push(frame0);

    let mut history: Vec<(R, R)> = Vec::new();
    let mut resting = false;
    let mut fell = false;
    let mut elapsed = R::zero();

    'frames: for _ in 1..=params.max_frames {
        let mut impulse_accum = R::zero();
        let mut steps_done = 0usize;
        for _ in 0..params.frame_stride {
            let external = match scenario.perturbation {
                Some(p) if elapsed < p.duration => p.accel(),
                _ => Vec3::zero(),
            };
            let sp = StepParams { dt: params.dt, gravity, external_accel: external };
            let info = step(&mut body_state, Some(&plane), &sp)?;
            impulse_accum += info.normal_impulse;
            elapsed += params.dt;
            steps_done += 1;
            history.push((body_state.velocity.norm(), body_state.ang_vel_world().norm()));
            if detect_rest(&history, params.lin_thresh, params.ang_thresh, params.rest_window) {
                resting = true;
            }
            if fell_off(&body_state, &rig.geometry) {
                fell = true;
            }
            if resting || fell {
                let load = impulse_accum / (R::from_usize(steps_done).unwrap() * params.dt);
                let (frame, sat) = render_frame(&body_state, rig, load)?;
                saturated_frames += sat as usize;
                frames.push(frame);
                break 'frames;
            }
        }
        let load = impulse_accum / (R::from_usize(params.frame_stride).unwrap() * params.dt);
        let (frame, sat) = render_frame(&body_state, rig, load)?;
        saturated_frames += sat as usize;
        frames.push(frame);
    }

    let rest = RestState {
        resting,
        frames_to_rest: frames.len() - 1,
        final_pose: body_state.pose(),
        fell_off_sensor: fell,
    };
    Ok(EpisodeRecord {
        scenario: *scenario,
        initial_body: body.clone(),
        frames,
        rest,
        unresolved: !resting && !fell,
        saturated_frames,
    })
}
