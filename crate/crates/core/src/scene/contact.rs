//! Semi-implicit Euler stepping with impulse-based plane contact and Coulomb
//! friction.
//!
//! Contacts are resolved predictively (a point is constrained when it would
//! cross the plane within the step), so resting bodies do not sink and no
//! positional bias that could feed energy into the system is needed. Every
//! sequential impulse moves the contact-point velocity toward a target of
//! smaller magnitude, which makes each update dissipative in kinetic energy.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::Real;

use super::body::RigidBody;

/// Infinite support plane `normal · x = offset`, normal pointing toward the body.
#[derive(Debug, Clone, Copy)]
pub struct SupportPlane<R> {
    pub normal: Vec3<R>,
    pub offset: R,
    pub friction: R,
}

impl<R: Real> SupportPlane<R> {
    /// The sensor plane z = 0.
    pub fn sensor() -> Self {
        Self { normal: Vec3::unit_z(), offset: R::zero(), friction: R::half() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepParams<R> {
    pub dt: R,
    pub gravity: Vec3<R>,
    pub external_accel: Vec3<R>,
}

impl<R: Real> StepParams<R> {
    pub fn new(dt: R, gravity: Vec3<R>) -> Self {
        Self { dt, gravity, external_accel: Vec3::zero() }
    }
}

/// Per-step contact diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepInfo<R> {
    pub normal_impulse: R,
    pub tangent_impulse: R,
    pub contact_count: usize,
    pub max_penetration: R,
}

const SOLVER_ITERATIONS: usize = 24;

/// Gel contact is lossy beyond Coulomb slip: rolling resistance and surface
/// adhesion bleed momentum whenever the body is loaded against the plane.
/// Without it a rolling sphere never stops. Exponential decay rates in 1/s;
/// pure scaling of the velocities keeps every step dissipative.
const LIN_CONTACT_DAMPING: f64 = 5.0;
const ANG_CONTACT_DAMPING: f64 = 12.0;

struct Contact<R> {
    point: Vec3<R>,
    /// Normal-direction effective-mass denominator.
    k_normal: R,
    target_vn: R,
    jn_acc: R,
    /// Accumulated friction impulse vector (in the tangent plane).
    jt_acc: Vec3<R>,
}

/// One integration step. Velocities first (gravity + external acceleration),
/// then contact impulses, then positions.
pub fn step<R: Real>(
    body: &mut RigidBody<R>,
    plane: Option<&SupportPlane<R>>,
    params: &StepParams<R>,
) -> Result<StepInfo<R>> {
    if !body.is_finite() {
        return Err(Error::NonFiniteState(format!(
            "pre-step state not finite: pos {:?} vel {:?}",
            body.position, body.velocity
        )));
    }
    let dt = params.dt;
    let energy_budget = body.mechanical_energy(params.gravity);
    body.velocity += (params.gravity + params.external_accel).scale(dt);

    let mut info: StepInfo<R> = StepInfo::default();
    if let Some(plane) = plane {
        let n = plane.normal;
        let omega = body.ang_vel_world();
        // allow for support-point drift due to rotation within the step
        let manifold_margin = R::c(1e-5) + omega.norm() * body.shape.bounding_radius() * dt;
        let mu = body.friction.min(plane.friction);
        let mut contacts: Vec<Contact<R>> = Vec::new();
        // consider every support candidate against the plane, not only the
        // deepest: on a penetrated spinning body the deepest point can be the
        // one instantaneously separating, and constraining it alone lets the
        // rest of the body sink through
        for point in body.support_points(n, R::infinity()) {
            let dist = n.dot(point) - plane.offset;
            let r = point - body.position;
            let vp = body.velocity + omega.cross(r);
            let vn = n.dot(vp);
            let predicted = dist + vn * dt;
            if predicted < manifold_margin || dist < R::zero() {
                let k_normal = effective_mass_denom(body, r, n);
                let e = restitution_for(body, vn, params);
                // a separated contact may still approach fast enough to close
                // the remaining gap this step; anything beyond that is removed
                let allowed_approach = dist.max(R::zero()) / dt;
                let bounce = -e * vn;
                let target_vn = if bounce > R::zero() { bounce } else { -allowed_approach };
                info.max_penetration = info.max_penetration.max(-dist);
                contacts.push(Contact { point, k_normal, target_vn, jn_acc: R::zero(), jt_acc: Vec3::zero() });
            }
        }
        info.contact_count = contacts.len();

        for _ in 0..SOLVER_ITERATIONS {
            for c in contacts.iter_mut() {
                let r = c.point - body.position;
                // normal impulse toward the restitution target
                let vp = body.velocity + body.ang_vel_world().cross(r);
                let vn = n.dot(vp);
                let dj = (c.target_vn - vn) / c.k_normal;
                let jn_new = (c.jn_acc + dj).max(R::zero());
                let applied = jn_new - c.jn_acc;
                c.jn_acc = jn_new;
                apply_impulse(body, n.scale(applied), r);

                // Coulomb friction clamped to the cone
                let vp = body.velocity + body.ang_vel_world().cross(r);
                let vt = vp - n.scale(n.dot(vp));
                let vt_norm = vt.norm();
                if vt_norm > R::c(1e-12) {
                    let t_dir = vt / vt_norm;
                    let k_t = effective_mass_denom(body, r, t_dir);
                    let want = vt_norm / k_t;
                    let jt_new_raw = c.jt_acc - t_dir.scale(want);
                    let cap = mu * c.jn_acc;
                    let jt_new = clamp_norm(jt_new_raw, cap);
                    let applied_t = jt_new - c.jt_acc;
                    c.jt_acc = jt_new;
                    apply_impulse(body, applied_t, r);
                }
            }
        }
        for c in &contacts {
            info.normal_impulse += c.jn_acc;
            info.tangent_impulse += c.jt_acc.norm();
            debug_assert!(c.jt_acc.norm() <= mu * c.jn_acc + R::c(1e-12));
        }
        if info.normal_impulse > R::zero() {
            body.velocity = body.velocity.scale((-R::c(LIN_CONTACT_DAMPING) * dt).exp());
            body.ang_vel_body = body.ang_vel_body.scale((-R::c(ANG_CONTACT_DAMPING) * dt).exp());
        }
    }

    // The sequential impulse solver is dissipative per update, but with many
    // simultaneous contacts its fixed iteration count can leave a state whose
    // energy slightly exceeds the pre-step value. Project back onto the energy
    // budget by uniformly scaling the velocities: post-step energy is
    // E(s) = s²·KE + s·b + PE₀ with b the gravity work over the position
    // update, so the admissible scale solves a quadratic. External acceleration
    // does real work, so no budget applies while it is active.
    if params.external_accel == Vec3::zero() {
        let ke = body.mechanical_energy(params.gravity)
            + body.mass * params.gravity.dot(body.position);
        let b = -body.mass * params.gravity.dot(body.velocity) * dt;
        let pe0 = -body.mass * params.gravity.dot(body.position);
        if ke > R::zero() && ke + b + pe0 > energy_budget {
            let ke0 = energy_budget - pe0;
            let disc = (b * b + R::c(4.0) * ke * ke0).max(R::zero());
            let s = ((disc.sqrt() - b) / (R::c(2.0) * ke)).max(R::zero()).min(R::one());
            body.velocity = body.velocity.scale(s);
            body.ang_vel_body = body.ang_vel_body.scale(s);
        }
    }

    body.position += body.velocity.scale(dt);
    body.orientation = body.orientation.integrate_body(body.ang_vel_body, dt);

    if !body.is_finite() {
        return Err(Error::NonFiniteState("post-step state not finite".into()));
    }
    Ok(info)
}

/// Restitution with a low-speed cutoff so that settling contacts do not gain
/// energy from the discrete-time impact law.
fn restitution_for<R: Real>(body: &RigidBody<R>, vn: R, params: &StepParams<R>) -> R {
    let e = body.restitution;
    if e <= R::zero() {
        return R::zero();
    }
    let g = params.gravity.norm();
    let threshold =
        (R::c(4.0) * g * params.dt * (R::one() + e) / (R::one() - e)).max(R::c(0.05));
    if -vn > threshold {
        e
    } else {
        R::zero()
    }
}

fn effective_mass_denom<R: Real>(body: &RigidBody<R>, r: Vec3<R>, dir: Vec3<R>) -> R {
    let rn = r.cross(dir);
    let ang = body.inv_inertia_world(rn).cross(r);
    R::one() / body.mass + dir.dot(ang)
}

fn apply_impulse<R: Real>(body: &mut RigidBody<R>, j: Vec3<R>, r: Vec3<R>) {
    body.velocity += j.scale(R::one() / body.mass);
    let torque_b = body.orientation.rotate_inv(r.cross(j));
    body.ang_vel_body += Vec3::new(
        torque_b.x / body.inertia_body.x,
        torque_b.y / body.inertia_body.y,
        torque_b.z / body.inertia_body.z,
    );
}

fn clamp_norm<R: Real>(v: Vec3<R>, max_norm: R) -> Vec3<R> {
    let n = v.norm();
    if n <= max_norm || n == R::zero() {
        v
    } else {
        v.scale(max_norm / n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Quat;
    use crate::scene::body::{Pose, Shape};
    use approx::assert_relative_eq;

    const DT: f64 = 1.0 / 240.0;

    fn gravity() -> Vec3<f64> {
        Vec3::new(0.0, 0.0, -9.81)
    }

    fn sphere_at(z: f64) -> RigidBody<f64> {
        RigidBody::new(
            Shape::Sphere { radius: 0.01 },
            0.1,
            Pose { position: Vec3::new(0.0, 0.0, z), orientation: Quat::identity() },
        )
    }

    #[test]
    fn resting_sphere_fixed_point() {
        let mut body = sphere_at(0.01);
        let plane = SupportPlane::sensor();
        let params = StepParams::new(DT, gravity());
        let p0 = body.position;
        for _ in 0..1000 {
            step(&mut body, Some(&plane), &params).unwrap();
        }
        assert!((body.position - p0).norm() < 1e-9);
        assert!(body.velocity.norm() < 1e-9);
    }

    #[test]
    fn ballistic_matches_closed_form() {
        let mut body = sphere_at(0.5);
        body.velocity = Vec3::new(0.3, -0.1, 0.2);
        let params = StepParams::new(DT, gravity());
        let v0 = body.velocity;
        let p0 = body.position;
        let n = 120;
        for _ in 0..n {
            step(&mut body, None, &params).unwrap();
        }
        // semi-implicit Euler closed form: p = p0 + Σ_{k=1..n} (v0 + k g dt) dt
        let t = n as f64 * DT;
        let sum_k = (n * (n + 1) / 2) as f64;
        let expect = p0 + v0.scale(t) + gravity().scale(sum_k * DT * DT);
        assert!((body.position - expect).norm() < 1e-12);
    }

    #[test]
    fn inelastic_drop_no_rebound() {
        let mut body = sphere_at(0.05);
        body.restitution = 0.0;
        let plane = SupportPlane::sensor();
        let params = StepParams::new(DT, gravity());
        for _ in 0..(240 * 2) {
            step(&mut body, Some(&plane), &params).unwrap();
        }
        assert!(body.velocity.norm() < 1e-9);
        assert_relative_eq!(body.position.z, 0.01, epsilon = 1e-4);
    }

    #[test]
    fn energy_non_increasing_bouncing_sphere() {
        let mut body = sphere_at(0.08);
        body.restitution = 0.5;
        let plane = SupportPlane::sensor();
        let params = StepParams::new(DT, gravity());
        let mut e_prev = body.mechanical_energy(gravity());
        for _ in 0..(240 * 3) {
            step(&mut body, Some(&plane), &params).unwrap();
            let e = body.mechanical_energy(gravity());
            assert!(e <= e_prev * (1.0 + 1e-9) + 1e-15, "energy increased: {e_prev} -> {e}");
            e_prev = e;
        }
    }

    #[test]
    fn energy_non_increasing_tumbling_box() {
        let mut body = RigidBody::new(
            Shape::Box { half_extents: Vec3::new(0.015, 0.01, 0.008) },
            0.12,
            Pose {
                position: Vec3::new(0.0, 0.0, 0.06),
                orientation: Quat::from_axis_angle(Vec3::new(1.0, 0.7, 0.3), 0.8),
            },
        );
        body.ang_vel_body = Vec3::new(3.0, -2.0, 5.0);
        body.restitution = 0.3;
        body.friction = 0.5;
        let plane = SupportPlane::sensor();
        let params = StepParams::new(DT, gravity());
        let mut e_prev = body.mechanical_energy(gravity());
        for i in 0..(240 * 3) {
            step(&mut body, Some(&plane), &params).unwrap();
            let e = body.mechanical_energy(gravity());
            assert!(
                e <= e_prev + 1e-9 * e_prev.abs().max(1e-6),
                "energy increased at step {i}: {e_prev} -> {e}"
            );
            e_prev = e;
        }
    }

    #[test]
    fn friction_cone_respected() {
        let mut body = RigidBody::new(
            Shape::Box { half_extents: Vec3::new(0.01, 0.01, 0.01) },
            0.1,
            Pose { position: Vec3::new(0.0, 0.0, 0.01), orientation: Quat::identity() },
        );
        body.friction = 0.3;
        body.velocity = Vec3::new(0.5, 0.0, 0.0);
        let plane = SupportPlane { friction: 0.3, ..SupportPlane::sensor() };
        let params = StepParams::new(DT, gravity());
        for _ in 0..240 {
            let info = step(&mut body, Some(&plane), &params).unwrap();
            assert!(info.tangent_impulse <= 0.3 * info.normal_impulse + 1e-12);
        }
        // sliding box decelerates at μg
        assert!(body.velocity.x < 0.5);
    }

    #[test]
    fn rolling_sphere_comes_to_rest() {
        let mut body = sphere_at(0.01);
        body.ang_vel_body = Vec3::new(0.0, 3.0, 0.0);
        body.velocity = Vec3::new(0.03, 0.0, 0.0); // rolling without slipping
        body.friction = 0.5;
        let plane = SupportPlane::sensor();
        let params = StepParams::new(DT, gravity());
        for _ in 0..(240 * 3) {
            step(&mut body, Some(&plane), &params).unwrap();
        }
        assert!(body.velocity.norm() < 1e-3, "still translating: {:?}", body.velocity);
        assert!(body.ang_vel_body.norm() < 1e-2, "still spinning: {:?}", body.ang_vel_body);
    }

    #[test]
    fn nan_state_rejected() {
        let mut body = sphere_at(0.01);
        body.velocity = Vec3::new(f64::NAN, 0.0, 0.0);
        let params = StepParams::new(DT, gravity());
        assert!(matches!(step(&mut body, None, &params), Err(Error::NonFiniteState(_))));
    }

    #[test]
    fn quaternion_norm_stable_long_run() {
        let mut body = sphere_at(1.0);
        body.ang_vel_body = Vec3::new(2.0, 3.0, -1.0);
        let params = StepParams::new(DT, Vec3::zero());
        for _ in 0..100_000 {
            step(&mut body, None, &params).unwrap();
        }
        assert!((body.orientation.norm() - 1.0).abs() < 1e-9);
    }
}
