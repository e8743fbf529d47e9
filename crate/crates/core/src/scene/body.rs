//! Convex rigid-body primitives: analytic inertia, plane support points and
//! vertical raycasts (used for clearance fields and the visual channel).

use crate::geom::{Quat, Vec3};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape<R> {
    Sphere { radius: R },
    /// Axis-aligned half extents in the body frame.
    Box { half_extents: Vec3<R> },
    /// Axis along body z; `half_length` is the cylindrical half-length.
    Capsule { half_length: R, radius: R },
    Cylinder { half_length: R, radius: R },
}

impl<R: Real> Shape<R> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Shape::Sphere { .. } => "sphere",
            Shape::Box { .. } => "box",
            Shape::Capsule { .. } => "capsule",
            Shape::Cylinder { .. } => "cylinder",
        }
    }

    /// Diagonal inertia tensor in the body frame for the given mass.
    pub fn inertia_diag(&self, mass: R) -> Vec3<R> {
        match *self {
            Shape::Sphere { radius } => {
                let i = R::c(0.4) * mass * radius * radius;
                Vec3::new(i, i, i)
            }
            Shape::Box { half_extents: h } => {
                let f = mass / R::c(3.0);
                Vec3::new(
                    f * (h.y * h.y + h.z * h.z),
                    f * (h.x * h.x + h.z * h.z),
                    f * (h.x * h.x + h.y * h.y),
                )
            }
            Shape::Cylinder { half_length, radius } => {
                let h = half_length * R::two();
                let ixy = mass * (R::c(3.0) * radius * radius + h * h) / R::c(12.0);
                let iz = mass * radius * radius * R::half();
                Vec3::new(ixy, ixy, iz)
            }
            Shape::Capsule { half_length, radius } => {
                let h = half_length * R::two();
                let v_cyl = R::c(std::f64::consts::PI) * radius * radius * h;
                let v_sph = R::c(4.0 / 3.0 * std::f64::consts::PI) * radius * radius * radius;
                let m_cyl = mass * v_cyl / (v_cyl + v_sph);
                let m_sph = mass - m_cyl;
                let ixy = m_cyl * (h * h / R::c(12.0) + radius * radius / R::c(4.0))
                    + m_sph
                        * (R::c(0.4) * radius * radius
                            + h * h * R::half() * R::half()
                            + R::c(3.0 / 8.0) * h * radius);
                let iz = m_cyl * radius * radius * R::half() + m_sph * R::c(0.4) * radius * radius;
                Vec3::new(ixy, ixy, iz)
            }
        }
    }

    /// Radius of the bounding sphere; used for contact prediction margins.
    pub fn bounding_radius(&self) -> R {
        match *self {
            Shape::Sphere { radius } => radius,
            Shape::Box { half_extents: h } => h.norm(),
            Shape::Capsule { half_length, radius } => half_length + radius,
            Shape::Cylinder { half_length, radius } => (half_length * half_length + radius * radius).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<R> {
    pub position: Vec3<R>,
    pub orientation: Quat<R>,
}

impl<R: Real> Pose<R> {
    /// 7 scalars: position, then quaternion w-first.
    pub fn to_array(&self) -> [R; 7] {
        [
            self.position.x,
            self.position.y,
            self.position.z,
            self.orientation.w,
            self.orientation.x,
            self.orientation.y,
            self.orientation.z,
        ]
    }

    pub fn from_array(a: [R; 7]) -> Self {
        Self {
            position: Vec3::new(a[0], a[1], a[2]),
            orientation: Quat::new(a[3], a[4], a[5], a[6]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigidBody<R> {
    pub shape: Shape<R>,
    pub mass: R,
    /// Diagonal inertia in the body frame.
    pub inertia_body: Vec3<R>,
    pub position: Vec3<R>,
    pub orientation: Quat<R>,
    pub velocity: Vec3<R>,
    /// Angular velocity in the body frame. A torque-free body keeps it
    /// constant, which keeps rotational kinetic energy exactly conserved.
    pub ang_vel_body: Vec3<R>,
    pub color: [R; 3],
    pub friction: R,
    pub restitution: R,
}

impl<R: Real> RigidBody<R> {
    pub fn new(shape: Shape<R>, mass: R, pose: Pose<R>) -> Self {
        Self {
            shape,
            mass,
            inertia_body: shape.inertia_diag(mass),
            position: pose.position,
            orientation: pose.orientation,
            velocity: Vec3::zero(),
            ang_vel_body: Vec3::zero(),
            color: [R::c(0.8), R::c(0.3), R::c(0.2)],
            friction: R::half(),
            restitution: R::zero(),
        }
    }

    pub fn pose(&self) -> Pose<R> {
        Pose { position: self.position, orientation: self.orientation }
    }

    pub fn ang_vel_world(&self) -> Vec3<R> {
        self.orientation.rotate(self.ang_vel_body)
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite()
            && self.orientation.is_finite()
            && self.velocity.is_finite()
            && self.ang_vel_body.is_finite()
    }

    /// Apply the world-frame inverse inertia to a world vector.
    pub fn inv_inertia_world(&self, u: Vec3<R>) -> Vec3<R> {
        let ub = self.orientation.rotate_inv(u);
        let w = Vec3::new(ub.x / self.inertia_body.x, ub.y / self.inertia_body.y, ub.z / self.inertia_body.z);
        self.orientation.rotate(w)
    }

    /// Kinetic plus potential energy for the given gravity vector.
    pub fn mechanical_energy(&self, gravity: Vec3<R>) -> R {
        let lin = R::half() * self.mass * self.velocity.norm_sq();
        let w = self.ang_vel_body;
        let rot = R::half()
            * (self.inertia_body.x * w.x * w.x
                + self.inertia_body.y * w.y * w.y
                + self.inertia_body.z * w.z * w.z);
        lin + rot - self.mass * gravity.dot(self.position)
    }

    /// Candidate contact points against a plane, world frame. Returns the
    /// points whose signed plane distance is within `margin` of the deepest
    /// one (a face or line contact yields several).
    pub fn support_points(&self, plane_normal: Vec3<R>, margin: R) -> Vec<Vec3<R>> {
        let n = plane_normal;
        let mut cands: Vec<Vec3<R>> = Vec::new();
        match self.shape {
            Shape::Sphere { radius } => {
                cands.push(self.position - n.scale(radius));
            }
            Shape::Box { half_extents: h } => {
                for sx in [-R::one(), R::one()] {
                    for sy in [-R::one(), R::one()] {
                        for sz in [-R::one(), R::one()] {
                            let local = Vec3::new(h.x * sx, h.y * sy, h.z * sz);
                            cands.push(self.position + self.orientation.rotate(local));
                        }
                    }
                }
            }
            Shape::Capsule { half_length, radius } => {
                let axis = self.orientation.rotate(Vec3::unit_z());
                for s in [-R::one(), R::one()] {
                    cands.push(self.position + axis.scale(half_length * s) - n.scale(radius));
                }
            }
            Shape::Cylinder { half_length, radius } => {
                let axis = self.orientation.rotate(Vec3::unit_z());
                // rim basis: steepest descent on the rim when defined, any
                // radial otherwise (axis parallel to the normal). Four points
                // per cap so a cap resting nearly flat still has a support
                // polygon instead of one wandering rim point.
                let radial = (-n) - axis.scale((-n).dot(axis));
                let u = radial.normalized(R::c(1e-9)).unwrap_or_else(|| {
                    let seed = if axis.x.abs() < R::half() {
                        Vec3::new(R::one(), R::zero(), R::zero())
                    } else {
                        Vec3::new(R::zero(), R::one(), R::zero())
                    };
                    seed.cross(axis).normalized(R::c(1e-9)).unwrap()
                });
                let v = axis.cross(u);
                for s in [-R::one(), R::one()] {
                    let cap = self.position + axis.scale(half_length * s);
                    for rd in [u, -u, v, -v] {
                        cands.push(cap + rd.scale(radius));
                    }
                }
            }
        }
        let min_d = cands.iter().map(|p| n.dot(*p)).fold(R::infinity(), R::min);
        cands.retain(|p| n.dot(*p) <= min_d + margin);
        cands
    }

    /// Distance along +z from point `(x, y, 0)` to the body's lower surface,
    /// i.e. the undeformed gap at a sensor pixel. `None` when the vertical ray
    /// misses the body entirely. Negative values mean penetration.
    pub fn raycast_up(&self, x: R, y: R) -> Option<R> {
        let origin = Vec3::new(x, y, R::zero());
        let ob = self.orientation.rotate_inv(origin - self.position);
        let db = self.orientation.rotate_inv(Vec3::unit_z());
        match self.shape {
            Shape::Sphere { radius } => ray_sphere(ob, db, Vec3::zero(), radius),
            Shape::Box { half_extents } => ray_box(ob, db, half_extents),
            Shape::Cylinder { half_length, radius } => ray_cylinder(ob, db, half_length, radius),
            Shape::Capsule { half_length, radius } => {
                let side = ray_cylinder_side(ob, db, half_length, radius);
                let top = ray_sphere(ob, db, Vec3::new(R::zero(), R::zero(), half_length), radius);
                let bot = ray_sphere(ob, db, Vec3::new(R::zero(), R::zero(), -half_length), radius);
                [side, top, bot].into_iter().flatten().fold(None, |acc: Option<R>, t| {
                    Some(acc.map_or(t, |a| a.min(t)))
                })
            }
        }
    }
}

fn ray_sphere<R: Real>(o: Vec3<R>, d: Vec3<R>, center: Vec3<R>, radius: R) -> Option<R> {
    let oc = o - center;
    let b = oc.dot(d);
    let c = oc.norm_sq() - radius * radius;
    let disc = b * b - c;
    if disc < R::zero() {
        None
    } else {
        Some(-b - disc.sqrt())
    }
}

fn ray_box<R: Real>(o: Vec3<R>, d: Vec3<R>, h: Vec3<R>) -> Option<R> {
    let mut tmin = R::neg_infinity();
    let mut tmax = R::infinity();
    for (oi, di, hi) in [(o.x, d.x, h.x), (o.y, d.y, h.y), (o.z, d.z, h.z)] {
        if di.abs() < R::c(1e-12) {
            if oi.abs() > hi {
                return None;
            }
        } else {
            let t1 = (-hi - oi) / di;
            let t2 = (hi - oi) / di;
            let (lo, hi_t) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            tmin = tmin.max(lo);
            tmax = tmax.min(hi_t);
            if tmin > tmax {
                return None;
            }
        }
    }
    Some(tmin)
}

/// Infinite-cylinder side surface clipped to |z| <= half_length.
fn ray_cylinder_side<R: Real>(o: Vec3<R>, d: Vec3<R>, half_length: R, radius: R) -> Option<R> {
    let a = d.x * d.x + d.y * d.y;
    if a < R::c(1e-18) {
        return None;
    }
    let b = o.x * d.x + o.y * d.y;
    let c = o.x * o.x + o.y * o.y - radius * radius;
    let disc = b * b - a * c;
    if disc < R::zero() {
        return None;
    }
    let sq = disc.sqrt();
    for t in [(-b - sq) / a, (-b + sq) / a] {
        let z = o.z + d.z * t;
        if z.abs() <= half_length {
            return Some(t);
        }
    }
    None
}

fn ray_cylinder<R: Real>(o: Vec3<R>, d: Vec3<R>, half_length: R, radius: R) -> Option<R> {
    let mut best: Option<R> = None;
    if let Some(t) = ray_cylinder_side(o, d, half_length, radius) {
        best = Some(t);
    }
    // cap discs
    if d.z.abs() > R::c(1e-12) {
        for zc in [-half_length, half_length] {
            let t = (zc - o.z) / d.z;
            let x = o.x + d.x * t;
            let y = o.y + d.y * t;
            if x * x + y * y <= radius * radius {
                best = Some(best.map_or(t, |b: R| b.min(t)));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_raycast_and_support() {
        let body = RigidBody::new(
            Shape::Sphere { radius: 0.01 },
            0.1,
            Pose { position: Vec3::new(0.0, 0.0, 0.02), orientation: Quat::identity() },
        );
        assert_relative_eq!(body.raycast_up(0.0, 0.0).unwrap(), 0.01, epsilon = 1e-12);
        assert!(body.raycast_up(0.02, 0.0).is_none());
        let sp = body.support_points(Vec3::unit_z(), 1e-4);
        assert_eq!(sp.len(), 1);
        assert_relative_eq!(sp[0].z, 0.01, epsilon = 1e-12);
    }

    #[test]
    fn box_face_contact_has_four_corners() {
        let body = RigidBody::new(
            Shape::Box { half_extents: Vec3::new(0.01, 0.02, 0.005) },
            0.1,
            Pose { position: Vec3::new(0.0, 0.0, 0.005), orientation: Quat::identity() },
        );
        let sp = body.support_points(Vec3::unit_z(), 1e-6);
        assert_eq!(sp.len(), 4);
        for p in sp {
            assert_relative_eq!(p.z, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tilted_box_single_corner() {
        let q = Quat::from_axis_angle(Vec3::new(1.0, 1.0, 0.0), 0.4);
        let body = RigidBody::new(
            Shape::Box { half_extents: Vec3::new(0.01, 0.01, 0.01) },
            0.1,
            Pose { position: Vec3::new(0.0, 0.0, 0.05), orientation: q },
        );
        let sp = body.support_points(Vec3::unit_z(), 1e-7);
        assert_eq!(sp.len(), 1);
    }

    #[test]
    fn box_raycast_matches_face() {
        let body = RigidBody::new(
            Shape::Box { half_extents: Vec3::new(0.01, 0.01, 0.004) },
            0.1,
            Pose { position: Vec3::new(0.0, 0.0, 0.01), orientation: Quat::identity() },
        );
        assert_relative_eq!(body.raycast_up(0.005, -0.003).unwrap(), 0.006, epsilon = 1e-12);
        assert!(body.raycast_up(0.015, 0.0).is_none());
    }

    #[test]
    fn cylinder_flat_cap_contact() {
        let body = RigidBody::new(
            Shape::Cylinder { half_length: 0.02, radius: 0.008 },
            0.1,
            Pose { position: Vec3::new(0.0, 0.0, 0.02), orientation: Quat::identity() },
        );
        let sp = body.support_points(Vec3::unit_z(), 1e-6);
        assert_eq!(sp.len(), 4, "standing cylinder rests on its rim circle");
        assert_relative_eq!(body.raycast_up(0.0, 0.0).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn capsule_side_contact_two_points() {
        let q = Quat::from_axis_angle(Vec3::new(0.0, 1.0, 0.0), std::f64::consts::FRAC_PI_2);
        let body = RigidBody::new(
            Shape::Capsule { half_length: 0.02, radius: 0.006 },
            0.1,
            Pose { position: Vec3::new(0.0, 0.0, 0.006), orientation: q },
        );
        let sp = body.support_points(Vec3::unit_z(), 1e-6);
        assert_eq!(sp.len(), 2, "lying capsule touches along its axis");
        for p in &sp {
            assert_relative_eq!(p.z, 0.0, epsilon = 1e-9);
        }
        assert_relative_eq!(body.raycast_up(0.0, 0.0).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn capsule_inertia_close_to_cylinder_for_small_caps() {
        let cap: Shape<f64> = Shape::Capsule { half_length: 0.05, radius: 0.002 };
        let cyl = Shape::Cylinder { half_length: 0.05, radius: 0.002 };
        let a = cap.inertia_diag(0.1);
        let b = cyl.inertia_diag(0.1);
        assert!((a.x - b.x).abs() / b.x < 0.2);
    }
}
