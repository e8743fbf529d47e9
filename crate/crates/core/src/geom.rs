//! Minimal 3D vector / quaternion math used by the physics and rendering code.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<R> {
    pub x: R,
    pub y: R,
    pub z: R,
}

impl<R: Real> Vec3<R> {
    #[inline]
    pub fn new(x: R, y: R, z: R) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(R::zero(), R::zero(), R::zero())
    }

    #[inline]
    pub fn unit_z() -> Self {
        Self::new(R::zero(), R::zero(), R::one())
    }

    #[inline]
    pub fn dot(self, o: Self) -> R {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> R {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> R {
        self.norm_sq().sqrt()
    }

    /// Unit vector; `None` when the norm is below `eps`.
    pub fn normalized(self, eps: R) -> Option<Self> {
        let n = self.norm();
        if n <= eps {
            None
        } else {
            Some(self / n)
        }
    }

    #[inline]
    pub fn scale(self, s: R) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Component-wise multiply.
    #[inline]
    pub fn mul_comp(self, o: Self) -> Self {
        Self::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }
}

impl<R: Real> Add for Vec3<R> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<R: Real> Sub for Vec3<R> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<R: Real> Neg for Vec3<R> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<R: Real> Mul<R> for Vec3<R> {
    type Output = Self;
    #[inline]
    fn mul(self, s: R) -> Self {
        self.scale(s)
    }
}

impl<R: Real> Div<R> for Vec3<R> {
    type Output = Self;
    #[inline]
    fn div(self, s: R) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<R: Real> AddAssign for Vec3<R> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<R: Real> SubAssign for Vec3<R> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

/// Unit quaternion, `w` first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat<R> {
    pub w: R,
    pub x: R,
    pub y: R,
    pub z: R,
}

impl<R: Real> Quat<R> {
    #[inline]
    pub fn identity() -> Self {
        Self { w: R::one(), x: R::zero(), y: R::zero(), z: R::zero() }
    }

    pub fn new(w: R, x: R, y: R, z: R) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_axis_angle(axis: Vec3<R>, angle: R) -> Self {
        let axis = axis.normalized(R::c(1e-300)).unwrap_or(Vec3::unit_z());
        let half = angle * R::half();
        let (s, c) = (half.sin(), half.cos());
        Self { w: c, x: axis.x * s, y: axis.y * s, z: axis.z * s }
    }

    #[inline]
    pub fn norm(self) -> R {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn mul(self, o: Self) -> Self {
        Self {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    /// Rotate a vector from body frame to world frame.
    pub fn rotate(self, v: Vec3<R>) -> Vec3<R> {
        // q v q* expanded
        let u = Vec3::new(self.x, self.y, self.z);
        let s = self.w;
        u.scale(u.dot(v) * R::two()) + v.scale(s * s - u.dot(u)) + u.cross(v).scale(s * R::two())
    }

    /// Rotate a vector from world frame to body frame.
    #[inline]
    pub fn rotate_inv(self, v: Vec3<R>) -> Vec3<R> {
        self.conj().rotate(v)
    }

    /// Integrate a body-frame angular velocity over `dt` via the exponential map.
    pub fn integrate_body(self, omega_body: Vec3<R>, dt: R) -> Self {
        let theta = omega_body.norm() * dt;
        if theta <= R::c(1e-12) {
            return self.normalized();
        }
        let axis = omega_body.scale(R::one() / omega_body.norm());
        let dq = Quat::from_axis_angle(axis, theta);
        self.mul(dq).normalized()
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}
