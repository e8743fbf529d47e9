//! Gel-surface height map: depth clipping, spatial gradients, and surface
//! normals by two independent methods (finite differences and local
//! covariance analysis).

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::Real;

pub const DEFAULT_GEL_THICKNESS: f64 = 0.005;

/// Plain row-major scalar field with a metric pitch. Used for raw depth and
/// clearance fields before any invariant is established.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<R> {
    pub width: usize,
    pub height: usize,
    pub pitch: R,
    pub values: Vec<R>,
}

impl<R: Real> ScalarField<R> {
    pub fn new(width: usize, height: usize, pitch: R, values: Vec<R>) -> Self {
        assert_eq!(values.len(), width * height, "field size mismatch");
        Self { width, height, pitch, values }
    }

    pub fn constant(width: usize, height: usize, pitch: R, value: R) -> Self {
        Self::new(width, height, pitch, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, pitch: R, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, pitch, values)
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> R {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn at_mut(&mut self, x: usize, y: usize) -> &mut R {
        &mut self.values[y * self.width + x]
    }
}

/// Discretized indentation depth of the gel surface. Zero means undeformed,
/// positive values are indentation depth in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap<R> {
    field: ScalarField<R>,
}

impl<R: Real> HeightMap<R> {
    /// Wraps a field after checking the size and finiteness invariants.
    pub fn new(field: ScalarField<R>) -> Result<Self> {
        if field.width < 3 || field.height < 3 {
            return Err(Error::MapTooSmall { width: field.width, height: field.height });
        }
        for y in 0..field.height {
            for x in 0..field.width {
                if !field.at(x, y).is_finite() {
                    return Err(Error::NonFinitePixel { x, y });
                }
            }
        }
        Ok(Self { field })
    }

    pub fn from_fn(width: usize, height: usize, pitch: R, f: impl FnMut(usize, usize) -> R) -> Result<Self> {
        Self::new(ScalarField::from_fn(width, height, pitch, f))
    }

    pub fn flat(width: usize, height: usize, pitch: R) -> Result<Self> {
        Self::new(ScalarField::constant(width, height, pitch, R::zero()))
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.field.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.field.height
    }

    #[inline]
    pub fn pitch(&self) -> R {
        self.field.pitch
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> R {
        self.field.at(x, y)
    }

    pub fn values(&self) -> &[R] {
        &self.field.values
    }

    pub fn field(&self) -> &ScalarField<R> {
        &self.field
    }

    pub fn max_depth(&self) -> R {
        self.field.values.iter().fold(R::zero(), |m, &v| m.max(v))
    }
}

/// Clamp a raw depth field into `[0, gel_thickness]`.
pub fn clip_depth<R: Real>(raw: &ScalarField<R>, gel_thickness: R) -> Result<HeightMap<R>> {
    if gel_thickness <= R::zero() {
        return Err(Error::InvalidParameter("gel_thickness must be > 0".into()));
    }
    for y in 0..raw.height {
        for x in 0..raw.width {
            if !raw.at(x, y).is_finite() {
                return Err(Error::NonFinitePixel { x, y });
            }
        }
    }
    let clipped = ScalarField {
        width: raw.width,
        height: raw.height,
        pitch: raw.pitch,
        values: raw.values.iter().map(|&v| v.max(R::zero()).min(gel_thickness)).collect(),
    };
    HeightMap::new(clipped)
}

/// Per-pixel spatial gradient of a height map.
#[derive(Debug, Clone)]
pub struct GradientField<R> {
    pub width: usize,
    pub height: usize,
    pub dx: Vec<R>,
    pub dy: Vec<R>,
}

impl<R: Real> GradientField<R> {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (R, R) {
        let i = y * self.width + x;
        (self.dx[i], self.dy[i])
    }
}

/// Central differences in the interior, one-sided at borders, scaled by 1/pitch.
pub fn gradient<R: Real>(h: &HeightMap<R>) -> GradientField<R> {
    let (w, hh) = (h.width(), h.height());
    let inv_p = R::one() / h.pitch();
    let inv_2p = inv_p * R::half();
    let mut dx = vec![R::zero(); w * hh];
    let mut dy = vec![R::zero(); w * hh];
    for y in 0..hh {
        for x in 0..w {
            let i = y * w + x;
            dx[i] = if x == 0 {
                (h.at(1, y) - h.at(0, y)) * inv_p
            } else if x == w - 1 {
                (h.at(w - 1, y) - h.at(w - 2, y)) * inv_p
            } else {
                (h.at(x + 1, y) - h.at(x - 1, y)) * inv_2p
            };
            dy[i] = if y == 0 {
                (h.at(x, 1) - h.at(x, 0)) * inv_p
            } else if y == hh - 1 {
                (h.at(x, hh - 1) - h.at(x, hh - 2)) * inv_p
            } else {
                (h.at(x, y + 1) - h.at(x, y - 1)) * inv_2p
            };
        }
    }
    GradientField { width: w, height: hh, dx, dy }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalMethod {
    Gradient,
    Covariance,
}

/// Per-pixel unit surface normals, z-component pointing out of the gel.
#[derive(Debug, Clone)]
pub struct NormalField<R> {
    pub width: usize,
    pub height: usize,
    pub normals: Vec<Vec3<R>>,
    pub method: NormalMethod,
    /// Pixels where the covariance was degenerate and (0,0,1) was emitted.
    pub degenerate_count: usize,
}

impl<R: Real> NormalField<R> {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Vec3<R> {
        self.normals[y * self.width + x]
    }
}

/// Normals from the height gradient: N ∝ (−∂f/∂x, −∂f/∂y, 1).
pub fn normals_from_gradient<R: Real>(h: &HeightMap<R>) -> NormalField<R> {
    let g = gradient(h);
    let normals = g
        .dx
        .iter()
        .zip(g.dy.iter())
        .map(|(&gx, &gy)| {
            let v = Vec3::new(-gx, -gy, R::one());
            v / v.norm()
        })
        .collect();
    NormalField {
        width: h.width(),
        height: h.height(),
        normals,
        method: NormalMethod::Gradient,
        degenerate_count: 0,
    }
}

/// Normals from local covariance analysis: the principal axis of smallest
/// variance over a (2r+1)x(2r+1) window of 3D surface points.
pub fn normals_from_covariance<R: Real>(h: &HeightMap<R>, neighborhood_radius: usize) -> Result<NormalField<R>> {
    if neighborhood_radius < 1 {
        return Err(Error::InvalidParameter("neighborhood_radius must be >= 1".into()));
    }
    let r = neighborhood_radius as isize;
    let (w, hh) = (h.width() as isize, h.height() as isize);
    let pitch = h.pitch();
    let mut normals = Vec::with_capacity((w * hh) as usize);
    let mut degenerate = 0usize;
    for y in 0..hh {
        for x in 0..w {
            let x0 = (x - r).max(0);
            let x1 = (x + r).min(w - 1);
            let y0 = (y - r).max(0);
            let y1 = (y + r).min(hh - 1);
            // centroid
            let mut n = R::zero();
            let mut cx = R::zero();
            let mut cy = R::zero();
            let mut cz = R::zero();
            for yy in y0..=y1 {
                for xx in x0..=x1 {
                    cx += R::from_isize(xx).unwrap() * pitch;
                    cy += R::from_isize(yy).unwrap() * pitch;
                    cz += h.at(xx as usize, yy as usize);
                    n += R::one();
                }
            }
            cx = cx / n;
            cy = cy / n;
            cz = cz / n;
            // covariance of centered points
            let mut a = [[R::zero(); 3]; 3];
            for yy in y0..=y1 {
                for xx in x0..=x1 {
                    let px = R::from_isize(xx).unwrap() * pitch - cx;
                    let py = R::from_isize(yy).unwrap() * pitch - cy;
                    let pz = h.at(xx as usize, yy as usize) - cz;
                    a[0][0] += px * px;
                    a[0][1] += px * py;
                    a[0][2] += px * pz;
                    a[1][1] += py * py;
                    a[1][2] += py * pz;
                    a[2][2] += pz * pz;
                }
            }
            a[1][0] = a[0][1];
            a[2][0] = a[0][2];
            a[2][1] = a[1][2];
            let (mut v, degen) = smallest_eigenvector(a);
            if degen {
                degenerate += 1;
                v = Vec3::unit_z();
            }
            // orient out of the gel
            if v.z < R::zero() {
                v = -v;
            } else if v.z == R::zero() && (v.x < R::zero() || (v.x == R::zero() && v.y < R::zero())) {
                v = -v;
            }
            normals.push(v);
        }
    }
    Ok(NormalField {
        width: h.width(),
        height: h.height(),
        normals,
        method: NormalMethod::Covariance,
        degenerate_count: degenerate,
    })
}

/// Eigenvector of the smallest eigenvalue of a symmetric 3x3 matrix, by the
/// closed-form trigonometric eigenvalue solution. Returns `(vector, degenerate)`.
/// When the two smallest eigenvalues coincide, the tie is broken toward the
/// candidate with the largest |z| component.
fn smallest_eigenvector<R: Real>(a: [[R; 3]; 3]) -> (Vec3<R>, bool) {
    let scale = a.iter().flatten().fold(R::zero(), |m, &v| m.max(v.abs()));
    if scale <= R::zero() {
        return (Vec3::unit_z(), true);
    }
    let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    let eps = R::c(1e-14) * scale * scale;
    if off <= eps {
        // effectively diagonal; smallest diagonal entry wins, ties prefer z
        let d = [a[0][0], a[1][1], a[2][2]];
        let mut best = 2usize;
        for i in [1usize, 0] {
            if d[i] < d[best] - eps {
                best = i;
            }
        }
        let axes = [Vec3::new(R::one(), R::zero(), R::zero()), Vec3::new(R::zero(), R::one(), R::zero()), Vec3::unit_z()];
        return (axes[best], false);
    }
    let q = (a[0][0] + a[1][1] + a[2][2]) / R::c(3.0);
    let mut p2 = R::two() * off;
    for i in 0..3 {
        p2 += (a[i][i] - q) * (a[i][i] - q);
    }
    let p = (p2 / R::c(6.0)).sqrt();
    let mut b = a;
    for i in 0..3 {
        b[i][i] = b[i][i] - q;
    }
    let detb = det3(&b) / (p * p * p);
    let r = (detb * R::half()).max(-R::one()).min(R::one());
    let phi = r.acos() / R::c(3.0);
    let two_pi_3 = R::c(2.0 * std::f64::consts::PI / 3.0);
    let eig_max = q + R::two() * p * phi.cos();
    let eig_min = q + R::two() * p * (phi + two_pi_3).cos();
    let eig_mid = R::c(3.0) * q - eig_max - eig_min;

    let tie_tol = R::c(1e-10) * scale;
    if (eig_mid - eig_min).abs() <= tie_tol {
        // 2D eigenspace orthogonal to the max-eigenvalue axis; pick the
        // in-plane direction with the largest |z|
        let v_max = eigenvector_for(&a, eig_max).unwrap_or(Vec3::unit_z());
        let z_proj = Vec3::unit_z() - v_max.scale(v_max.z);
        if let Some(v) = z_proj.normalized(R::c(1e-12)) {
            return (v, false);
        }
        // eigenspace is the xy-plane; all candidates have z = 0
        let x_proj = Vec3::new(R::one(), R::zero(), R::zero()) - v_max.scale(v_max.x);
        return match x_proj.normalized(R::c(1e-12)) {
            Some(v) => (v, false),
            None => (Vec3::unit_z(), true),
        };
    }
    match eigenvector_for(&a, eig_min) {
        Some(v) => (v, false),
        None => (Vec3::unit_z(), true),
    }
}

/// Null-space direction of (A − λI) via the largest cross product of its rows.
fn eigenvector_for<R: Real>(a: &[[R; 3]; 3], lambda: R) -> Option<Vec3<R>> {
    let row = |i: usize| -> Vec3<R> {
        Vec3::new(
            a[i][0] - if i == 0 { lambda } else { R::zero() },
            a[i][1] - if i == 1 { lambda } else { R::zero() },
            a[i][2] - if i == 2 { lambda } else { R::zero() },
        )
    };
    let (r0, r1, r2) = (row(0), row(1), row(2));
    let candidates = [r0.cross(r1), r0.cross(r2), r1.cross(r2)];
    let mut best: Option<Vec3<R>> = None;
    let mut best_n = R::zero();
    for c in candidates {
        let n = c.norm_sq();
        if n > best_n {
            best_n = n;
            best = Some(c);
        }
    }
    best.and_then(|c| c.normalized(R::c(1e-300)))
}

fn det3<R: Real>(a: &[[R; 3]; 3]) -> R {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}
