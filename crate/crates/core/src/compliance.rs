//! Lumped-element gel compliance: one vertical spring per pixel, static
//! equilibrium between the spring forces and the applied normal load.

use crate::error::{Error, Result};
use crate::heightfield::{HeightMap, ScalarField};
use crate::scalar::Real;

/// Uniform per-pixel spring array describing the elastomer.
#[derive(Debug, Clone, Copy)]
pub struct SpringField<R> {
    /// Spring stiffness per pixel, N/m.
    pub stiffness: R,
    pub gel_thickness: R,
    pub pitch: R,
}

impl<R: Real> SpringField<R> {
    pub fn new(stiffness: R, gel_thickness: R, pitch: R) -> Result<Self> {
        if stiffness <= R::zero() || gel_thickness <= R::zero() {
            return Err(Error::InvalidParameter("spring stiffness and gel thickness must be > 0".into()));
        }
        Ok(Self { stiffness, gel_thickness, pitch })
    }

    /// Default stiffness calibrated so a 0.1 kg object on a 30x30-pixel
    /// footprint indents about 1 mm: k = 0.1·9.81 / (900 · 0.001).
    pub fn default_stiffness() -> R {
        R::c(0.1 * 9.81 / (900.0 * 0.001))
    }
}

/// Result of a static equilibrium solve.
#[derive(Debug, Clone)]
pub struct ContactSolution<R> {
    pub depth: HeightMap<R>,
    pub mask: Vec<bool>,
    /// Rigid-body settle offset δ along the contact normal, meters.
    pub settle_offset: R,
    /// Per-pixel normal force, N.
    pub forces: Vec<R>,
    /// Pixels whose depth was clipped at the gel thickness.
    pub clipped: usize,
}

impl<R: Real> ContactSolution<R> {
    pub fn total_force(&self) -> R {
        self.forces.iter().copied().sum()
    }

    pub fn contact_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Solve Σ k·max(0, δ − clearance(p)) = load for the settle offset δ by
/// bisection (aggregate force is continuous, piecewise-linear and monotone
/// in δ). Clearance is the object's undeformed gap at each pixel; pixels not
/// under the object carry +∞.
pub fn solve_equilibrium<R: Real>(
    clearance: &ScalarField<R>,
    normal_load: R,
    springs: &SpringField<R>,
) -> Result<ContactSolution<R>> {
    if normal_load < R::zero() {
        return Err(Error::InvalidParameter("normal_load must be >= 0".into()));
    }
    for (i, &c) in clearance.values.iter().enumerate() {
        if c.is_nan() || c == R::neg_infinity() {
            return Err(Error::NonFinitePixel { x: i % clearance.width, y: i / clearance.width });
        }
    }
    let k = springs.stiffness;
    let finite: Vec<(usize, R)> = clearance
        .values
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_finite())
        .map(|(i, &c)| (i, c))
        .collect();

    let capacity = k * springs.gel_thickness * R::from_usize(finite.len()).unwrap();
    if normal_load > capacity {
        return Err(Error::LoadSaturation { load: normal_load.to_f64c(), capacity: capacity.to_f64c() });
    }

    let n_px = clearance.values.len();
    let mut depths = vec![R::zero(); n_px];
    let mut forces = vec![R::zero(); n_px];
    let min_clearance = finite.iter().map(|&(_, c)| c).fold(R::infinity(), R::min);

    let delta = if normal_load == R::zero() || finite.is_empty() {
        // object just touching (or absent): no indentation anywhere
        if min_clearance.is_finite() {
            min_clearance
        } else {
            R::zero()
        }
    } else {
        let tol = (normal_load * R::c(1e-9)).max(R::c(1e-12));
        let max_clearance = finite.iter().map(|&(_, c)| c).fold(R::neg_infinity(), R::max);
        let mut lo = min_clearance;
        // at this offset every spring is fully compressed, so the aggregate
        // reaches capacity and the bracket is guaranteed to hold the root
        let mut hi = (min_clearance + normal_load / k).max(max_clearance + springs.gel_thickness);
        // springs saturate at the gel thickness; load beyond a spring's
        // capacity redistributes to shallower pixels
        let total = |d: R| -> R {
            let mut f = R::zero();
            for &(_, c) in &finite {
                f += k * (d - c).max(R::zero()).min(springs.gel_thickness);
            }
            f
        };
        // bisection; the bracket [lo, hi] always contains the root
        for _ in 0..200 {
            let mid = (lo + hi) * R::half();
            let f = total(mid);
            if (f - normal_load).abs() <= tol {
                lo = mid;
                hi = mid;
                break;
            }
            if f < normal_load {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) * R::half()
    };

    let mut clipped = 0usize;
    for &(i, c) in &finite {
        let mut d = (delta - c).max(R::zero());
        if d > springs.gel_thickness {
            d = springs.gel_thickness;
            clipped += 1;
        }
        depths[i] = d;
        forces[i] = k * d;
    }
    let mask: Vec<bool> = depths.iter().map(|&d| d > R::zero()).collect();
    let depth = HeightMap::new(ScalarField::new(clearance.width, clearance.height, clearance.pitch, depths))?;
    Ok(ContactSolution { depth, mask, settle_offset: delta, forces, clipped })
}

/// Boolean field marking pixels indented deeper than `threshold`.
pub fn contact_mask<R: Real>(sol: &ContactSolution<R>, threshold: R) -> Vec<bool> {
    sol.depth.values().iter().map(|&d| d > threshold).collect()
}
