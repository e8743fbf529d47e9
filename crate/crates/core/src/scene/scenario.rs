//! Scenario definitions, rest detection, and the analytic stick/slide oracle.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::Real;

use super::body::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Freefall,
    Incline,
    Perturb,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Freefall => "freefall",
            ScenarioKind::Incline => "incline",
            ScenarioKind::Perturb => "perturb",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "freefall" => Ok(Self::Freefall),
            "incline" => Ok(Self::Incline),
            "perturb" => Ok(Self::Perturb),
            other => Err(Error::Config(format!("unknown scenario kind '{other}'"))),
        }
    }
}

/// Lateral acceleration burst applied to a resting body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation<R> {
    /// m/s².
    pub magnitude: R,
    /// Direction angle in the sensor plane, radians.
    pub direction: R,
    /// Burst duration, seconds.
    pub duration: R,
}

impl<R: Real> Perturbation<R> {
    pub fn accel(&self) -> Vec3<R> {
        Vec3::new(self.direction.cos() * self.magnitude, self.direction.sin() * self.magnitude, R::zero())
    }
}

/// One concrete episode setup. Incline episodes are simulated in the plane
/// frame: the sensor stays at z = 0 and gravity is tilted instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario<R> {
    pub kind: ScenarioKind,
    /// Radians; only meaningful for incline episodes.
    pub incline_angle: R,
    pub perturbation: Option<Perturbation<R>>,
    /// Gravity magnitude, m/s².
    pub gravity: R,
    pub seed: u64,
}

impl<R: Real> Scenario<R> {
    pub fn new(kind: ScenarioKind, gravity: R, seed: u64) -> Self {
        Self { kind, incline_angle: R::zero(), perturbation: None, gravity, seed }
    }

    pub fn with_incline(mut self, angle: R) -> Result<Self> {
        if angle < R::zero() || angle > R::c(std::f64::consts::FRAC_PI_3) {
            return Err(Error::InvalidParameter("incline angle must be in [0, pi/3]".into()));
        }
        self.incline_angle = angle;
        Ok(self)
    }

    pub fn with_perturbation(mut self, p: Perturbation<R>) -> Self {
        self.perturbation = Some(p);
        self
    }

    /// Gravity vector in the sensor frame.
    pub fn gravity_vec(&self) -> Vec3<R> {
        match self.kind {
            ScenarioKind::Incline => Vec3::new(
                self.gravity * self.incline_angle.sin(),
                R::zero(),
                -self.gravity * self.incline_angle.cos(),
            ),
            _ => Vec3::new(R::zero(), R::zero(), -self.gravity),
        }
    }

    /// Condition vector c = (magnitude, cos φ, sin φ); present only for
    /// perturbation episodes.
    pub fn condition(&self) -> Option<[R; 3]> {
        self.perturbation.map(|p| [p.magnitude, p.direction.cos(), p.direction.sin()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InclineOutcome {
    Stick,
    Slide,
}

/// Coulomb threshold on an inclined plane; the boundary μ = tan θ counts as
/// stick (static friction can supply exactly the needed force).
pub fn incline_outcome<R: Real>(mu: R, theta: R) -> InclineOutcome {
    if mu >= theta.tan() {
        InclineOutcome::Stick
    } else {
        InclineOutcome::Slide
    }
}

/// Final-state summary of one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestState<R> {
    pub resting: bool,
    pub frames_to_rest: usize,
    pub final_pose: Pose<R>,
    pub fell_off_sensor: bool,
}

/// True iff all of the last `window` entries of `history` (pairs of linear
/// and angular speed) are below the thresholds. Histories shorter than the
/// window never count as resting.
pub fn detect_rest<R: Real>(history: &[(R, R)], lin_thresh: R, ang_thresh: R, window: usize) -> bool {
    assert!(window >= 1, "rest window must be >= 1");
    if history.len() < window {
        return false;
    }
    history[history.len() - window..]
        .iter()
        .all(|&(lin, ang)| lin < lin_thresh && ang < ang_thresh)
}
