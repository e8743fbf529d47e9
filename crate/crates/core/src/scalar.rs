//! Generic scalar abstraction for the numeric kernels.
//!
//! Everything numeric in this crate is written against [`Real`] so the same
//! code runs in `f32` or `f64`. Concrete aliases live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps};

/// Floating-point scalar usable by the simulation and learning kernels.
pub trait Real:
    Float + FromPrimitive + NumAssignOps + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Shorthand for lifting an `f64` literal into the scalar type.
    #[inline]
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    #[inline]
    fn to_f64c(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    #[inline]
    fn half() -> Self {
        Self::c(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::c(2.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}
