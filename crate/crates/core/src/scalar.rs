//! Scalar abstraction shared by the numerical kernels.
//!
//! The low-level kernels (tridiagonal solves, lead self-energies, occupation
//! functions, quadrature and the energy-to-time transform) are written against
//! [`Scalar`] so they can run in `f32` for quick sweeps or `f64` for the
//! device pipeline. The device-level solvers are instantiated at [`crate::Real`].

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal or constant into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Converts back to `f64` for reporting.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
