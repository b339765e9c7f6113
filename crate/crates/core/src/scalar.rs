//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::{DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold,
    /// which never happens for `f32`/`f64`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Base relative step for central finite differences: 1e-6 for `f64`,
    /// widened to a tenth of the cube root of machine epsilon for coarser types.
    #[inline]
    fn fd_step() -> Self {
        let cbrt = Self::default_epsilon().cbrt() * Self::lit(0.1);
        Self::lit(1e-6).max(cbrt)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Finite check for every entry of a vector.
pub fn all_finite<T: Scalar>(v: &DVector<T>) -> bool {
    v.iter().all(|x| x.is_finite())
}

pub fn all_finite_mat<T: Scalar>(m: &DMatrix<T>) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// Central-difference step for a coordinate of magnitude `x`.
#[inline]
pub(crate) fn fd_step_for<T: Scalar>(x: T) -> T {
    let h = T::fd_step();
    h.max(h * x.abs())
}
