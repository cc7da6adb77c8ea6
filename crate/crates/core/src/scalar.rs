//! Scalar abstraction for the divergence, kernel and belief math.

use core::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the generic math (`f32` or `f64`).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal; panics only for types that cannot represent finite doubles.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("scalar must represent f64 literals")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Probabilities at or below this are exact zeros.
    fn zero_floor() -> Self;
}

impl Scalar for f32 {
    fn zero_floor() -> Self {
        // 1e-300 underflows f32; the smallest positive normal plays the same role.
        f32::MIN_POSITIVE
    }
}

impl Scalar for f64 {
    fn zero_floor() -> Self {
        1e-300
    }
}

/// Treats values at or below the zero floor as exact zeros.
#[inline]
pub(crate) fn is_zero<T: Scalar>(p: T) -> bool {
    p <= T::zero_floor()
}
