//! Floating-point scalar abstraction shared by every numeric routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type the library computes in: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold,
    /// which never happens for the finite constants used in this crate.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 is representable")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize is representable")
    }

    #[inline]
    fn of_u64(x: u64) -> Self {
        Self::from_u64(x).expect("u64 is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Absolute tolerance for sums of `len` terms: `base`, widened to a few ulps
/// per term for low-precision types.
pub(crate) fn sum_tolerance<T: Scalar>(base: f64, len: usize) -> T {
    let ulps = T::epsilon() * T::of_usize(len.max(1)) * T::of(8.0);
    T::of(base).max(ulps)
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}
