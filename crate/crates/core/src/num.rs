//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating point scalar: `f32` or `f64`.
///
/// The associated constants carry the precision-dependent default
/// tolerances so that configuration structs can be built generically.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Relative residual accepted by root refinement.
    const REFINE_TOL: f64;
    /// Relative base radius for root clustering.
    const CLUSTER_TOL: f64;
    /// Relative singular-value cutoff for numerical nullity.
    const NULLITY_TOL: f64;

    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    /// Converts an integer count into the scalar type.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_real {
    ($f:ty, $refine:expr, $cluster:expr, $nullity:expr) => {
        impl Real for $f {
            const REFINE_TOL: f64 = $refine;
            const CLUSTER_TOL: f64 = $cluster;
            const NULLITY_TOL: f64 = $nullity;
        }
    };
}

impl_real!(f64, 1e-10, 1e-8, 1e-8);
impl_real!(f32, 1e-4, 1e-3, 1e-3);

/// Complex scalar over a [`Real`].
pub type Cx<T> = Complex<T>;

#[inline]
pub(crate) fn cx<T: Real>(re: f64, im: f64) -> Cx<T> {
    Complex::new(T::lit(re), T::lit(im))
}

#[inline]
pub(crate) fn czero<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn cone<T: Real>() -> Cx<T> {
    Complex::new(T::one(), T::zero())
}

/// Sum of a slice in a fixed pairwise order, independent of any scheduling.
pub(crate) fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    match xs.len() {
        0 => T::zero(),
        1 => xs[0],
        n if n <= 8 => xs.iter().copied().fold(T::zero(), |a, b| a + b),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}
