//! Scalar abstraction for the numerical code.
//!
//! Every floating-point routine in the crate is generic over [`Scalar`], which
//! bundles the `num-traits` float machinery with the handful of extras the
//! library needs: the error function, draws from the standard normal
//! distribution, and thread-safety bounds for the parallel harness.

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, NumCast};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating-point scalar usable throughout the crate (`f32` or `f64`).
pub trait Scalar:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + Sum<Self>
    + for<'a> Sum<&'a Self>
    + Send
    + Sync
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Default
    + 'static
{
    /// Error function `erf(x)`.
    fn erf(self) -> Self;

    /// Complementary error function `erfc(x) = 1 - erf(x)`.
    fn erfc(self) -> Self;

    /// One draw from the standard normal distribution N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    fn erf(self) -> Self {
        libm::erf(self)
    }

    fn erfc(self) -> Self {
        libm::erfc(self)
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Scalar for f32 {
    fn erf(self) -> Self {
        libm::erf(self as f64) as f32
    }

    fn erfc(self) -> Self {
        libm::erfc(self as f64) as f32
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// Shorthand for converting an `f64` literal into the working scalar type.
///
/// Panics only if the value is not representable, which cannot happen for the
/// finite literals this crate feeds it.
pub(crate) fn cast<F: Scalar>(x: f64) -> F {
    <F as NumCast>::from(x).expect("finite literal representable in scalar type")
}
