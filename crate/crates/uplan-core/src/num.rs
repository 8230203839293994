//! Scalar abstraction for the working floating-point type.
//!
//! All geometry, simulation and solver code is generic over [`Scalar`];
//! `f64` is the default used by the CLI and the concrete aliases at the
//! crate root. `f32` is supported for memory-constrained callers, with
//! correspondingly looser numeric guarantees.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar the toolkit computes with.
///
/// Random draws are exposed as trait methods so generic code never needs
/// to restate distribution bounds.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// One draw from the standard normal distribution.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One draw uniform over `[lo, hi)`.
    fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self;
}

impl Scalar for f32 {
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
        rng.random_range(lo..hi)
    }
}

impl Scalar for f64 {
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
        rng.random_range(lo..hi)
    }
}

/// Convert an `f64` constant into the working scalar type.
#[inline]
pub fn cst<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("constant representable in scalar type")
}
