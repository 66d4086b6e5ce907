//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::linalg::Dense;

/// Real floating-point scalar (`f32` or `f64`).
///
/// All estimators are written against this trait. Tolerances are quoted as
/// `f64` literals and lifted through [`Scalar::tol`], which never returns
/// less than a small multiple of machine epsilon, so `f32` instantiations
/// get thresholds they can actually reach.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Dense
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Tolerance `x`, floored at `64 * epsilon`.
    #[inline]
    fn tol(x: f64) -> Self {
        Self::lit(x).max(Self::epsilon() * Self::lit(64.0))
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
