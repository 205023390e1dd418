//! Floating-point abstraction shared by the numeric kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar used by the feature, model and metric code.
///
/// Implemented for `f32` and `f64`; every routine that does arithmetic on
/// signal values or feature matrices is generic over it.
pub trait Scalar:
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
    /// Converts an `f64` literal, panicking only if the target cannot represent finite values.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize fits in a float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
