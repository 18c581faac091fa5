//! Floating-point scalar abstraction: f32 or f64.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type for the matrix numerics: `f32` or `f64`.
pub trait Real:
    Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, for tolerance constants.
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }
}

impl Real for f32 {}
impl Real for f64 {}
