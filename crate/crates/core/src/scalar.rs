//! Scalar abstraction for the geometric and statistical code.
//!
//! Everything that is pure real arithmetic (distances, densities, objective
//! curves, confidence intervals) is written against [`Scalar`] so it can be
//! instantiated with `f32` or `f64`. The event engine itself keeps time in
//! integer nanoseconds and positions in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or parameter.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
