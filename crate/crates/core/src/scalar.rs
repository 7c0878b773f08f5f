//! Scalar abstractions shared by the clustering and estimation code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, NumCast, ToPrimitive};

/// Real scalar used for cluster centers, statistics and estimates: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumCast
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from a counter value.
    fn from_count(v: u64) -> Self {
        <Self as NumCast>::from(v).expect("u64 is representable as a float")
    }

    fn from_f64_lossy(v: f64) -> Self {
        <Self as NumCast>::from(v).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A field the dense decoding oracle can run over. Exact rationals and floats both qualify.
pub trait Field: Num + Clone + Debug {}

impl<T: Num + Clone + Debug> Field for T {}
