//! Numeric abstraction for the constraint arithmetic.
//!
//! Coverage similarity and size reduction are ratios of counts, so every
//! formula in [`crate::model`] is written once against [`Scalar`] and can be
//! evaluated either in floating point or exactly over rationals.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

/// A number type the constraint formulas can be evaluated in.
///
/// Implemented for `f32`, `f64` and `num_rational::Ratio<i64>` (and any other
/// type meeting the bounds).
pub trait Scalar:
    Num + FromPrimitive + ToPrimitive + PartialOrd + Copy + Debug + Send + Sync + 'static
{
    /// Converts an element or byte count. Panics only if the count is not
    /// representable, which for the supported types means > 2^63.
    fn from_count(count: usize) -> Self {
        Self::from_u64(count as u64).expect("count not representable in scalar type")
    }

    fn hundred() -> Self {
        Self::from_u8(100).expect("100 is representable")
    }

    /// Lossy view used for printing reports.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Num + FromPrimitive + ToPrimitive + PartialOrd + Copy + Debug + Send + Sync + 'static
{
}
