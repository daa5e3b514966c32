//! Scalar abstraction for everything real-valued (scores, weights, metrics).
//!
//! The ring itself is integer arithmetic and stays on `u64`; the decision
//! math and metric aggregation are generic over any IEEE float.

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real scalar used by the scoring pipeline: `f32` or `f64`.
pub trait Real:
    'static + Send + Sync + Float + NumAssign + FromPrimitive + Default + std::fmt::Debug + std::fmt::Display
{
    /// Lossy conversion from `f64`, for constants and config values.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Real")
    }

    /// Lossy conversion from an unsigned integer (tick counts, populations).
    fn from_u64_lossy(v: u64) -> Self {
        Self::from_u64(v).expect("u64 converts to any Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}
