//! Scalar abstraction for the numerical kernels.

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating point scalar the solver kernels are generic over.
///
/// `f32` instantiations are useful for kernel-level checks; the production
/// solution path runs in `f64` (see the aliases at the crate root).
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lift an `f64` constant into the scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Lossy view as `f64`, for reports and logs.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifts_constants() {
        assert_eq!(f64::of(0.5), 0.5);
        assert_eq!(f32::of(0.25), 0.25f32);
        assert_eq!(1.5f64.as_f64(), 1.5);
    }
}
