use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the numerical core: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }

    /// A tolerance that is never finer than what the type can resolve.
    #[inline]
    fn tol(requested: f64) -> Self {
        let floor = Self::epsilon().f64() * 64.0;
        Self::lit(requested.max(floor))
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_floor_depends_on_precision() {
        assert_eq!(f64::tol(1e-10), 1e-10);
        assert!(f32::tol(1e-10) > 1e-6);
    }
}
