//! Scalar abstractions shared by every numerical module.
//!
//! Floating-point routines are written against [`Real`], which is implemented
//! for `f32` and `f64`. Closed-form expressions that only need field
//! arithmetic are written against [`Field`], which additionally admits exact
//! rationals such as [`num_rational::BigRational`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Floating-point scalar used by the eigensolvers, operators and dynamics.
pub trait Real: Float + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal. Panics only if the target cannot represent
    /// finite literals, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Tolerance `x` adapted to the precision of `Self`: unchanged for `f64`,
    /// widened to a few thousand ulps for narrower types.
    #[inline]
    fn tol(x: f64) -> Self {
        let eps = Self::epsilon().to_f64().unwrap_or(f64::EPSILON);
        Self::lit(x.max(eps * 1.0e3))
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Field arithmetic with small-integer literals. Implemented for floats and
/// for exact rationals.
pub trait Field: Num + Clone + FromPrimitive + Debug {
    #[inline]
    fn int(n: i64) -> Self {
        Self::from_i64(n).expect("integer literal")
    }
}

impl<T: Num + Clone + FromPrimitive + Debug> Field for T {}

/// Lossy conversion of a field element to `f64`, used for reporting.
pub fn field_to_f64<T: Field + ToPrimitive>(x: &T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
