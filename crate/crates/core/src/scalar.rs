//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the solver can run on: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + FromStr + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    /// Lossy conversion for reporting and ordering keys.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Returns `true` if the value has no fractional part.
    #[inline]
    fn is_integral(self, tol: Self) -> bool {
        (self - self.round()).abs() <= tol
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Every numerical tolerance used by the solver, in one place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Row, bound and integrality violations below this are accepted.
    pub feasibility: T,
    /// Coefficients and multipliers below this are treated as zero.
    pub zero: T,
    /// Minimum improvement for a propagated bound to be applied.
    pub deduction: T,
    /// Distance to an integer below which a bound is snapped before rounding.
    pub integrality: T,
    /// Smallest admissible pivot element in the simplex.
    pub pivot: T,
    /// Primal bound violation the simplex still treats as feasible.
    pub primal: T,
    /// Reduced-cost threshold for simplex pricing.
    pub dual: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            feasibility: T::lit(1e-6),
            zero: T::lit(1e-9),
            deduction: T::lit(1e-7),
            integrality: T::lit(1e-6),
            pivot: T::lit(1e-9),
            primal: T::lit(1e-9),
            dual: T::lit(1e-9),
        }
    }
}

impl Tolerances<f32> {
    /// Tolerances loosened to what single precision can resolve.
    pub fn single_precision() -> Self {
        Self {
            feasibility: 1e-4,
            zero: 1e-6,
            deduction: 1e-5,
            integrality: 1e-4,
            pivot: 1e-6,
            primal: 1e-5,
            dual: 1e-6,
        }
    }
}
