//! Scalar abstraction for the numeric core.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::Serialize;

/// Floating point scalar used throughout the numeric core.
///
/// Implemented for `f32` and `f64`. Every algorithm in this crate is written
/// against this trait; concrete `f64` aliases for the main types live at the
/// crate root. `Serialize` is required so report types can derive serde
/// without repeating bounds at every use site.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Serialize + Send + Sync + 'static
{
    /// Converts an `f64` constant (tolerance, grid step) into `Self`.
    ///
    /// Panics only if the value is not representable at all, which cannot
    /// happen for the finite literals used in this crate.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal must convert")
    }

    /// Converts into `f64`, widening or rounding as needed.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float scalar must convert to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Neumaier compensated running sum.
///
/// Long prefix sums of logarithms (cutting times, cylinder measures) must not
/// drift: comparisons between two such sums decide integer cut indices, so the
/// error is kept at one rounding of the true sum instead of `O(n)` roundings.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<R: Real> {
    sum: R,
    compensation: R,
}

impl<R: Real> Default for CompensatedSum<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Real> CompensatedSum<R> {
    pub fn new() -> Self {
        Self {
            sum: R::zero(),
            compensation: R::zero(),
        }
    }

    pub fn add(&mut self, x: R) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation = self.compensation + ((self.sum - t) + x);
        } else {
            self.compensation = self.compensation + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> R {
        self.sum + self.compensation
    }
}

/// `log(sum(exp(x_k)))` evaluated stably; the inputs may be far below the
/// representable range of `exp`.
pub fn log_sum_exp<R: Real>(terms: &[R]) -> R {
    let mut max = R::neg_infinity();
    for &x in terms {
        if x > max {
            max = x;
        }
    }
    if max == R::neg_infinity() || max.is_nan() {
        return max;
    }
    let mut acc = CompensatedSum::new();
    for &x in terms {
        acc.add((x - max).exp());
    }
    max + acc.value().ln()
}

/// `x * ln(x)` with the measure-theoretic convention `0 * ln(0) = 0`.
pub fn xlnx<R: Real>(x: R) -> R {
    if x == R::zero() {
        R::zero()
    } else {
        x * x.ln()
    }
}
