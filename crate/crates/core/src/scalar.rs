//! Scalar abstractions.
//!
//! [`Real`] covers the floating-point code paths (fixed points, tree messages,
//! enumeration weights). [`Exact`] is the smaller surface needed for purely
//! combinatorial probabilities, which also admits rationals.

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed};
use std::fmt::{Debug, Display};

pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("representable literal")
    }

    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("representable count")
    }

    /// log(e^x + e^y) without overflow.
    #[inline]
    fn log_add_exp(self, other: Self) -> Self {
        if self == Self::neg_infinity() {
            return other;
        }
        if other == Self::neg_infinity() {
            return self;
        }
        let (hi, lo) = if self > other {
            (self, other)
        } else {
            (other, self)
        };
        hi + (lo - hi).exp().ln_1p()
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub trait Exact: Clone + PartialOrd + Num + Signed + Debug {
    fn from_count(n: u64) -> Self;
    fn approx(&self) -> f64;
}

impl Exact for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }
    fn approx(&self) -> f64 {
        *self
    }
}

impl Exact for Ratio<i64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n as i64)
    }
    fn approx(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

impl Exact for Ratio<i128> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n as i128)
    }
    fn approx(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// Log-sum-exp over a slice; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let m = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return m;
    }
    let s = xs.iter().fold(T::zero(), |acc, &x| acc + (x - m).exp());
    m + s.ln()
}
