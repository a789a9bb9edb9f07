//! Scalar abstractions.
//!
//! [`Scalar`] is the field-like bound shared by `f32`, `f64` and
//! [`BigRational`]; everything that only needs `+ - * /` and ordering is
//! written against it so the same code runs exactly over the rationals.
//! [`Real`] adds the transcendental functions and is implemented for the
//! two IEEE float types only.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Neg<Output = Self> + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `false` for NaN and infinities; always `true` for exact types.
    fn is_finite_value(&self) -> bool;

    fn abs_value(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Converts an `f64` literal. Exact for rationals (every double is dyadic).
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal must be finite")
    }

    fn int(n: i64) -> Self {
        Self::from_i64(n).expect("integer conversion")
    }

    fn ratio(num: i64, den: i64) -> Self {
        Self::int(num) / Self::int(den)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f32 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f64 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for BigRational {
    fn is_finite_value(&self) -> bool {
        true
    }

    fn abs_value(&self) -> Self {
        Signed::abs(self)
    }

    fn int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

/// IEEE floating-point scalars.
pub trait Real: Scalar + Float + FloatConst + Copy + Display + LowerExp + Sum {
    /// Square root of machine epsilon, used as a default step tolerance.
    fn sqrt_eps() -> Self {
        Float::sqrt(<Self as Float>::epsilon())
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Kahan–Babuška compensated accumulator.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Real> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }
}

impl<T: Real> CompensatedSum<T> {
    pub fn new(start: T) -> Self {
        Self {
            sum: start,
            carry: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    /// Multiplies the running total by `s` (used for log-space rescaling).
    pub fn scale(&mut self, s: T) {
        self.sum = self.sum * s;
        self.carry = self.carry * s;
    }

    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}
