//! Scalar field abstraction.
//!
//! The engine is generic over [`Scalar`]; the two implementations are exact
//! rationals ([`Rational`], the default) and `f64` (opt-in, tolerance based).

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Arbitrary-precision rational, always normalised (lowest terms, positive denominator).
pub type Rational = BigRational;

/// Build the rational `n/d`. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Default relative tolerance of the float mode.
pub const DEFAULT_FLOAT_TOLERANCE: f64 = 1e-9;

/// Arithmetic mode of a computation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScalarMode {
    /// Exact rationals; comparisons are against literal zero.
    ExactRational,
    /// IEEE doubles; `|x| <= tolerance * (1 + scale)` counts as zero.
    Float64 { tolerance: f64 },
}

impl ScalarMode {
    pub fn float() -> Self {
        ScalarMode::Float64 { tolerance: DEFAULT_FLOAT_TOLERANCE }
    }

    /// Tolerance used by zero tests (0 in exact mode).
    pub fn tolerance(&self) -> f64 {
        match self {
            ScalarMode::ExactRational => 0.0,
            ScalarMode::Float64 { tolerance } => *tolerance,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ScalarMode::ExactRational)
    }
}

/// Field operations required by the engine.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + Send
    + Sync
    + 'static
    + Signed
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
{
    /// True for exact arithmetic.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact value, when the representation is exact.
    fn to_rational(&self) -> Option<Rational>;
    fn mul_ref(&self, other: &Self) -> Self;
    /// `self += a * b`.
    fn add_mul(&mut self, a: &Self, b: &Self);
    /// Pivot preference for elimination: lower is better.
    fn pivot_cost(&self) -> f64;
    /// Zero test; `scale` is the magnitude of the operands that produced `self`.
    fn negligible(&self, scale: f64, tol: f64) -> bool;

    fn ratio(n: i64, d: i64) -> Self {
        Self::from_rational(&rat(n, d))
    }

    fn div_ref(&self, other: &Self) -> Self {
        self.clone() / other.clone()
    }

    fn mode(tol: f64) -> ScalarMode {
        if Self::EXACT {
            ScalarMode::ExactRational
        } else {
            ScalarMode::Float64 { tolerance: tol }
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }

    fn add_mul(&mut self, a: &Self, b: &Self) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        *self += a * b;
    }

    fn pivot_cost(&self) -> f64 {
        self.numer().bits() as f64
    }

    fn negligible(&self, _scale: f64, _tol: f64) -> bool {
        self.is_zero()
    }

    fn div_ref(&self, other: &Self) -> Self {
        self / other
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Option<Rational> {
        None
    }

    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }

    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }

    fn pivot_cost(&self) -> f64 {
        -self.abs()
    }

    fn negligible(&self, scale: f64, tol: f64) -> bool {
        self.abs() <= tol * (1.0 + scale.abs())
    }
}

/// Render a scalar for reports: exact rationals as `p/q`, floats in scientific form.
pub fn render<S: Scalar>(x: &S) -> String {
    if S::EXACT {
        x.to_string()
    } else {
        format!("{:.6e}", x.to_f64())
    }
}
