//! Scalar fields used for structure constants and group coordinates.
//!
//! Exact work happens over `BigRational` or over the quadratic field
//! `QSqrt2 = Q(√2)`; geometry runs on `f64` projections of exact points.

use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A field usable as coefficients of a stratified Lie algebra.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Exact zero test for exact fields; tolerance test for floats.
    fn is_zero(&self) -> bool;
    fn from_rational(r: &BigRational) -> Self;
    fn to_f64(&self) -> f64;
    /// Whether arithmetic in this field is exact.
    const EXACT: bool;
    /// Field marker: `rational`, `rational-adjoin-sqrt2` or `float`.
    const FIELD: &'static str;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(v)))
    }
}

/// Absolute tolerance used by `f64::is_zero`.
pub const FLOAT_ZERO_TOL: f64 = 1e-9;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        libm::fabs(*self) <= FLOAT_ZERO_TOL
    }
    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    const EXACT: bool = false;
    const FIELD: &'static str = "float";
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    const EXACT: bool = true;
    const FIELD: &'static str = "rational";
}

/// Convenience constructor for `p/q`.
pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Element `a + b√2` of the quadratic field Q(√2).
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct QSqrt2 {
    pub a: BigRational,
    pub b: BigRational,
}

impl QSqrt2 {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        QSqrt2 { a, b }
    }

    pub fn rational(a: BigRational) -> Self {
        QSqrt2 { a, b: Zero::zero() }
    }

    pub fn sqrt2() -> Self {
        QSqrt2 {
            a: Zero::zero(),
            b: One::one(),
        }
    }

    /// `true` when the √2 component vanishes.
    pub fn is_rational(&self) -> bool {
        Zero::is_zero(&self.b)
    }

    /// Galois conjugate `a - b√2`.
    pub fn conjugate(&self) -> Self {
        QSqrt2 {
            a: self.a.clone(),
            b: -self.b.clone(),
        }
    }

    /// Field norm `a² - 2b²`.
    pub fn field_norm(&self) -> BigRational {
        &self.a * &self.a - BigRational::from_integer(BigInt::from(2)) * &self.b * &self.b
    }

    /// Exact sign of `a + b√2`.
    pub fn signum(&self) -> Ordering {
        let sa = self.a.cmp(&Zero::zero());
        let sb = self.b.cmp(&Zero::zero());
        match (sa, sb) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (x, y) if x == y => x,
            _ => {
                // opposite signs: compare a² with 2b²
                let a2 = &self.a * &self.a;
                let b2 = BigRational::from_integer(BigInt::from(2)) * &self.b * &self.b;
                match a2.cmp(&b2) {
                    Ordering::Greater => sa,
                    Ordering::Less => sb,
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Exact floor as a big integer.
    pub fn floor(&self) -> BigInt {
        // start from the float estimate and correct exactly
        let approx = libm::floor(self.to_f64());
        let mut n = if approx.is_finite() {
            BigInt::from(approx as i64)
        } else {
            BigInt::zero()
        };
        loop {
            let diff = self.clone() - QSqrt2::rational(BigRational::from_integer(n.clone()));
            if diff.signum() == Ordering::Less {
                n -= 1;
                continue;
            }
            let next = diff - QSqrt2::one();
            if next.signum() != Ordering::Less {
                n += 1;
                continue;
            }
            return n;
        }
    }
}

impl PartialOrd for QSqrt2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some((self.clone() - other.clone()).signum())
    }
}

impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if Zero::is_zero(&self.b) {
            write!(f, "{}", self.a)
        } else if Zero::is_zero(&self.a) {
            write!(f, "{}*sqrt2", self.b)
        } else if self.b.is_negative() {
            write!(f, "{}-{}*sqrt2", self.a, -self.b.clone())
        } else {
            write!(f, "{}+{}*sqrt2", self.a, self.b)
        }
    }
}

impl Add for QSqrt2 {
    type Output = QSqrt2;
    fn add(self, o: QSqrt2) -> QSqrt2 {
        QSqrt2 {
            a: self.a + o.a,
            b: self.b + o.b,
        }
    }
}

impl Sub for QSqrt2 {
    type Output = QSqrt2;
    fn sub(self, o: QSqrt2) -> QSqrt2 {
        QSqrt2 {
            a: self.a - o.a,
            b: self.b - o.b,
        }
    }
}

impl Mul for QSqrt2 {
    type Output = QSqrt2;
    fn mul(self, o: QSqrt2) -> QSqrt2 {
        let two = BigRational::from_integer(BigInt::from(2));
        QSqrt2 {
            a: &self.a * &o.a + two * &self.b * &o.b,
            b: &self.a * &o.b + &self.b * &o.a,
        }
    }
}

impl Div for QSqrt2 {
    type Output = QSqrt2;
    fn div(self, o: QSqrt2) -> QSqrt2 {
        let n = o.field_norm();
        assert!(!Zero::is_zero(&n), "division by zero in Q(sqrt2)");
        let num = self * o.conjugate();
        QSqrt2 {
            a: num.a / &n,
            b: num.b / n,
        }
    }
}

impl Neg for QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> QSqrt2 {
        QSqrt2 {
            a: -self.a,
            b: -self.b,
        }
    }
}

impl Scalar for QSqrt2 {
    fn zero() -> Self {
        QSqrt2::rational(Zero::zero())
    }
    fn one() -> Self {
        QSqrt2::rational(One::one())
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(&self.a) && Zero::is_zero(&self.b)
    }
    fn from_rational(r: &BigRational) -> Self {
        QSqrt2::rational(r.clone())
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(&self.a).unwrap_or(f64::NAN)
            + ToPrimitive::to_f64(&self.b).unwrap_or(f64::NAN) * core::f64::consts::SQRT_2
    }
    const EXACT: bool = true;
    const FIELD: &'static str = "rational-adjoin-sqrt2";
}

/// Absolute value of a rational.
pub fn rabs(r: &BigRational) -> BigRational {
    r.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt2_squared_is_two() {
        let s = QSqrt2::sqrt2();
        assert_eq!(s.clone() * s, QSqrt2::from_i64(2));
    }

    #[test]
    fn signs_and_floor() {
        // 169√2 - 239 > 0, 99 - 70√2 > 0
        let x = QSqrt2::new(rat(-239, 1), rat(169, 1));
        assert_eq!(x.signum(), Ordering::Greater);
        let y = QSqrt2::new(rat(-99, 1), rat(70, 1));
        assert_eq!(y.signum(), Ordering::Less);
        assert_eq!(QSqrt2::sqrt2().floor(), BigInt::from(1));
        assert_eq!((-QSqrt2::sqrt2()).floor(), BigInt::from(-2));
        assert_eq!(QSqrt2::from_i64(3).floor(), BigInt::from(3));
    }

    #[test]
    fn division_inverts_multiplication() {
        let x = QSqrt2::new(rat(3, 2), rat(-5, 7));
        let y = QSqrt2::new(rat(1, 3), rat(2, 1));
        assert_eq!((x.clone() * y.clone()) / y, x);
    }
}
