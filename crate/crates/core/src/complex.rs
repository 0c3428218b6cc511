//! Arbitrary-precision complex scalar built on MPFR floats.
//!
//! Every arithmetic result is rounded to the larger precision of its operands.
//! Multiplication and division use fused `a*b ± c*d` kernels so each real and
//! imaginary part is rounded once.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::float::Round;
use rug::{Assign, Float};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest precision accepted anywhere in the crate.
pub const MIN_PRECISION: u32 = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexAp {
    re: Float,
    im: Float,
}

impl ComplexAp {
    pub fn zero(prec: u32) -> Self {
        ComplexAp {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_f64(1.0, 0.0, prec)
    }

    /// Exact conversion; every `f64` is representable at `prec >= 53`.
    pub fn from_f64(re: f64, im: f64, prec: u32) -> Self {
        ComplexAp {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    pub fn from_i64(re: i64, prec: u32) -> Self {
        ComplexAp {
            re: Float::with_val(prec, re),
            im: Float::new(prec),
        }
    }

    /// `modulus * exp(i * phase)` evaluated in double precision, then widened
    /// exactly. Sampled parameters go through here so that raising the working
    /// precision later never changes their value.
    pub fn from_polar_f64(modulus: f64, phase: f64, prec: u32) -> Self {
        let (s, c) = phase.sin_cos();
        Self::from_f64(modulus * c, modulus * s, prec)
    }

    pub fn from_parts(re: Float, im: Float) -> Self {
        let prec = re.prec().max(im.prec());
        let mut z = ComplexAp { re, im };
        z.set_prec(prec);
        z
    }

    /// Parses two decimal strings (any format MPFR accepts).
    pub fn parse(re: &str, im: &str, prec: u32) -> Result<Self> {
        let parse = |s: &str| {
            Float::parse(s)
                .map(|p| Float::with_val(prec, p))
                .map_err(|e| Error::Argument(format!("cannot parse {s:?} as a number: {e}")))
        };
        Ok(ComplexAp {
            re: parse(re)?,
            im: parse(im)?,
        })
    }

    pub fn re(&self) -> &Float {
        &self.re
    }

    pub fn im(&self) -> &Float {
        &self.im
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    /// Rounds (or exactly widens) both parts to `prec` bits.
    pub fn set_prec(&mut self, prec: u32) {
        self.re.set_prec_round(prec, Round::Nearest);
        self.im.set_prec_round(prec, Round::Nearest);
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        let mut z = self.clone();
        z.set_prec(prec);
        z
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    /// Fails with an overflow error naming `what` if either part is NaN or infinite.
    pub fn ensure_finite(self, what: &str) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::Overflow(what.to_string()))
        }
    }

    /// |z|, rounded once.
    pub fn abs(&self) -> Float {
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    /// ln |z| in double precision; `-inf` for zero.
    pub fn ln_abs_f64(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        // Computed at a modest precision: only the magnitude matters to callers.
        let a = Float::with_val(64, self.re.hypot_ref(&self.im));
        Float::with_val(64, a.ln_ref()).to_f64()
    }

    pub fn abs_f64(&self) -> f64 {
        Float::with_val(64, self.re.hypot_ref(&self.im)).to_f64()
    }

    pub fn conj(&self) -> Self {
        ComplexAp {
            re: self.re.clone(),
            im: Float::with_val(self.im.prec(), -&self.im),
        }
    }

    /// 1/z, failing on zero.
    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Domain("reciprocal of zero".into()));
        }
        Ok(self.recip_unchecked())
    }

    fn recip_unchecked(&self) -> Self {
        let prec = self.prec();
        let den = Float::with_val(prec, self.re.mul_add_mul_ref(&self.re, &self.im, &self.im));
        ComplexAp {
            re: Float::with_val(prec, &self.re / &den),
            im: Float::with_val(prec, -(Float::with_val(prec, &self.im / &den))),
        }
    }

    /// Quotient, failing on a zero divisor.
    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::Domain("division by zero".into()));
        }
        Ok(self / rhs)
    }

    /// Integer power by repeated squaring; negative exponents invert first.
    pub fn powi(&self, exp: i64) -> Result<Self> {
        if exp < 0 {
            return self.recip()?.powi(
                exp.checked_neg()
                    .ok_or_else(|| Error::Argument("exponent out of range".into()))?,
            );
        }
        let mut result = ComplexAp::one(self.prec());
        let mut base = self.clone();
        let mut e = exp as u64;
        while e > 0 {
            if e & 1 == 1 {
                result *= &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(result)
    }

    /// `self * self'` written into `self`, reusing the existing allocations.
    pub fn mul_assign_with(&mut self, rhs: &ComplexAp, scratch: &mut [Float; 2]) {
        let [re, im] = scratch;
        re.assign(self.re.mul_sub_mul_ref(&rhs.re, &self.im, &rhs.im));
        im.assign(self.re.mul_add_mul_ref(&rhs.im, &self.im, &rhs.re));
        std::mem::swap(&mut self.re, re);
        std::mem::swap(&mut self.im, im);
    }

    /// `self = a * b` without reallocating.
    pub fn assign_mul(&mut self, a: &ComplexAp, b: &ComplexAp) {
        self.re.assign(a.re.mul_sub_mul_ref(&b.re, &a.im, &b.im));
        self.im.assign(a.re.mul_add_mul_ref(&b.im, &a.im, &b.re));
    }

    /// `self = a - b` without reallocating.
    pub fn assign_sub(&mut self, a: &ComplexAp, b: &ComplexAp) {
        self.re.assign(&a.re - &b.re);
        self.im.assign(&a.im - &b.im);
    }

    /// Decimal strings for the real and imaginary parts, with enough digits to
    /// round-trip at the current precision.
    pub fn to_decimal(&self) -> DecimalComplex {
        DecimalComplex {
            re: self.re.to_string_radix(10, None),
            im: self.im.to_string_radix(10, None),
        }
    }
}

/// Serialized form of a complex value: decimal strings, never binary floats.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecimalComplex {
    pub re: String,
    pub im: String,
}

impl fmt::Display for DecimalComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.starts_with('-') {
            write!(f, "{} - {}i", self.re, &self.im[1..])
        } else {
            write!(f, "{} + {}i", self.re, self.im)
        }
    }
}

impl fmt::Display for ComplexAp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_decimal().fmt(f)
    }
}

impl<'a> Add<&'a ComplexAp> for &'a ComplexAp {
    type Output = ComplexAp;
    fn add(self, rhs: &ComplexAp) -> ComplexAp {
        let prec = self.prec().max(rhs.prec());
        ComplexAp {
            re: Float::with_val(prec, &self.re + &rhs.re),
            im: Float::with_val(prec, &self.im + &rhs.im),
        }
    }
}

impl<'a> Sub<&'a ComplexAp> for &'a ComplexAp {
    type Output = ComplexAp;
    fn sub(self, rhs: &ComplexAp) -> ComplexAp {
        let prec = self.prec().max(rhs.prec());
        ComplexAp {
            re: Float::with_val(prec, &self.re - &rhs.re),
            im: Float::with_val(prec, &self.im - &rhs.im),
        }
    }
}

impl<'a> Mul<&'a ComplexAp> for &'a ComplexAp {
    type Output = ComplexAp;
    fn mul(self, rhs: &ComplexAp) -> ComplexAp {
        let prec = self.prec().max(rhs.prec());
        ComplexAp {
            re: Float::with_val(prec, self.re.mul_sub_mul_ref(&rhs.re, &self.im, &rhs.im)),
            im: Float::with_val(prec, self.re.mul_add_mul_ref(&rhs.im, &self.im, &rhs.re)),
        }
    }
}

impl<'a> Div<&'a ComplexAp> for &'a ComplexAp {
    type Output = ComplexAp;
    /// Division by zero produces a non-finite value; use
    /// [`ComplexAp::checked_div`] where the divisor may vanish.
    fn div(self, rhs: &ComplexAp) -> ComplexAp {
        let prec = self.prec().max(rhs.prec());
        let den = Float::with_val(prec, rhs.re.mul_add_mul_ref(&rhs.re, &rhs.im, &rhs.im));
        let re = Float::with_val(prec, self.re.mul_add_mul_ref(&rhs.re, &self.im, &rhs.im));
        let im = Float::with_val(prec, self.im.mul_sub_mul_ref(&rhs.re, &self.re, &rhs.im));
        ComplexAp {
            re: re / &den,
            im: im / &den,
        }
    }
}

impl Neg for &ComplexAp {
    type Output = ComplexAp;
    fn neg(self) -> ComplexAp {
        ComplexAp {
            re: Float::with_val(self.re.prec(), -&self.re),
            im: Float::with_val(self.im.prec(), -&self.im),
        }
    }
}

impl Neg for ComplexAp {
    type Output = ComplexAp;
    fn neg(self) -> ComplexAp {
        ComplexAp {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl AddAssign<&ComplexAp> for ComplexAp {
    fn add_assign(&mut self, rhs: &ComplexAp) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&ComplexAp> for ComplexAp {
    fn sub_assign(&mut self, rhs: &ComplexAp) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl MulAssign<&ComplexAp> for ComplexAp {
    fn mul_assign(&mut self, rhs: &ComplexAp) {
        let prec = self.prec();
        let mut scratch = [Float::new(prec), Float::new(prec)];
        self.mul_assign_with(rhs, &mut scratch);
    }
}

impl MulAssign<&Float> for ComplexAp {
    fn mul_assign(&mut self, rhs: &Float) {
        self.re *= rhs;
        self.im *= rhs;
    }
}
