//! Sign-and-log representation of extended reals.
//!
//! A `SignedLog` stores `sign * exp(logmag)`. Spectral parameters of order
//! `exp(-sqrt(n))` and the pivot/shear products built from them leave the
//! range of `f64` once `n` is in the tens of thousands, so every quantity on
//! the counting path is kept in log coordinates and only signs and log
//! magnitudes are ever combined.
//!
//! Addition of opposite-sign values is the one lossy operation: when the two
//! magnitudes agree to within [`CANCEL_EPS`] (relative, i.e. absolute in log
//! domain) the sign of the sum cannot be trusted and the operation reports a
//! cancellation instead of guessing.

use std::cmp::Ordering;
use std::fmt;

/// Relative tolerance under which an opposite-sign sum is ambiguous.
pub const CANCEL_EPS: f64 = 1e-12;

/// Opposite-sign addition hit the cancellation tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cancellation;

#[derive(Clone, Copy, PartialEq)]
pub struct SignedLog {
    sign: i8,
    logmag: f64,
}

impl SignedLog {
    pub const fn zero() -> Self {
        SignedLog {
            sign: 0,
            logmag: f64::NEG_INFINITY,
        }
    }

    pub const fn one() -> Self {
        SignedLog {
            sign: 1,
            logmag: 0.0,
        }
    }

    /// `sign * exp(ln_abs)`. The canonical constructor; normalizes zeros.
    pub fn from_sign_ln(sign: i8, ln_abs: f64) -> Self {
        debug_assert!(sign == -1 || sign == 0 || sign == 1);
        debug_assert!(!ln_abs.is_nan());
        if sign == 0 || ln_abs == f64::NEG_INFINITY {
            return Self::zero();
        }
        SignedLog {
            sign,
            logmag: ln_abs,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        assert!(!x.is_nan(), "SignedLog::from_f64(NaN)");
        if x == 0.0 {
            Self::zero()
        } else {
            SignedLog {
                sign: if x > 0.0 { 1 } else { -1 },
                logmag: x.abs().ln(),
            }
        }
    }

    /// Unsigned infinity is not representable; callers pick the sign that
    /// matches the surface component they are on.
    pub fn infinity(sign: i8) -> Self {
        assert!(sign == 1 || sign == -1);
        SignedLog {
            sign,
            logmag: f64::INFINITY,
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Natural log of the magnitude (`-inf` for zero).
    pub fn ln_abs(&self) -> f64 {
        self.logmag
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn is_infinite(&self) -> bool {
        self.logmag == f64::INFINITY
    }

    pub fn neg(&self) -> Self {
        SignedLog {
            sign: -self.sign,
            logmag: self.logmag,
        }
    }

    pub fn abs(&self) -> Self {
        SignedLog {
            sign: if self.sign == 0 { 0 } else { 1 },
            logmag: self.logmag,
        }
    }

    pub fn recip(&self) -> Self {
        if self.is_infinite() {
            return Self::zero();
        }
        assert!(!self.is_zero(), "reciprocal of zero");
        SignedLog {
            sign: self.sign,
            logmag: -self.logmag,
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            debug_assert!(
                !(self.is_infinite() || rhs.is_infinite()),
                "0 * inf is undefined"
            );
            return Self::zero();
        }
        SignedLog {
            sign: self.sign * rhs.sign,
            logmag: self.logmag + rhs.logmag,
        }
    }

    pub fn div(&self, rhs: &Self) -> Self {
        assert!(!rhs.is_zero(), "division by zero");
        if self.is_zero() {
            return Self::zero();
        }
        SignedLog {
            sign: self.sign * rhs.sign,
            logmag: self.logmag - rhs.logmag,
        }
    }

    pub fn square(&self) -> Self {
        SignedLog {
            sign: if self.sign == 0 { 0 } else { 1 },
            logmag: 2.0 * self.logmag,
        }
    }

    /// Signed addition. Exactly opposite values give exact zero; values whose
    /// magnitudes agree within [`CANCEL_EPS`] but not exactly are reported as
    /// a cancellation because the result's sign would be noise.
    pub fn try_add(&self, rhs: &Self) -> Result<Self, Cancellation> {
        if self.is_zero() {
            return Ok(*rhs);
        }
        if rhs.is_zero() {
            return Ok(*self);
        }
        let (hi, lo) = if self.logmag >= rhs.logmag {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let delta = hi.logmag - lo.logmag; // >= 0, may be NaN for inf - inf
        if self.sign == rhs.sign {
            if hi.is_infinite() {
                return Ok(*hi);
            }
            return Ok(SignedLog {
                sign: hi.sign,
                logmag: hi.logmag + (-delta).exp().ln_1p(),
            });
        }
        // Opposite signs.
        if self.is_infinite() && rhs.is_infinite() {
            return Err(Cancellation);
        }
        if delta == 0.0 {
            return Ok(Self::zero());
        }
        if delta <= CANCEL_EPS {
            return Err(Cancellation);
        }
        // ln(1 - exp(-delta)), split at ln 2 for accuracy.
        let ln_one_minus = if delta > std::f64::consts::LN_2 {
            (-(-delta).exp()).ln_1p()
        } else {
            (-(-delta).exp_m1()).ln()
        };
        Ok(SignedLog {
            sign: hi.sign,
            logmag: hi.logmag + ln_one_minus,
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, Cancellation> {
        self.try_add(&rhs.neg())
    }

    /// Total order as extended reals in [-inf, +inf].
    pub fn cmp_value(&self, rhs: &Self) -> Ordering {
        match self.sign.cmp(&rhs.sign) {
            Ordering::Equal => {}
            ord => return ord,
        }
        match self.sign {
            0 => Ordering::Equal,
            1 => self.logmag.partial_cmp(&rhs.logmag).unwrap(),
            _ => rhs.logmag.partial_cmp(&self.logmag).unwrap(),
        }
    }

    /// May overflow to +-inf or underflow to 0; fine for display and for
    /// quantities known to be of moderate scale.
    pub fn to_f64(&self) -> f64 {
        self.sign as f64 * self.logmag.exp()
    }
}

impl fmt::Debug for SignedLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "SignedLog(0)"),
            s => write!(
                f,
                "SignedLog({}e^{})",
                if s > 0 { "+" } else { "-" },
                self.logmag
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn roundtrip_and_algebra() {
        let a = SignedLog::from_f64(3.5);
        let b = SignedLog::from_f64(-2.0);
        assert_relative_eq!(a.mul(&b).to_f64(), -7.0, max_relative = 1e-14);
        assert_relative_eq!(a.div(&b).to_f64(), -1.75, max_relative = 1e-14);
        assert_relative_eq!(
            a.try_add(&b).unwrap().to_f64(),
            1.5,
            max_relative = 1e-14
        );
        assert_relative_eq!(b.square().to_f64(), 4.0, max_relative = 1e-14);
        assert_relative_eq!(a.recip().to_f64(), 1.0 / 3.5, max_relative = 1e-14);
    }

    #[test]
    fn add_far_beyond_f64_range() {
        // e^1000 + e^998 stays exact in log coordinates.
        let a = SignedLog::from_sign_ln(1, 1000.0);
        let b = SignedLog::from_sign_ln(1, 998.0);
        let s = a.try_add(&b).unwrap();
        assert_relative_eq!(s.ln_abs(), 1000.0 + (1.0 + (-2.0f64).exp()).ln());
        // and subtraction keeps the dominant sign
        let d = a.sub(&b).unwrap();
        assert_eq!(d.sign(), 1);
        assert_relative_eq!(d.ln_abs(), 1000.0 + (-(-2.0f64).exp_m1()).ln());
    }

    #[test]
    fn exact_cancellation_gives_zero() {
        let a = SignedLog::from_f64(5.0);
        assert!(a.try_add(&a.neg()).unwrap().is_zero());
    }

    #[test]
    fn near_cancellation_is_reported() {
        let a = SignedLog::from_sign_ln(1, 10.0);
        let b = SignedLog::from_sign_ln(-1, 10.0 + 1e-13);
        assert_eq!(a.try_add(&b), Err(Cancellation));
        // Outside the tolerance the sign resolves.
        let c = SignedLog::from_sign_ln(-1, 10.0 + 1e-9);
        assert_eq!(a.try_add(&c).unwrap().sign(), -1);
    }

    #[test]
    fn ordering_is_total_over_extended_reals() {
        let vals = [
            SignedLog::infinity(-1),
            SignedLog::from_f64(-7.0),
            SignedLog::from_f64(-0.1),
            SignedLog::zero(),
            SignedLog::from_f64(0.3),
            SignedLog::from_f64(2.0),
            SignedLog::infinity(1),
        ];
        for i in 0..vals.len() {
            for j in 0..vals.len() {
                assert_eq!(vals[i].cmp_value(&vals[j]), i.cmp(&j));
            }
        }
    }

    #[test]
    fn infinity_arithmetic() {
        let inf = SignedLog::infinity(1);
        assert!(inf.recip().is_zero());
        assert!(inf.try_add(&SignedLog::from_f64(3.0)).unwrap().is_infinite());
        assert_eq!(inf.try_add(&inf.neg()), Err(Cancellation));
    }
}
