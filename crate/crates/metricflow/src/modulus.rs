//! Power-law commutation moduli and their Osgood integral.

use crate::error::{Error, Result};

/// The modulus `omega(tau) = C * tau^alpha` with `C >= 0` and `alpha > 0`.
///
/// This family is closed under the operations the bounds need and admits a
/// closed-form Osgood integral, which keeps every certified bound free of
/// quadrature error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaModulus {
    coefficient: f64,
    exponent: f64,
}

impl OmegaModulus {
    pub fn new(coefficient: f64, exponent: f64) -> Result<Self> {
        if !(coefficient >= 0.0) || !coefficient.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "modulus coefficient must be finite and nonnegative, got {coefficient}"
            )));
        }
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "modulus exponent must be finite and positive, got {exponent}"
            )));
        }
        Ok(OmegaModulus {
            coefficient,
            exponent,
        })
    }

    /// The zero modulus (exactly commuting flow).
    pub fn zero() -> Self {
        OmegaModulus {
            coefficient: 0.0,
            exponent: 1.0,
        }
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Evaluates `C * tau^alpha` for `tau >= 0`.
    pub fn eval(&self, tau: f64) -> Result<f64> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidRange(format!(
                "modulus argument must be finite and nonnegative, got {tau}"
            )));
        }
        Ok(self.coefficient * tau.powf(self.exponent))
    }
}

/// The Osgood integral `int_a^b omega(xi) / xi dxi` in closed form:
/// `C * (b^alpha - a^alpha) / alpha`, for `0 <= a <= b`.
pub fn osgood_integral(omega: &OmegaModulus, a: f64, b: f64) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() || !(0.0 <= a) || !(a <= b) {
        return Err(Error::InvalidRange(format!(
            "osgood integral needs 0 <= a <= b, got a = {a}, b = {b}"
        )));
    }
    let alpha = omega.exponent;
    Ok(omega.coefficient * (b.powf(alpha) - a.powf(alpha)) / alpha)
}
