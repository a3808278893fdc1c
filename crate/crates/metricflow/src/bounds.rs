//! A-priori bounds controlling polygonal arcs and the limit process.
//!
//! All four bounds share one mechanism: a stability constant `L` propagates
//! a per-step commutation defect along the arc, and summing the defects is
//! dominated by `2 / ln 2` times the Osgood integral of the modulus over
//! the range of step sizes involved. The factor `2 L / ln 2` is therefore
//! common to all of them; the Euler-vs-limit comparison pays `L` twice.

use crate::error::{Error, Result};
use crate::modulus::{osgood_integral, OmegaModulus};

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidRange(format!(
            "{name} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

/// Distance rate between a single step and the limit process:
/// `d(F(t, t0) u, P(t, t0) u) <= t * tangency_bound(omega, l, t)` for
/// `t` up to the flow's `delta`. Equals `(2 L / ln 2) * C * t^alpha / alpha`.
pub fn tangency_bound(omega: &OmegaModulus, l: f64, t: f64) -> Result<f64> {
    check_positive("stability constant", l)?;
    check_positive("time", t)?;
    Ok(2.0 * l / std::f64::consts::LN_2 * osgood_integral(omega, 0.0, t)?)
}

/// Distance between an Euler polygonal arc with the given mesh and the
/// limit process at time `t`:
/// `(2 L^2 / ln 2) * t * C * mesh^alpha / alpha`.
pub fn euler_error_bound(omega: &OmegaModulus, l: f64, t: f64, mesh: f64) -> Result<f64> {
    check_positive("stability constant", l)?;
    check_positive("time", t)?;
    check_positive("mesh", mesh)?;
    Ok(2.0 * l * l / std::f64::consts::LN_2 * t * osgood_integral(omega, 0.0, mesh)?)
}

/// Distance between dyadic levels `m < n` at time `t`:
/// `(2 L / ln 2) * t * int_{t 2^-n}^{t 2^-m} omega(xi) / xi dxi`.
pub fn dyadic_gap_bound(omega: &OmegaModulus, l: f64, t: f64, m: u32, n: u32) -> Result<f64> {
    check_positive("stability constant", l)?;
    check_positive("time", t)?;
    if m >= n {
        return Err(Error::InvalidRange(format!(
            "dyadic gap needs m < n, got m = {m}, n = {n}"
        )));
    }
    let a = t * 2f64.powi(-(n as i32));
    let b = t * 2f64.powi(-(m as i32));
    Ok(2.0 * l / std::f64::consts::LN_2 * t * osgood_integral(omega, a, b)?)
}

/// Certified distance from dyadic level `m` to the limit process, the
/// `n -> infinity` limit of `dyadic_gap_bound`.
pub fn process_tail_bound(omega: &OmegaModulus, l: f64, t: f64, m: u32) -> Result<f64> {
    check_positive("stability constant", l)?;
    check_positive("time", t)?;
    let b = t * 2f64.powi(-(m as i32));
    Ok(2.0 * l / std::f64::consts::LN_2 * t * osgood_integral(omega, 0.0, b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn om(c: f64, a: f64) -> OmegaModulus {
        OmegaModulus::new(c, a).unwrap()
    }

    #[test]
    fn tangency_closed_form() {
        // (2 * 3 / ln 2) * 2 * 1^0.5 / 0.5
        let b = tangency_bound(&om(2.0, 0.5), 3.0, 1.0).unwrap();
        let expect = 2.0 * 3.0 / std::f64::consts::LN_2 * 2.0 / 0.5;
        assert!((b - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn euler_error_closed_form() {
        let b = euler_error_bound(&om(1.0, 1.0), 2.0, 0.5, 0.125).unwrap();
        let expect = 2.0 * 4.0 / std::f64::consts::LN_2 * 0.5 * 0.125;
        assert!((b - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn bounds_grow_with_their_arguments() {
        let o = om(1.5, 0.5);
        assert!(
            tangency_bound(&o, 1.0, 0.2).unwrap() < tangency_bound(&o, 1.0, 0.4).unwrap()
        );
        assert!(
            tangency_bound(&o, 1.0, 0.2).unwrap() < tangency_bound(&o, 2.0, 0.2).unwrap()
        );
        assert!(
            euler_error_bound(&o, 1.0, 1.0, 0.1).unwrap()
                < euler_error_bound(&o, 1.0, 1.0, 0.2).unwrap()
        );
    }

    #[test]
    fn tail_decreases_geometrically_in_the_level() {
        let o = om(1.0, 0.5);
        let mut prev = f64::INFINITY;
        for m in 0..20 {
            let tail = process_tail_bound(&o, 1.0, 1.0, m).unwrap();
            assert!(tail < prev);
            prev = tail;
        }
        // alpha = 1/2 halves the tail every two levels.
        let t4 = process_tail_bound(&o, 1.0, 1.0, 4).unwrap();
        let t6 = process_tail_bound(&o, 1.0, 1.0, 6).unwrap();
        assert!((t4 / t6 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gap_is_dominated_by_the_tail_and_exhausts_it() {
        let o = om(0.8, 1.0);
        let tail = process_tail_bound(&o, 2.0, 0.5, 3).unwrap();
        let mut prev = 0.0;
        for n in 4..30 {
            let gap = dyadic_gap_bound(&o, 2.0, 0.5, 3, n).unwrap();
            assert!(gap > prev);
            assert!(gap <= tail);
            prev = gap;
        }
        assert!((prev - tail).abs() < 1e-7 * tail);
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        let o = om(1.0, 1.0);
        assert!(tangency_bound(&o, 0.0, 1.0).is_err());
        assert!(tangency_bound(&o, 1.0, 0.0).is_err());
        assert!(euler_error_bound(&o, 1.0, 1.0, 0.0).is_err());
        assert!(dyadic_gap_bound(&o, 1.0, 1.0, 3, 3).is_err());
        assert!(dyadic_gap_bound(&o, 1.0, 1.0, 5, 3).is_err());
    }

    #[test]
    fn zero_modulus_gives_zero_bounds() {
        let o = OmegaModulus::zero();
        assert_eq!(tangency_bound(&o, 5.0, 1.0).unwrap(), 0.0);
        assert_eq!(euler_error_bound(&o, 5.0, 1.0, 0.1).unwrap(), 0.0);
        assert_eq!(process_tail_bound(&o, 5.0, 1.0, 2).unwrap(), 0.0);
    }
}
