//! The local flow interface and step schedules.

use crate::error::{Error, Result};
use crate::modulus::OmegaModulus;
use crate::space::State;
use crate::tolerances;

/// A local flow `F(tau, t0)` on a metric space.
///
/// A flow advances a state by a short time `tau <= delta()` starting from
/// base time `t0`, for `t0 + tau` inside the window `[0, horizon()]`.
/// Implementations must satisfy `F(0, t0) u == u` exactly and be Lipschitz
/// in the state with constant `lip()` uniformly over admissible `(tau, t0)`.
pub trait LocalFlow: Send + Sync {
    /// One step of length `tau` from base time `t0`.
    fn step(&self, tau: f64, t0: f64, u: &State) -> Result<State>;

    /// Maximal admissible step length.
    fn delta(&self) -> f64;

    /// End of the time window.
    fn horizon(&self) -> f64;

    /// A Lipschitz constant of `(tau, u) -> F(tau, t0) u`, uniform in `t0`.
    fn lip(&self) -> f64;

    /// Whether the flow may be stepped from `(t0, u)`.
    fn applicable(&self, t0: f64, u: &State) -> bool;
}

/// Shared argument validation for flow steps. Checks the step length against
/// `delta`, the window against `horizon`, and basic finiteness; flows call
/// this at the top of `step`.
pub fn check_step_args(delta: f64, horizon: f64, tau: f64, t0: f64) -> Result<()> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::InvalidRange(format!(
            "step length must be finite and nonnegative, got {tau}"
        )));
    }
    if !t0.is_finite() || t0 < 0.0 {
        return Err(Error::InvalidRange(format!(
            "base time must be finite and nonnegative, got {t0}"
        )));
    }
    if !tolerances::within_time(tau, delta) {
        return Err(Error::MeshTooCoarse {
            increment: tau,
            delta,
        });
    }
    if !tolerances::within_time(t0 + tau, horizon) {
        return Err(Error::HorizonExceeded {
            reached: t0 + tau,
            horizon,
        });
    }
    Ok(())
}

/// Breakpoints `0 = tau_0 < tau_1 < ... < tau_{k+1} = t` of a polygonal arc.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    breakpoints: Vec<f64>,
}

impl Schedule {
    /// Builds a schedule from explicit breakpoints. The list must start at
    /// exactly `0.0`, be strictly increasing and finite.
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidConfig("empty schedule".into()));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidConfig(format!(
                "schedule must start at 0, got {}",
                breakpoints[0]
            )));
        }
        for w in breakpoints.windows(2) {
            if !w[1].is_finite() || w[1] <= w[0] {
                return Err(Error::InvalidConfig(format!(
                    "schedule breakpoints must increase strictly, got {} after {}",
                    w[1], w[0]
                )));
            }
        }
        Ok(Schedule { breakpoints })
    }

    /// `steps` equal increments covering `[0, t]`.
    pub fn uniform(t: f64, steps: usize) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "schedule length must be positive and finite, got {t}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidConfig("uniform schedule needs steps >= 1".into()));
        }
        let dt = t / steps as f64;
        let mut bp: Vec<f64> = (0..steps).map(|h| h as f64 * dt).collect();
        bp.push(t);
        // Guard against a float overshoot of the second-to-last breakpoint.
        if bp[steps - 1] >= t {
            bp.truncate(steps - 1);
            bp.push(t);
        }
        Schedule::new(bp)
    }

    /// `steps` increments covering `[0, t]` whose lengths grow geometrically
    /// by `ratio` (shrink for `ratio < 1`).
    pub fn geometric(t: f64, steps: usize, ratio: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "schedule length must be positive and finite, got {t}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidConfig("geometric schedule needs steps >= 1".into()));
        }
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "geometric ratio must be positive and finite, got {ratio}"
            )));
        }
        if (ratio - 1.0).abs() < 1e-12 {
            return Schedule::uniform(t, steps);
        }
        // First increment d0 with d0 * (r^steps - 1) / (r - 1) = t.
        let d0 = t * (ratio - 1.0) / (ratio.powi(steps as i32) - 1.0);
        let mut bp = Vec::with_capacity(steps + 1);
        let mut acc = 0.0;
        let mut d = d0;
        bp.push(0.0);
        for _ in 0..steps - 1 {
            acc += d;
            bp.push(acc);
            d *= ratio;
        }
        bp.push(t);
        Schedule::new(bp)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Total length `t` of the covered interval.
    pub fn total(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// The largest increment.
    pub fn mesh(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Number of increments.
    pub fn steps(&self) -> usize {
        self.breakpoints.len() - 1
    }
}

/// Certified constants of a flow: a stability (Lipschitz-in-state) constant
/// `L` for polygonal arcs and the commutation modulus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    pub stability: f64,
    pub modulus: OmegaModulus,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_schedule_has_exact_endpoints() {
        let s = Schedule::uniform(0.3, 3).unwrap();
        assert_eq!(s.breakpoints()[0], 0.0);
        assert_eq!(s.total(), 0.3);
        assert_eq!(s.steps(), 3);
        assert!((s.mesh() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn uniform_one_step_is_the_whole_interval() {
        let s = Schedule::uniform(0.7, 1).unwrap();
        assert_eq!(s.breakpoints(), &[0.0, 0.7]);
    }

    #[test]
    fn geometric_schedule_sums_to_total() {
        let s = Schedule::geometric(1.0, 5, 2.0).unwrap();
        assert_eq!(s.total(), 1.0);
        assert_eq!(s.steps(), 5);
        let inc: Vec<f64> = s.breakpoints().windows(2).map(|w| w[1] - w[0]).collect();
        for w in inc.windows(2) {
            assert!((w[1] / w[0] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn geometric_ratio_one_is_uniform() {
        let a = Schedule::geometric(0.5, 4, 1.0).unwrap();
        let b = Schedule::uniform(0.5, 4).unwrap();
        assert_eq!(a.breakpoints(), b.breakpoints());
    }

    #[test]
    fn schedule_rejects_malformed_breakpoints() {
        assert!(Schedule::new(vec![]).is_err());
        assert!(Schedule::new(vec![0.1, 0.2]).is_err());
        assert!(Schedule::new(vec![0.0, 0.2, 0.2]).is_err());
        assert!(Schedule::new(vec![0.0, 0.3, 0.2]).is_err());
        assert!(Schedule::new(vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn single_breakpoint_schedule_is_valid_and_empty() {
        let s = Schedule::new(vec![0.0]).unwrap();
        assert_eq!(s.total(), 0.0);
        assert_eq!(s.steps(), 0);
        assert_eq!(s.mesh(), 0.0);
    }

    #[test]
    fn step_args_respect_slack() {
        // An increment a hair over delta from breakpoint arithmetic passes,
        // a genuinely oversized one does not.
        assert!(check_step_args(0.1, 1.0, 0.1 * (1.0 + 1e-13), 0.0).is_ok());
        assert!(matches!(
            check_step_args(0.1, 1.0, 0.1 * (1.0 + 1e-9), 0.0),
            Err(Error::MeshTooCoarse { .. })
        ));
        assert!(matches!(
            check_step_args(0.1, 1.0, 0.05, 0.96),
            Err(Error::HorizonExceeded { .. })
        ));
        assert!(check_step_args(0.1, 1.0, 0.05, 0.95).is_ok());
    }
}
