//! Shared numeric tolerances.
//!
//! Two kinds of slack appear throughout the crate and they are deliberately
//! different in size. `TIME_SLACK` absorbs the ulp-level noise of breakpoint
//! arithmetic when an increment is compared against a mesh bound or a horizon;
//! it must stay tiny so that genuinely oversized steps are still rejected.
//! `BOUND_SLACK` is the relative margin granted when a measured quantity is
//! compared against a certified bound; bounds are computed in floating point
//! too, so demanding `measured <= bound` exactly would fail on rounding alone.

/// Relative slack for `measured <= bound` comparisons.
pub const BOUND_SLACK: f64 = 1e-6;

/// Relative slack for mesh-size and horizon checks.
pub const TIME_SLACK: f64 = 1e-12;

/// Membership tolerance for projection fixed-point checks.
pub const BODY_TOL: f64 = 1e-12;

/// Allowed relative residual in the resolvent identities.
pub const IDENTITY_RESIDUAL: f64 = 1e-9;

/// Default cap on the dyadic refinement level.
pub const MAX_DYADIC_LEVEL: u32 = 24;

/// True when `value <= limit` up to `TIME_SLACK` relative tolerance.
pub fn within_time(value: f64, limit: f64) -> bool {
    value <= limit * (1.0 + TIME_SLACK)
}

/// True when `measured <= bound` up to `BOUND_SLACK` relative tolerance.
pub fn within_bound(measured: f64, bound: f64) -> bool {
    measured <= bound * (1.0 + BOUND_SLACK)
}
