//! Polygonal composition and the dyadic limit process.
//!
//! `compose_euler` walks a flow along an explicit schedule. `euler_epsilon`
//! is the equispaced special case with a final fractional step; it streams
//! its breakpoints instead of materializing them, but performs bit-for-bit
//! the same arithmetic as `compose_euler` on `epsilon_schedule(eps, t)`, so
//! the two agree exactly. `dyadic_process` refines `eps = t * 2^-m` until a
//! target accuracy is reached, either certified through the flow's modulus
//! or empirically through successive differences.

use crate::bounds::process_tail_bound;
use crate::error::{Error, Result};
use crate::flow::{LocalFlow, Schedule};
use crate::modulus::OmegaModulus;
use crate::space::{distance, State};
use crate::tolerances;

/// Largest schedule `epsilon_schedule` will materialize.
const MAX_MATERIALIZED_STEPS: u64 = 1 << 22;

fn check_window(flow: &dyn LocalFlow, t0: f64, t: f64) -> Result<()> {
    if !t0.is_finite() || t0 < 0.0 {
        return Err(Error::InvalidRange(format!(
            "base time must be finite and nonnegative, got {t0}"
        )));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidRange(format!(
            "arc length must be finite and nonnegative, got {t}"
        )));
    }
    if !tolerances::within_time(t0 + t, flow.horizon()) {
        return Err(Error::HorizonExceeded {
            reached: t0 + t,
            horizon: flow.horizon(),
        });
    }
    Ok(())
}

/// Drives the flow through `(offset, increment)` pairs. The single place
/// where mesh and applicability are enforced, shared by every composition
/// entry point so that refinement consistency holds by construction.
fn run_steps<I>(flow: &dyn LocalFlow, t0: f64, u: &State, pairs: I) -> Result<State>
where
    I: Iterator<Item = (f64, f64)>,
{
    let delta = flow.delta();
    let mut cur = u.clone();
    for (offset, dt) in pairs {
        if !tolerances::within_time(dt, delta) {
            return Err(Error::MeshTooCoarse {
                increment: dt,
                delta,
            });
        }
        let at = t0 + offset;
        if !flow.applicable(at, &cur) {
            return Err(Error::NotApplicable { t0: at });
        }
        cur = flow.step(dt, at, &cur)?;
    }
    Ok(cur)
}

/// The Euler polygonal arc of `flow` along `schedule`, started at `(t0, u)`.
///
/// A single-breakpoint schedule returns `u` unchanged. Any increment above
/// `flow.delta()` fails with `MeshTooCoarse`; an arc leaving the window
/// fails with `HorizonExceeded` before any stepping happens.
pub fn compose_euler(
    flow: &dyn LocalFlow,
    schedule: &Schedule,
    t0: f64,
    u: &State,
) -> Result<State> {
    check_window(flow, t0, schedule.total())?;
    let bp = schedule.breakpoints();
    run_steps(flow, t0, u, bp.windows(2).map(|w| (w[0], w[1] - w[0])))
}

/// Number of full steps of length `eps` inside `[0, t]`, with a guard
/// against the float quotient rounding up past the true floor.
fn epsilon_steps(eps: f64, t: f64) -> (u64, f64) {
    let mut k = (t / eps).floor() as u64;
    while k > 0 && (k as f64) * eps > t {
        k -= 1;
    }
    (k, k as f64 * eps)
}

/// The breakpoints `{0, eps, 2 eps, ..., k eps} ∪ {t}` of the equispaced
/// arc, materialized as a `Schedule`. Composing along it is bitwise equal
/// to `euler_epsilon(eps, t)`.
pub fn epsilon_schedule(eps: f64, t: f64) -> Result<Schedule> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidRange(format!(
            "eps must be positive and finite, got {eps}"
        )));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidRange(format!(
            "arc length must be positive and finite, got {t}"
        )));
    }
    let (k, tail_start) = epsilon_steps(eps, t);
    if k > MAX_MATERIALIZED_STEPS {
        return Err(Error::InvalidRange(format!(
            "schedule with {k} steps is too large to materialize; use euler_epsilon"
        )));
    }
    let mut bp: Vec<f64> = (0..=k).map(|h| h as f64 * eps).collect();
    if tail_start < t {
        bp.push(t);
    }
    Schedule::new(bp)
}

/// The `eps`-polygonal arc `F^eps(t, t0) u`: `floor(t / eps)` full steps
/// followed by the fractional remainder (skipped when it is zero, which is
/// the identity). `t == 0` returns `u` unchanged, exactly.
pub fn euler_epsilon(
    flow: &dyn LocalFlow,
    eps: f64,
    t: f64,
    t0: f64,
    u: &State,
) -> Result<State> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidRange(format!(
            "eps must be positive and finite, got {eps}"
        )));
    }
    check_window(flow, t0, t)?;
    if t == 0.0 {
        return Ok(u.clone());
    }
    let (k, tail_start) = epsilon_steps(eps, t);
    let full = (0..k).map(move |h| {
        let a = h as f64 * eps;
        let b = (h + 1) as f64 * eps;
        (a, b - a)
    });
    let frag = (tail_start < t).then_some((tail_start, t - tail_start));
    run_steps(flow, t0, u, full.chain(frag))
}

/// The dyadic polygonal `F^{t 2^-m}(t, t0) u`, level `m` of the refinement.
pub fn dyadic_polygonal(
    flow: &dyn LocalFlow,
    m: u32,
    t: f64,
    t0: f64,
    u: &State,
) -> Result<State> {
    if m > 1000 {
        return Err(Error::InvalidRange(format!("dyadic level {m} out of range")));
    }
    check_window(flow, t0, t)?;
    if t == 0.0 {
        return Ok(u.clone());
    }
    let eps = t * 2f64.powi(-(m as i32));
    euler_epsilon(flow, eps, t, t0, u)
}

/// Approximation driver for the limit process `P(t, t0)`.
///
/// `stability` is the polygonal Lipschitz-in-state constant `L`. When
/// `modulus` is present the refinement level is chosen a priori from the
/// certified tail bound; when it is `None` the driver falls back to
/// comparing successive dyadic levels.
pub struct ProcessApprox<'a> {
    pub flow: &'a dyn LocalFlow,
    pub stability: f64,
    pub modulus: Option<OmegaModulus>,
    pub max_level: u32,
}

impl<'a> ProcessApprox<'a> {
    pub fn new(flow: &'a dyn LocalFlow, stability: f64, modulus: Option<OmegaModulus>) -> Self {
        ProcessApprox {
            flow,
            stability,
            modulus,
            max_level: tolerances::MAX_DYADIC_LEVEL,
        }
    }

    pub fn with_max_level(mut self, max_level: u32) -> Self {
        self.max_level = max_level;
        self
    }
}

/// Result of `dyadic_process`.
#[derive(Clone, Debug)]
pub struct DyadicOutcome {
    /// The finest dyadic polygonal computed.
    pub state: State,
    /// The level `m` it was computed at.
    pub level: u32,
    /// Certified distance to the limit process, or the last successive
    /// difference in empirical mode.
    pub achieved_bound: f64,
    /// Whether the stopping rule was empirical rather than certified.
    pub empirical: bool,
}

/// Approximates the limit process at `(t, t0)` to accuracy `tol`.
///
/// With a modulus, picks the smallest level `m` whose certified tail bound
/// is at most `tol` and composes once. Without one, refines until two
/// consecutive levels differ by less than `tol` and returns the finer
/// state. Fails with `NoConvergence` when the level cap is hit first.
pub fn dyadic_process(
    pa: &ProcessApprox,
    t: f64,
    t0: f64,
    u: &State,
    tol: f64,
) -> Result<DyadicOutcome> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidRange(format!(
            "tolerance must be positive and finite, got {tol}"
        )));
    }
    check_window(pa.flow, t0, t)?;
    if t == 0.0 {
        return Ok(DyadicOutcome {
            state: u.clone(),
            level: 0,
            achieved_bound: 0.0,
            empirical: false,
        });
    }
    // Coarsest admissible level: smallest m with t * 2^-m <= delta.
    let delta = pa.flow.delta();
    let mut m0 = 0u32;
    while !tolerances::within_time(t * 2f64.powi(-(m0 as i32)), delta) {
        m0 += 1;
        if m0 > pa.max_level {
            return Err(Error::MeshTooCoarse {
                increment: t * 2f64.powi(-(pa.max_level as i32)),
                delta,
            });
        }
    }
    match pa.modulus {
        Some(om) => {
            let mut m = m0;
            loop {
                let tail = process_tail_bound(&om, pa.stability, t, m)?;
                if tail <= tol {
                    let state = dyadic_polygonal(pa.flow, m, t, t0, u)?;
                    return Ok(DyadicOutcome {
                        state,
                        level: m,
                        achieved_bound: tail,
                        empirical: false,
                    });
                }
                if m >= pa.max_level {
                    return Err(Error::NoConvergence(format!(
                        "certified tail {tail} still above tol {tol} at level cap {m}"
                    )));
                }
                m += 1;
            }
        }
        None => {
            let mut prev = dyadic_polygonal(pa.flow, m0, t, t0, u)?;
            let mut m = m0;
            loop {
                if m >= pa.max_level {
                    return Err(Error::NoConvergence(format!(
                        "successive dyadic levels did not settle below tol {tol} by level cap {m}"
                    )));
                }
                m += 1;
                let cur = dyadic_polygonal(pa.flow, m, t, t0, u)?;
                let diff = distance(&prev, &cur)?;
                if diff < tol {
                    return Ok(DyadicOutcome {
                        state: cur,
                        level: m,
                        achieved_bound: diff,
                        empirical: true,
                    });
                }
                prev = cur;
            }
        }
    }
}
