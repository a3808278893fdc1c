//! Empirical certification: measure step defects and stability ratios
//! from trajectories, fit power-law moduli, and verify the certified
//! convergence bounds row by row.
//!
//! The fitted modulus is a valid upper bound by construction: the
//! exponent comes from a log-log regression, but the coefficient is then
//! inflated until every measured sample is dominated. Verification
//! against the (unobservable) limit process replaces it with a deep
//! dyadic polygonal and adds the certified tail of that level to the
//! right-hand side.

use crate::bounds::{dyadic_gap_bound, euler_error_bound, process_tail_bound, tangency_bound};
use crate::error::{Error, Result};
use crate::euler::{compose_euler, dyadic_polygonal, euler_epsilon};
use crate::flow::{LocalFlow, Schedule};
use crate::modulus::OmegaModulus;
use crate::space::{distance, State};
use crate::tolerances;

/// One measured instance of the re-chaining defect
/// `d(F(k tau, t0 + tau) F(tau, t0) u, F((k+1) tau, t0) u)`.
#[derive(Clone, Copy, Debug)]
pub struct DefectSample {
    pub tau: f64,
    pub k: u32,
    pub defect: f64,
    pub normalized: f64,
}

/// Ordinary least squares on log-log data.
#[derive(Clone, Debug)]
pub struct RateFit {
    pub log_x: Vec<f64>,
    pub log_y: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Row-by-row outcome of a bound verification sweep. `parameters` holds
/// the sweep variable (time, or schedule mesh), one entry per row.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub flow: String,
    pub parameters: Vec<f64>,
    pub measured: Vec<f64>,
    pub bounds: Vec<f64>,
    pub passes: Vec<bool>,
    pub coefficient: f64,
    pub exponent: f64,
    pub stability: f64,
}

impl ConvergenceReport {
    pub fn all_pass(&self) -> bool {
        self.passes.iter().all(|&p| p)
    }
}

/// The defect of re-chaining one step of length `tau` with one of length
/// `k tau`, against the single `(k+1) tau` step.
pub fn k_step_defect(
    flow: &dyn LocalFlow,
    tau: f64,
    k: u32,
    t0: f64,
    u: &State,
) -> Result<f64> {
    let first = flow.step(tau, t0, u)?;
    let chained = flow.step(k as f64 * tau, t0 + tau, &first)?;
    let direct = flow.step((k as f64 + 1.0) * tau, t0, u)?;
    distance(&chained, &direct)
}

/// Measures the re-chaining defect over `tau_grid` x `1..=k_max` x
/// `u_samples`, keeping the worst normalized defect per `(tau, k)` cell,
/// and fits a power law `C tau^alpha` that dominates every sample. Cells
/// whose combined step `(k+1) tau` leaves the admissible window are
/// skipped; an entirely zero defect series returns the zero modulus.
pub fn estimate_omega(
    flow: &dyn LocalFlow,
    u_samples: &[State],
    t0: f64,
    tau_grid: &[f64],
    k_max: u32,
) -> Result<(OmegaModulus, Vec<DefectSample>)> {
    if u_samples.is_empty() || tau_grid.is_empty() || k_max == 0 {
        return Err(Error::InvalidRange(
            "estimation needs samples, a tau grid and k_max >= 1".into(),
        ));
    }
    let mut samples = Vec::new();
    for &tau in tau_grid {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidRange(format!(
                "tau grid entries must be positive and finite, got {tau}"
            )));
        }
        for k in 1..=k_max {
            let span = (k as f64 + 1.0) * tau;
            if !tolerances::within_time(span, flow.delta())
                || !tolerances::within_time(t0 + span, flow.horizon())
            {
                continue;
            }
            let mut worst: f64 = 0.0;
            for u in u_samples {
                worst = worst.max(k_step_defect(flow, tau, k, t0, u)?);
            }
            samples.push(DefectSample {
                tau,
                k,
                defect: worst,
                normalized: worst / (k as f64 * tau),
            });
        }
    }
    if samples.is_empty() {
        return Err(Error::InvalidRange(
            "no (tau, k) cell fits inside the step window".into(),
        ));
    }
    // Aggregate to the worst normalized defect per tau before fitting, so
    // the regression sees one point per grid node.
    let mut per_tau: Vec<(f64, f64)> = Vec::new();
    for &tau in tau_grid {
        let worst = samples
            .iter()
            .filter(|s| s.tau == tau)
            .map(|s| s.normalized)
            .fold(0.0f64, f64::max);
        per_tau.push((tau, worst));
    }
    let xs: Vec<f64> = per_tau.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = per_tau.iter().map(|p| p.1).collect();
    if ys.iter().all(|&y| y == 0.0) {
        return Ok((OmegaModulus::zero(), samples));
    }
    let alpha = match rate_fit(&xs, &ys) {
        Ok(fit) if fit.slope.is_finite() && fit.slope > 0.0 => fit.slope,
        _ => 1.0,
    };
    let mut coeff: f64 = 0.0;
    for s in &samples {
        if s.normalized > 0.0 {
            coeff = coeff.max(s.normalized / s.tau.powf(alpha));
        }
    }
    let modulus = OmegaModulus::new(coeff * (1.0 + 1e-12), alpha)?;
    debug_assert!(samples
        .iter()
        .all(|s| s.normalized <= modulus.eval(s.tau).unwrap()));
    Ok((modulus, samples))
}

/// Worst growth ratio `d(F^eps(t) u, F^eps(t) w) / d(u, w)` over the
/// epsilon grid and the sample pairs.
pub fn estimate_stability(
    flow: &dyn LocalFlow,
    pairs: &[(State, State)],
    eps_grid: &[f64],
    t: f64,
    t0: f64,
) -> Result<f64> {
    if pairs.is_empty() || eps_grid.is_empty() {
        return Err(Error::InvalidRange(
            "estimation needs pairs and an eps grid".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    for (u, w) in pairs {
        let base = distance(u, w)?;
        if base == 0.0 {
            return Err(Error::DegeneratePair);
        }
        for &eps in eps_grid {
            let fu = euler_epsilon(flow, eps, t, t0, u)?;
            let fw = euler_epsilon(flow, eps, t, t0, w)?;
            worst = worst.max(distance(&fu, &fw)? / base);
        }
    }
    Ok(worst)
}

/// Measures the gap between dyadic levels `m` and `n` and checks it
/// against the certified refinement bound.
pub fn verify_dyadic_bound(
    flow: &dyn LocalFlow,
    omega: &OmegaModulus,
    l: f64,
    t: f64,
    t0: f64,
    u: &State,
    m: u32,
    n: u32,
) -> Result<(f64, f64, bool)> {
    if n <= m {
        return Err(Error::InvalidRange(format!(
            "refinement gap needs n > m, got ({m}, {n})"
        )));
    }
    let coarse = dyadic_polygonal(flow, m, t, t0, u)?;
    let fine = dyadic_polygonal(flow, n, t, t0, u)?;
    let measured = distance(&coarse, &fine)?;
    let bound = dyadic_gap_bound(omega, l, t, m, n)?;
    Ok((measured, bound, tolerances::within_bound(measured, bound)))
}

/// First-order agreement of the flow with its limit process: per grid
/// time, `(1/t) d(P~(t) u, F(t) u)` against the tangency bound, where
/// `P~` is the level `tol_m` dyadic polygonal and the certified tail of
/// that level is added to the right-hand side.
pub fn verify_tangency(
    flow: &dyn LocalFlow,
    omega: &OmegaModulus,
    l: f64,
    t_grid: &[f64],
    t0: f64,
    u: &State,
    tol_m: u32,
) -> Result<ConvergenceReport> {
    if t_grid.is_empty() {
        return Err(Error::InvalidRange("tangency needs a time grid".into()));
    }
    let mut report = ConvergenceReport {
        flow: u.space().name().to_string(),
        parameters: Vec::new(),
        measured: Vec::new(),
        bounds: Vec::new(),
        passes: Vec::new(),
        coefficient: omega.coefficient(),
        exponent: omega.exponent(),
        stability: l,
    };
    for &t in t_grid {
        if !(t > 0.0) || !tolerances::within_time(t, flow.delta()) {
            return Err(Error::InvalidRange(format!(
                "tangency times must lie in (0, delta], got {t}"
            )));
        }
        let process = dyadic_polygonal(flow, tol_m, t, t0, u)?;
        let one_step = flow.step(t, t0, u)?;
        let measured = distance(&process, &one_step)? / t;
        let bound = tangency_bound(omega, l, t)? + process_tail_bound(omega, l, t, tol_m)? / t;
        report.parameters.push(t);
        report.measured.push(measured);
        report.bounds.push(bound);
        report.passes.push(tolerances::within_bound(measured, bound));
    }
    Ok(report)
}

/// Polygonal composition error against the limit process: per schedule,
/// `d(F^E(t) u, P~(t) u)` against the mesh-modulus bound plus the dyadic
/// tail allowance of level `tol_m`.
pub fn verify_euler_error(
    flow: &dyn LocalFlow,
    omega: &OmegaModulus,
    l: f64,
    schedules: &[Schedule],
    t0: f64,
    u: &State,
    tol_m: u32,
) -> Result<ConvergenceReport> {
    if schedules.is_empty() {
        return Err(Error::InvalidRange("need at least one schedule".into()));
    }
    let mut report = ConvergenceReport {
        flow: u.space().name().to_string(),
        parameters: Vec::new(),
        measured: Vec::new(),
        bounds: Vec::new(),
        passes: Vec::new(),
        coefficient: omega.coefficient(),
        exponent: omega.exponent(),
        stability: l,
    };
    for schedule in schedules {
        let t = schedule.total();
        let mesh = schedule.mesh();
        let arc = compose_euler(flow, schedule, t0, u)?;
        let process = dyadic_polygonal(flow, tol_m, t, t0, u)?;
        let measured = distance(&arc, &process)?;
        let bound =
            euler_error_bound(omega, l, t, mesh)? + process_tail_bound(omega, l, t, tol_m)?;
        report.parameters.push(mesh);
        report.measured.push(measured);
        report.bounds.push(bound);
        report.passes.push(tolerances::within_bound(measured, bound));
    }
    Ok(report)
}

/// Least squares `log y = slope * log x + intercept`, excluding
/// nonpositive points. Needs three surviving points.
pub fn rate_fit(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidRange(format!(
            "mismatched series lengths {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let mut log_x = Vec::new();
    let mut log_y = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite() {
            log_x.push(x.ln());
            log_y.push(y.ln());
        }
    }
    let n = log_x.len();
    if n < 3 {
        return Err(Error::TooFewPoints { n });
    }
    let nf = n as f64;
    let mean_x = log_x.iter().sum::<f64>() / nf;
    let mean_y = log_y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = log_x[i] - mean_x;
        let dy = log_y[i] - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InvalidRange(
            "all x values coincide; slope is undefined".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = syy - slope * sxy;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        log_x,
        log_y,
        slope,
        intercept,
        r_squared,
    })
}
