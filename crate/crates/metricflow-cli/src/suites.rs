//! Executes one configured suite into result rows. Row evaluation may
//! fan out over the worker pool; assembly is ordered and deterministic.

use metricflow::analysis::{
    estimate_omega, estimate_stability, verify_dyadic_bound, verify_euler_error, verify_tangency,
};
use metricflow::tolerances::within_bound;
use metricflow::{epsilon_schedule, Certificate, Schedule};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Suite};
use crate::emit::{fmt_float, ResultRow};
use crate::registry::LoadedFlow;
use crate::Failure;

pub fn execute(
    cfg: &ExperimentConfig,
    loaded: &LoadedFlow,
    seed: u64,
) -> Result<Vec<ResultRow>, Failure> {
    match cfg.suite {
        Suite::Certify => certify(cfg, loaded, seed),
        Suite::Tangency => tangency(cfg, loaded, seed),
        Suite::EulerError => euler_error(cfg, loaded, seed),
        Suite::Dyadic => dyadic(cfg, loaded, seed),
        Suite::CounterexampleDemo => counterexample_demo(cfg, loaded, seed),
    }
}

fn row(
    cfg: &ExperimentConfig,
    loaded: &LoadedFlow,
    seed: u64,
    param_json: String,
    measured: f64,
    bound: f64,
    pass: bool,
) -> ResultRow {
    ResultRow {
        suite: cfg.suite.name().to_string(),
        flow: loaded.kind.to_string(),
        param_json,
        measured,
        bound,
        pass,
        runtime_ms: 0.0,
        seed,
    }
}

fn certificate(loaded: &LoadedFlow) -> Result<Certificate, Failure> {
    loaded.certificate.ok_or_else(|| {
        Failure::config(format!(
            "flow kind {} carries no certificate; only counterexample-demo runs without one",
            loaded.kind
        ))
    })
}

fn certify(
    cfg: &ExperimentConfig,
    loaded: &LoadedFlow,
    seed: u64,
) -> Result<Vec<ResultRow>, Failure> {
    let cert = certificate(loaded)?;
    let (fit, samples) = estimate_omega(
        &*loaded.flow,
        &loaded.omega_samples,
        0.0,
        &cfg.grids.tau,
        cfg.params.k_max,
    )?;
    let mut rows = Vec::with_capacity(samples.len() + 3);
    for s in &samples {
        let bound = cert.modulus.eval(s.tau)?;
        rows.push(row(
            cfg,
            loaded,
            seed,
            format!(
                "{{\"check\":\"domination\",\"tau\":{},\"k\":{}}}",
                fmt_float(s.tau),
                s.k
            ),
            s.normalized,
            bound,
            within_bound(s.normalized, bound),
        ));
    }
    if let Some([lo, hi]) = cfg.params.alpha_range {
        let alpha = fit.exponent();
        rows.push(row(
            cfg,
            loaded,
            seed,
            format!("{{\"check\":\"alpha-lower\",\"floor\":{}}}", fmt_float(lo)),
            lo,
            alpha,
            within_bound(lo, alpha),
        ));
        rows.push(row(
            cfg,
            loaded,
            seed,
            format!("{{\"check\":\"alpha-upper\",\"ceiling\":{}}}", fmt_float(hi)),
            alpha,
            hi,
            within_bound(alpha, hi),
        ));
    }
    let t = cfg.params.t.expect("validated");
    let l_hat = estimate_stability(&*loaded.flow, &loaded.stability_pairs, &cfg.grids.eps, t, 0.0)?;
    rows.push(row(
        cfg,
        loaded,
        seed,
        format!(
            "{{\"check\":\"stability\",\"t\":{},\"eps_count\":{},\"pairs\":{}}}",
            fmt_float(t),
            cfg.grids.eps.len(),
            loaded.stability_pairs.len()
        ),
        l_hat,
        cert.stability,
        within_bound(l_hat, cert.stability),
    ));
    Ok(rows)
}

fn tangency(
    cfg: &ExperimentConfig,
    loaded: &LoadedFlow,
    seed: u64,
) -> Result<Vec<ResultRow>, Failure> {
    let cert = certificate(loaded)?;
    let probe = loaded.probe.as_ref().expect("sampled at load");
    let report = verify_tangency(
        &*loaded.flow,
        &cert.modulus,
        cert.stability,
        &cfg.grids.tau,
        0.0,
        probe,
        cfg.params.tol_level,
    )?;
    let rows = report
        .parameters
        .iter()
        .zip(&report.measured)
        .zip(&report.bounds)
        .zip(&report.passes)
        .map(|(((t, measured), bound), pass)| {
            row(
                cfg,
                loaded,
                seed,
                format!(
                    "{{\"t\":{},\"tol_level\":{}}}",
                    fmt_float(*t),
                    cfg.params.tol_level
                ),
                *measured,
                *bound,
                *pass,
            )
        })
        .collect();
    Ok(rows)
}

fn euler_error(
    cfg: &ExperimentConfig,
    loaded: &LoadedFlow,
    seed: u64,
) -> Result<Vec<ResultRow>, Failure> {
    let cert = certificate(loaded)?;
    let probe = loaded.probe.as_ref().expect("sampled at load");
    let t = cfg.params.t.expect("validated");
    let mut schedules = Vec::new();
    for eps in &cfg.grids.eps {
        schedules.push(epsilon_schedule(*eps, t)?);
    }
    if let (Some(ratio), Some(steps)) = (cfg.params.ratio, cfg.params.steps) {
        schedules.push(Schedule::geometric(t, steps, ratio)?);
    }
    let report = verify_euler_error(
        &*loaded.flow,
        &cert.modulus,
        cert.stability,
        &schedules,
        0.0,
        probe,
        cfg.params.tol_level,
    )?;
    let rows = report
        .parameters
        .iter()
        .zip(&report.measured)
        .zip(&report.bounds)
        .zip(&report.passes)
        .map(|(((mesh, measured), bound), pass)| {
            row(
                cfg,
                loaded,
                seed,
                format!(
                    "{{\"t\":{},\"mesh\":{},\"tol_level\":{}}}",
                    fmt_float(t),
                    fmt_float(*mesh),
                    cfg.params.tol_level
                ),
                *measured,
                *bound,
                *pass,
            )
        })
        .collect();
    Ok(rows)
}

fn dyadic(
    cfg: &ExperimentConfig,
    loaded: &LoadedFlow,
    seed: u64,
) -> Result<Vec<ResultRow>, Failure> {
    let cert = certificate(loaded)?;
    let probe = loaded.probe.as_ref().expect("sampled at load");
    let t = cfg.params.t.expect("validated");
    let levels: Vec<(u32, u32)> = cfg
        .grids
        .m
        .iter()
        .flat_map(|m| cfg.grids.gaps.iter().map(move |g| (*m, m + g)))
        .collect();
    let rows: Result<Vec<ResultRow>, metricflow::Error> = levels
        .par_iter()
        .map(|(m, n)| {
            let (measured, bound, pass) = verify_dyadic_bound(
                &*loaded.flow,
                &cert.modulus,
                cert.stability,
                t,
                0.0,
                probe,
                *m,
                *n,
            )?;
            Ok(row(
                cfg,
                loaded,
                seed,
                format!("{{\"t\":{},\"m\":{m},\"n\":{n}}}", fmt_float(t)),
                measured,
                bound,
                pass,
            ))
        })
        .collect();
    Ok(rows?)
}

fn counterexample_demo(
    cfg: &ExperimentConfig,
    loaded: &LoadedFlow,
    seed: u64,
) -> Result<Vec<ResultRow>, Failure> {
    let bump = loaded.bump.as_ref().expect("loaded for this suite");
    let mut rows = Vec::with_capacity(cfg.params.pairs.len() + cfg.params.subseq_len);
    for [t, s] in &cfg.params.pairs {
        let defect = bump.semigroup_defect(*t, *s)?;
        rows.push(row(
            cfg,
            loaded,
            seed,
            format!(
                "{{\"check\":\"uneven-defect\",\"t\":{},\"s\":{}}}",
                fmt_float(*t),
                fmt_float(*s)
            ),
            defect,
            cfg.params.threshold,
            defect > cfg.params.threshold,
        ));
    }
    let mut tau = cfg.params.subseq_start;
    for j in 0..cfg.params.subseq_len {
        let report = bump.eq2_modulus_check(&[tau], tau, 1)?;
        rows.push(row(
            cfg,
            loaded,
            seed,
            format!(
                "{{\"check\":\"two-step-floor\",\"j\":{j},\"tau\":{}}}",
                fmt_float(tau)
            ),
            report.k2,
            cfg.params.floor_threshold,
            report.k2 > cfg.params.floor_threshold,
        ));
        tau *= 0.5;
    }
    Ok(rows)
}
