//! Declarative experiment configs. One TOML file describes one
//! experiment: which flow, which suite, which grids, one seed, one
//! output file. Validation happens in two phases: `validate_shape`
//! before the flow exists, `validate_window` once the flow's admissible
//! step ceiling and horizon are known.

use metricflow::tolerances::{self, MAX_DYADIC_LEVEL};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub seed: u64,
    pub output: OutputCfg,
    pub flow: FlowCfg,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub params: Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Certify,
    Tangency,
    EulerError,
    Dyadic,
    CounterexampleDemo,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Certify => "certify",
            Suite::Tangency => "tangency",
            Suite::EulerError => "euler-error",
            Suite::Dyadic => "dyadic",
            Suite::CounterexampleDemo => "counterexample-demo",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputCfg {
    pub path: String,
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FlowCfg {
    Heat {
        grid_size: usize,
        domain_length: f64,
        m_bound: f64,
        delta: f64,
        horizon: f64,
    },
    Stop {
        tube_width: f64,
        horizon: f64,
    },
    Split {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        sample_radius: f64,
        delta: f64,
        horizon: f64,
    },
    Resolvent {
        generator: Vec<Vec<f64>>,
        m_bound: f64,
        delta: f64,
        horizon: f64,
    },
    Counterexample {
        #[serde(default = "counterexample_delta")]
        delta: f64,
        #[serde(default = "counterexample_horizon")]
        horizon: f64,
    },
}

fn counterexample_delta() -> f64 {
    4.0
}

fn counterexample_horizon() -> f64 {
    16.0
}

impl FlowCfg {
    pub fn kind(&self) -> &'static str {
        match self {
            FlowCfg::Heat { .. } => "heat",
            FlowCfg::Stop { .. } => "stop",
            FlowCfg::Split { .. } => "split",
            FlowCfg::Resolvent { .. } => "resolvent",
            FlowCfg::Counterexample { .. } => "counterexample",
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    #[serde(default)]
    pub tau: Vec<f64>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub m: Vec<u32>,
    #[serde(default)]
    pub gaps: Vec<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub t: Option<f64>,
    pub k_max: u32,
    pub samples: usize,
    pub stability_pairs: usize,
    pub alpha_range: Option<[f64; 2]>,
    pub tol_level: u32,
    pub ratio: Option<f64>,
    pub steps: Option<usize>,
    pub threshold: f64,
    pub floor_threshold: f64,
    pub pairs: Vec<[f64; 2]>,
    pub subseq_start: f64,
    pub subseq_len: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            t: None,
            k_max: 4,
            samples: 8,
            stability_pairs: 4,
            alpha_range: None,
            tol_level: 12,
            ratio: None,
            steps: None,
            threshold: 0.01,
            floor_threshold: 0.05,
            pairs: Vec::new(),
            subseq_start: 0.5,
            subseq_len: 13,
        }
    }
}

pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

fn check_positive_grid(name: &str, values: &[f64]) -> Result<(), String> {
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() || *v <= 0.0 {
            return Err(format!("{name}[{i}] = {v} must be positive and finite"));
        }
    }
    Ok(())
}

/// Everything checkable before the flow is constructed.
pub fn validate_shape(cfg: &ExperimentConfig) -> Result<(), String> {
    if cfg.output.path.is_empty() {
        return Err("output.path must not be empty".into());
    }
    check_positive_grid("grids.tau", &cfg.grids.tau)?;
    check_positive_grid("grids.eps", &cfg.grids.eps)?;
    for (i, g) in cfg.grids.gaps.iter().enumerate() {
        if *g == 0 {
            return Err(format!("grids.gaps[{i}] must be at least 1"));
        }
    }
    if let Some(t) = cfg.params.t {
        if !t.is_finite() || t <= 0.0 {
            return Err(format!("params.t = {t} must be positive and finite"));
        }
    }
    if cfg.params.tol_level > MAX_DYADIC_LEVEL {
        return Err(format!(
            "params.tol_level = {} exceeds the refinement cap {MAX_DYADIC_LEVEL}",
            cfg.params.tol_level
        ));
    }

    let is_demo = cfg.suite == Suite::CounterexampleDemo;
    let is_counterexample = matches!(cfg.flow, FlowCfg::Counterexample { .. });
    if is_demo != is_counterexample {
        return Err(
            "suite counterexample-demo pairs exclusively with flow kind counterexample".into(),
        );
    }

    match cfg.suite {
        Suite::Certify => {
            if cfg.grids.tau.is_empty() {
                return Err("suite certify needs a nonempty grids.tau".into());
            }
            if cfg.grids.eps.is_empty() {
                return Err("suite certify needs a nonempty grids.eps".into());
            }
            if cfg.params.t.is_none() {
                return Err("suite certify needs params.t (stability window)".into());
            }
            if cfg.params.k_max == 0 {
                return Err("params.k_max must be at least 1".into());
            }
            if cfg.params.samples == 0 {
                return Err("params.samples must be at least 1".into());
            }
            if cfg.params.stability_pairs == 0 {
                return Err("params.stability_pairs must be at least 1".into());
            }
            if let Some([lo, hi]) = cfg.params.alpha_range {
                if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
                    return Err(format!(
                        "params.alpha_range = [{lo}, {hi}] must satisfy 0 < lo < hi"
                    ));
                }
            }
        }
        Suite::Tangency => {
            if cfg.grids.tau.is_empty() {
                return Err("suite tangency needs a nonempty grids.tau (time grid)".into());
            }
        }
        Suite::EulerError => {
            if cfg.params.t.is_none() {
                return Err("suite euler-error needs params.t".into());
            }
            if cfg.grids.eps.is_empty() && cfg.params.ratio.is_none() {
                return Err("suite euler-error needs grids.eps or params.ratio/steps".into());
            }
            if cfg.params.ratio.is_some() != cfg.params.steps.is_some() {
                return Err("params.ratio and params.steps must be given together".into());
            }
            if let Some(r) = cfg.params.ratio {
                if !r.is_finite() || r <= 0.0 {
                    return Err(format!("params.ratio = {r} must be positive and finite"));
                }
            }
            if let Some(s) = cfg.params.steps {
                if s == 0 {
                    return Err("params.steps must be at least 1".into());
                }
            }
        }
        Suite::Dyadic => {
            if cfg.grids.m.is_empty() {
                return Err("suite dyadic needs a nonempty grids.m".into());
            }
            if cfg.grids.gaps.is_empty() {
                return Err("suite dyadic needs a nonempty grids.gaps".into());
            }
            if cfg.params.t.is_none() {
                return Err("suite dyadic needs params.t".into());
            }
            let deepest = cfg.grids.m.iter().max().unwrap()
                + cfg.grids.gaps.iter().max().unwrap();
            if deepest > MAX_DYADIC_LEVEL {
                return Err(format!(
                    "grids.m + grids.gaps reaches level {deepest}, past the cap {MAX_DYADIC_LEVEL}"
                ));
            }
        }
        Suite::CounterexampleDemo => {
            if cfg.params.pairs.is_empty() {
                return Err("suite counterexample-demo needs params.pairs".into());
            }
            for (i, [t, s]) in cfg.params.pairs.iter().enumerate() {
                if !t.is_finite() || *t <= 0.0 || !s.is_finite() || *s <= 0.0 {
                    return Err(format!(
                        "params.pairs[{i}] = [{t}, {s}] must be positive and finite"
                    ));
                }
            }
            if !cfg.params.subseq_start.is_finite() || cfg.params.subseq_start <= 0.0 {
                return Err(format!(
                    "params.subseq_start = {} must be positive and finite",
                    cfg.params.subseq_start
                ));
            }
            if cfg.params.subseq_len == 0 {
                return Err("params.subseq_len must be at least 1".into());
            }
            if !(cfg.params.threshold > 0.0) || !(cfg.params.floor_threshold > 0.0) {
                return Err("params.threshold and params.floor_threshold must be positive".into());
            }
        }
    }
    Ok(())
}

/// Grid checks against the constructed flow's step ceiling and horizon.
pub fn validate_window(cfg: &ExperimentConfig, delta: f64, horizon: f64) -> Result<(), String> {
    for (i, eps) in cfg.grids.eps.iter().enumerate() {
        if !tolerances::within_time(*eps, delta) {
            return Err(format!(
                "grids.eps[{i}] = {eps} exceeds the flow step ceiling delta = {delta}"
            ));
        }
    }
    match cfg.suite {
        Suite::Certify => {
            let window = (cfg.params.k_max + 1) as f64;
            for (i, tau) in cfg.grids.tau.iter().enumerate() {
                if !tolerances::within_time(window * tau, delta) {
                    return Err(format!(
                        "grids.tau[{i}] = {tau}: (params.k_max + 1) * tau = {} exceeds delta = {delta}",
                        window * tau
                    ));
                }
            }
            let t = cfg.params.t.unwrap();
            if !tolerances::within_time(t, delta) {
                return Err(format!(
                    "params.t = {t} must fit one step for the stability check, delta = {delta}"
                ));
            }
        }
        Suite::Tangency => {
            for (i, t) in cfg.grids.tau.iter().enumerate() {
                if !tolerances::within_time(*t, delta) {
                    return Err(format!(
                        "grids.tau[{i}] = {t} exceeds the flow step ceiling delta = {delta}"
                    ));
                }
            }
        }
        Suite::EulerError => {
            let t = cfg.params.t.unwrap();
            if !tolerances::within_time(t, horizon) {
                return Err(format!("params.t = {t} exceeds the horizon {horizon}"));
            }
            if let (Some(r), Some(n)) = (cfg.params.ratio, cfg.params.steps) {
                // Largest increment of the geometric schedule.
                let mesh = if (r - 1.0).abs() < 1e-12 {
                    t / n as f64
                } else {
                    let d0 = t * (r - 1.0) / (r.powi(n as i32) - 1.0);
                    d0 * r.powi(n as i32 - 1).max(1.0)
                };
                if !tolerances::within_time(mesh, delta) {
                    return Err(format!(
                        "params.ratio/steps give mesh {mesh}, past the step ceiling delta = {delta}"
                    ));
                }
            }
        }
        Suite::Dyadic => {
            let t = cfg.params.t.unwrap();
            if !tolerances::within_time(t, horizon) {
                return Err(format!("params.t = {t} exceeds the horizon {horizon}"));
            }
            for (i, m) in cfg.grids.m.iter().enumerate() {
                let coarse = t / f64::from(1u32 << (*m).min(31));
                if !tolerances::within_time(coarse, delta) {
                    return Err(format!(
                        "grids.m[{i}] = {m}: coarse step t / 2^m = {coarse} exceeds delta = {delta}"
                    ));
                }
            }
        }
        Suite::CounterexampleDemo => {
            if !tolerances::within_time(3.0 * cfg.params.subseq_start, delta) {
                return Err(format!(
                    "params.subseq_start = {}: the two-step window 3 * tau must fit delta = {delta}",
                    cfg.params.subseq_start
                ));
            }
        }
    }
    if let Some(t) = cfg.params.t {
        if !tolerances::within_time(t, horizon) {
            return Err(format!("params.t = {t} exceeds the horizon {horizon}"));
        }
    }
    Ok(())
}
