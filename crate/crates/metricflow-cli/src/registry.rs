//! Bridges configs to constructed flows. Also owns the static
//! `list-flows` text.

use metricflow::flows::{
    unit_disk_demo, CounterexampleFlow, CounterexampleFlowConfig, HeatFlow, HeatFlowConfig,
    ResolventFlow, ResolventFlowConfig, SplitFlow,
};
use metricflow::{Certificate, LocalFlow, State};
use nalgebra::DMatrix;

use crate::config::{ExperimentConfig, FlowCfg, Suite};
use crate::Failure;

pub struct LoadedFlow {
    pub kind: &'static str,
    pub flow: Box<dyn LocalFlow + Send + Sync>,
    pub certificate: Option<Certificate>,
    pub omega_samples: Vec<State>,
    pub stability_pairs: Vec<(State, State)>,
    pub probe: Option<State>,
    pub bump: Option<CounterexampleFlow>,
}

fn square_matrix(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, Failure> {
    let n = rows.len();
    if n == 0 {
        return Err(Failure::config(format!("flow.{name} must not be empty")));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Failure::config(format!(
                "flow.{name}[{i}] has {} entries, expected {n} (square matrix)",
                row.len()
            )));
        }
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(n, n, &flat))
}

/// Draws whatever states the suite needs, deterministically from the seed.
fn draw<F>(
    cfg: &ExperimentConfig,
    seed: u64,
    sample: F,
) -> Result<(Vec<State>, Vec<(State, State)>, Option<State>), Failure>
where
    F: Fn(u64, usize) -> metricflow::Result<Vec<State>>,
{
    let mut omega_samples = Vec::new();
    let mut stability_pairs = Vec::new();
    let mut probe = None;
    match cfg.suite {
        Suite::Certify => {
            omega_samples = sample(seed, cfg.params.samples).map_err(Failure::from)?;
            let raw =
                sample(seed.wrapping_add(1), 2 * cfg.params.stability_pairs).map_err(Failure::from)?;
            let mut it = raw.into_iter();
            while let (Some(a), Some(b)) = (it.next(), it.next()) {
                stability_pairs.push((a, b));
            }
        }
        Suite::Tangency | Suite::EulerError | Suite::Dyadic => {
            let mut states = sample(seed, 1).map_err(Failure::from)?;
            probe = Some(states.remove(0));
        }
        Suite::CounterexampleDemo => {}
    }
    Ok((omega_samples, stability_pairs, probe))
}

pub fn load(cfg: &ExperimentConfig, seed: u64) -> Result<LoadedFlow, Failure> {
    let kind = cfg.flow.kind();
    match &cfg.flow {
        FlowCfg::Heat {
            grid_size,
            domain_length,
            m_bound,
            delta,
            horizon,
        } => {
            let flow = HeatFlow::new(HeatFlowConfig {
                grid_size: *grid_size,
                domain_length: *domain_length,
                m_bound: *m_bound,
                delta: *delta,
                horizon: *horizon,
            })
            .map_err(|e| Failure::config(format!("flow.heat: {e}")))?;
            let certificate = flow.certificate();
            let (omega_samples, stability_pairs, probe) =
                draw(cfg, seed, |s, n| flow.sample_states(s, n))?;
            Ok(LoadedFlow {
                kind,
                flow: Box::new(flow),
                certificate: Some(certificate),
                omega_samples,
                stability_pairs,
                probe,
                bump: None,
            })
        }
        FlowCfg::Stop {
            tube_width,
            horizon,
        } => {
            let flow = unit_disk_demo(*tube_width, *horizon)
                .map_err(|e| Failure::config(format!("flow.stop: {e}")))?;
            let certificate = flow.certificate();
            let (omega_samples, stability_pairs, probe) =
                draw(cfg, seed, |s, n| flow.sample_states(s, n))?;
            Ok(LoadedFlow {
                kind,
                flow: Box::new(flow),
                certificate: Some(certificate),
                omega_samples,
                stability_pairs,
                probe,
                bump: None,
            })
        }
        FlowCfg::Split {
            a,
            b,
            sample_radius,
            delta,
            horizon,
        } => {
            let a = square_matrix("a", a)?;
            let b = square_matrix("b", b)?;
            if a.nrows() != b.nrows() {
                return Err(Failure::config(format!(
                    "flow.a is {0}x{0} but flow.b is {1}x{1}",
                    a.nrows(),
                    b.nrows()
                )));
            }
            let flow = SplitFlow::matrix_pair(a, b, *sample_radius, *delta, *horizon)
                .map_err(|e| Failure::config(format!("flow.split: {e}")))?;
            let certificate = flow.certificate();
            let (omega_samples, stability_pairs, probe) =
                draw(cfg, seed, |s, n| Ok(flow.sample_states(s, n)))?;
            Ok(LoadedFlow {
                kind,
                flow: Box::new(flow),
                certificate: Some(certificate),
                omega_samples,
                stability_pairs,
                probe,
                bump: None,
            })
        }
        FlowCfg::Resolvent {
            generator,
            m_bound,
            delta,
            horizon,
        } => {
            let generator = square_matrix("generator", generator)?;
            let flow = ResolventFlow::new(ResolventFlowConfig {
                generator,
                m_bound: *m_bound,
                delta: *delta,
                horizon: *horizon,
            })
            .map_err(|e| Failure::config(format!("flow.resolvent: {e}")))?;
            let certificate = flow.certificate();
            let (omega_samples, stability_pairs, probe) =
                draw(cfg, seed, |s, n| Ok(flow.sample_states(s, n)))?;
            Ok(LoadedFlow {
                kind,
                flow: Box::new(flow),
                certificate: Some(certificate),
                omega_samples,
                stability_pairs,
                probe,
                bump: None,
            })
        }
        FlowCfg::Counterexample { delta, horizon } => {
            let make = || {
                CounterexampleFlow::new(CounterexampleFlowConfig {
                    phi: None,
                    delta: *delta,
                    horizon: *horizon,
                })
                .map_err(|e| Failure::config(format!("flow.counterexample: {e}")))
            };
            Ok(LoadedFlow {
                kind,
                flow: Box::new(make()?),
                certificate: None,
                omega_samples: Vec::new(),
                stability_pairs: Vec::new(),
                probe: None,
                bump: Some(make()?),
            })
        }
    }
}

pub fn list_flows() -> String {
    let lines = [
        "heat            periodic grid heat stencil, sup metric; L = 1, omega(tau) = (14 M / 3) sqrt(tau)",
        "stop            vector field projected onto a convex body; L = exp(lip delta), omega(tau) = (lip + K) B tau",
        "split           alternating two-semigroup step; L = product growth bound, omega(tau) = L1 L2 C tau",
        "resolvent       implicit resolvent step of a contractive generator; L = 1, omega(tau) = 3 M tau",
        "counterexample  scalar bump flow; even dyadic splits compose exactly, uneven splits keep a defect",
    ];
    let mut out = String::new();
    for line in lines {
        out.push_str(line);
        out.push('\n');
    }
    out
}
