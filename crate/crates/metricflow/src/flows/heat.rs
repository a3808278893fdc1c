//! Explicit heat stencil on a periodic grid.
//!
//! One step of length `t` replaces `u` by the three-point average
//! `u(x - 2 sqrt t)/4 + u(x)/2 + u(x + 2 sqrt t)/4`, equivalently
//! `u + t * D2_{2 sqrt t} u`. Off-grid sample points are evaluated by
//! periodic linear interpolation, which keeps every output value inside the
//! convex hull of the input values and makes the step non-expansive in the
//! sup norm. The commutation defect of the step obeys a square-root
//! modulus `omega(t) = (14/3) M sqrt t` on profiles whose second
//! derivative is bounded by `M` and `M`-Lipschitz.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flow::{check_step_args, Certificate, LocalFlow};
use crate::modulus::OmegaModulus;
use crate::space::{SpaceId, State};

#[derive(Clone, Debug)]
pub struct HeatFlowConfig {
    pub grid_size: usize,
    pub domain_length: f64,
    /// Class bound: admissible initial profiles have `max(||u''||, Lip(u''))`
    /// at most this.
    pub m_bound: f64,
    pub delta: f64,
    pub horizon: f64,
}

pub struct HeatFlow {
    cfg: HeatFlowConfig,
    space: SpaceId,
    h: f64,
}

/// Linear interpolation of periodic nodal values at a real-valued index.
fn sample_periodic(values: &[f64], idx: f64) -> f64 {
    let n = values.len() as i64;
    let j = idx.floor();
    let w = idx - j;
    let j = j as i64;
    let a = values[j.rem_euclid(n) as usize];
    let b = values[(j + 1).rem_euclid(n) as usize];
    (1.0 - w) * a + w * b
}

/// The periodic second difference `(u(x-s) - 2u(x) + u(x+s)) / s^2`,
/// sampled nodewise with linear interpolation off the grid.
pub fn second_difference(u: &State, sigma: f64) -> Result<State> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidRange(format!(
            "second difference needs sigma > 0, got {sigma}"
        )));
    }
    let (values, spacing) = u.as_grid()?;
    let s = sigma / spacing;
    let n = values.len();
    let out: Vec<f64> = (0..n)
        .map(|i| {
            let x = i as f64;
            let left = sample_periodic(values, x - s);
            let right = sample_periodic(values, x + s);
            (left - 2.0 * values[i] + right) / (sigma * sigma)
        })
        .collect();
    State::grid(u.space().clone(), out, spacing)
}

impl HeatFlow {
    pub fn new(cfg: HeatFlowConfig) -> Result<Self> {
        if cfg.grid_size < 8 {
            return Err(Error::InvalidConfig(format!(
                "grid size must be at least 8, got {}",
                cfg.grid_size
            )));
        }
        if !(cfg.domain_length > 0.0) || !cfg.domain_length.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "domain length must be positive and finite, got {}",
                cfg.domain_length
            )));
        }
        if !(cfg.m_bound > 0.0) || !cfg.m_bound.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "class bound must be positive and finite, got {}",
                cfg.m_bound
            )));
        }
        if !(cfg.delta > 0.0) || !(cfg.horizon >= cfg.delta) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < delta <= horizon, got delta = {}, horizon = {}",
                cfg.delta, cfg.horizon
            )));
        }
        let space = SpaceId::new(&format!(
            "periodic-grid-{}x{}",
            cfg.grid_size, cfg.domain_length
        ));
        let h = cfg.domain_length / cfg.grid_size as f64;
        Ok(HeatFlow { cfg, space, h })
    }

    pub fn config(&self) -> &HeatFlowConfig {
        &self.cfg
    }

    pub fn space(&self) -> &SpaceId {
        &self.space
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Node coordinates `x_i = i h`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.cfg.grid_size).map(|i| i as f64 * self.h).collect()
    }

    /// Wraps nodal values into a state of this flow's space.
    pub fn grid_state(&self, values: Vec<f64>) -> Result<State> {
        if values.len() != self.cfg.grid_size {
            return Err(Error::SpaceMismatch(format!(
                "expected {} nodes, got {}",
                self.cfg.grid_size,
                values.len()
            )));
        }
        State::grid(self.space.clone(), values, self.h)
    }

    pub fn certificate(&self) -> Certificate {
        Certificate {
            stability: 1.0,
            modulus: OmegaModulus::new(14.0 * self.cfg.m_bound / 3.0, 0.5)
                .expect("constants validated at construction"),
        }
    }

    /// Random profiles in the certified class: the second derivative is an
    /// asymmetric triangle wave (continuous, piecewise linear, two kinks),
    /// integrated twice and scaled so `max(||u''||, Lip(u''))` is 90% of the
    /// class bound. The kinks keep `Lip(u'')` active, which is what makes
    /// the square-root modulus sharp.
    pub fn sample_states(&self, seed: u64, count: usize) -> Result<Vec<State>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.cfg.grid_size;
        let ld = self.cfg.domain_length;
        let h = self.h;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let x1 = rng.gen_range(0.1..0.4) * ld;
            let span = rng.gen_range(0.35..0.55) * ld;
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let amp = sign * rng.gen_range(0.5..1.0);
            let mut w: Vec<f64> = (0..n)
                .map(|i| {
                    let p = (i as f64 * h - x1).rem_euclid(ld);
                    if p <= span {
                        amp * (1.0 - 2.0 * p / span)
                    } else {
                        -amp * (1.0 - 2.0 * (p - span) / (ld - span))
                    }
                })
                .collect();
            let mean = w.iter().sum::<f64>() / n as f64;
            for v in &mut w {
                *v -= mean;
            }
            let first = cumtrapz_zero_mean(&w, h);
            let mut u = cumtrapz_zero_mean(&first, h);
            let sup = w.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let lip = (0..n)
                .map(|i| (w[(i + 1) % n] - w[i]).abs() / h)
                .fold(0.0, f64::max);
            let scale = 0.9 * self.cfg.m_bound / sup.max(lip);
            for v in &mut u {
                *v *= scale;
            }
            out.push(State::grid(self.space.clone(), u, h)?);
        }
        Ok(out)
    }
}

/// Trapezoid antiderivative with the mean removed, so that repeated
/// integration of a zero-mean periodic profile stays periodic.
fn cumtrapz_zero_mean(w: &[f64], h: f64) -> Vec<f64> {
    let n = w.len();
    let mut out = vec![0.0; n];
    for i in 1..n {
        out[i] = out[i - 1] + h * (w[i - 1] + w[i]) / 2.0;
    }
    let mean = out.iter().sum::<f64>() / n as f64;
    for v in &mut out {
        *v -= mean;
    }
    out
}

impl LocalFlow for HeatFlow {
    fn step(&self, tau: f64, t0: f64, u: &State) -> Result<State> {
        check_step_args(self.cfg.delta, self.cfg.horizon, tau, t0)?;
        if u.space() != &self.space {
            return Err(Error::SpaceMismatch(format!(
                "state from '{}' fed to flow on '{}'",
                u.space(),
                self.space
            )));
        }
        let (values, spacing) = u.as_grid()?;
        if values.len() != self.cfg.grid_size {
            return Err(Error::SpaceMismatch(format!(
                "expected {} nodes, got {}",
                self.cfg.grid_size,
                values.len()
            )));
        }
        if tau == 0.0 {
            return Ok(u.clone());
        }
        let sigma = 2.0 * tau.sqrt();
        let s = sigma / self.h;
        let n = values.len();
        let out: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64;
                let left = sample_periodic(values, x - s);
                let right = sample_periodic(values, x + s);
                0.25 * left + 0.5 * values[i] + 0.25 * right
            })
            .collect();
        State::grid(self.space.clone(), out, spacing)
    }

    fn delta(&self) -> f64 {
        self.cfg.delta
    }

    fn horizon(&self) -> f64 {
        self.cfg.horizon
    }

    fn lip(&self) -> f64 {
        // Non-expansive in the state; in time the step moves at the rate of
        // the discrete second difference, which the class bound controls.
        1.0 + 2.0 * self.cfg.m_bound
    }

    fn applicable(&self, _t0: f64, u: &State) -> bool {
        match u.as_grid() {
            Ok((values, _)) => {
                u.space() == &self.space
                    && values.len() == self.cfg.grid_size
                    && values.iter().all(|v| v.is_finite())
            }
            Err(_) => false,
        }
    }
}
