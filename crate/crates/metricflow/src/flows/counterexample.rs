//! A local flow with no commutation modulus: scalar multiplication by
//! `f(t) = exp(2^k phi(2^{-k} t))` with `k = floor(log2 t)`, for a bump
//! `phi <= 0` on [1, 2] vanishing to first order at both ends.
//!
//! By construction `f(2t) = f(t)^2`, so every equal-split composition is
//! exact and the k = 1 step defect vanishes identically. Yet `f` is not a
//! semigroup: `f(t)f(s) != f(t+s)` off the dyadic pattern, and the k = 2
//! normalized defects stay above a fixed floor along `tau -> 0`. Euler
//! polygonals over different breakpoint patterns therefore converge to
//! different limits, and no process extends this flow.
//!
//! The arithmetic is arranged so the scaling law holds bitwise where it
//! can: `k` comes straight out of the exponent bits, `2^{-k} t` is an
//! exact scaling, and for `k >= 0` the value is produced by repeated
//! squaring of `exp(phi(s))`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flow::{check_step_args, LocalFlow};
use crate::modulus::OmegaModulus;
use crate::space::{SpaceId, State};

pub type BumpFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CounterexampleFlowConfig {
    /// Bump profile on [1, 2]; `None` selects `-(s-1)^2 (s-2)^2`.
    pub phi: Option<BumpFn>,
    pub delta: f64,
    pub horizon: f64,
}

impl Default for CounterexampleFlowConfig {
    fn default() -> Self {
        CounterexampleFlowConfig {
            phi: None,
            delta: 4.0,
            horizon: 16.0,
        }
    }
}

pub struct CounterexampleFlow {
    cfg: CounterexampleFlowConfig,
    space: SpaceId,
}

/// Summary of the modulus obstruction on a grid: the k = 1 defects vanish
/// (so any modulus fitted from them is zero), while the k = 2 normalized
/// defects along a dyadic subsequence never drop below `k2_floor`.
#[derive(Clone, Copy, Debug)]
pub struct Eq2Report {
    pub modulus: OmegaModulus,
    pub k1: f64,
    pub k2: f64,
    pub k2_floor: f64,
}

fn default_phi(s: f64) -> f64 {
    let a = s - 1.0;
    let b = s - 2.0;
    -(a * a) * (b * b)
}

/// `floor(log2 t)` for positive finite `t`, read off the exponent bits so
/// powers of two land in the right branch exactly.
fn floor_log2(t: f64) -> i32 {
    debug_assert!(t > 0.0 && t.is_finite());
    let bits = t.to_bits();
    let exponent = ((bits >> 52) & 0x7ff) as i32;
    if exponent > 0 {
        exponent - 1023
    } else {
        let mantissa = bits & ((1u64 << 52) - 1);
        mantissa.ilog2() as i32 - 1074
    }
}

/// Exact multiplication by 2^e, chunked to stay inside the exponent range
/// of intermediate powers.
fn mul_pow2(mut x: f64, mut e: i32) -> f64 {
    while e > 0 {
        let c = e.min(1023);
        x *= 2.0f64.powi(c);
        e -= c;
    }
    while e < 0 {
        let c = e.max(-1022);
        x *= 2.0f64.powi(c);
        e -= c;
    }
    x
}

impl CounterexampleFlow {
    pub fn new(cfg: CounterexampleFlowConfig) -> Result<Self> {
        for (name, v) in [("delta", cfg.delta), ("horizon", cfg.horizon)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if cfg.delta > cfg.horizon {
            return Err(Error::InvalidConfig(format!(
                "delta {} exceeds horizon {}",
                cfg.delta, cfg.horizon
            )));
        }
        if let Some(phi) = &cfg.phi {
            for s in [1.0, 2.0] {
                if phi(s).abs() > 1e-12 {
                    return Err(Error::InvalidConfig(format!(
                        "phi must vanish at {s}, got {}",
                        phi(s)
                    )));
                }
            }
            let h = 1e-6;
            let d_left = (phi(1.0 + h) - phi(1.0)) / h;
            let d_right = (phi(2.0) - phi(2.0 - h)) / h;
            if d_left.abs() > 1e-5 || d_right.abs() > 1e-5 {
                return Err(Error::InvalidConfig(format!(
                    "phi must be flat at the ends, slopes {d_left} and {d_right}"
                )));
            }
            for i in 0..=1000 {
                let s = 1.0 + i as f64 / 1000.0;
                let v = phi(s);
                if !v.is_finite() || v > 1e-12 {
                    return Err(Error::InvalidConfig(format!(
                        "phi must be nonpositive and finite, got {v} at {s}"
                    )));
                }
            }
        }
        Ok(CounterexampleFlow {
            cfg,
            space: SpaceId::new("unit-interval"),
        })
    }

    pub fn config(&self) -> &CounterexampleFlowConfig {
        &self.cfg
    }

    pub fn space(&self) -> &SpaceId {
        &self.space
    }

    pub fn scalar_state(&self, x: f64) -> Result<State> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidRange(format!(
                "states live in [0, 1], got {x}"
            )));
        }
        Ok(State::scalar(self.space.clone(), x))
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidRange(format!(
                "f is defined for t >= 0, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(1.0);
        }
        let k = floor_log2(t);
        let s = mul_pow2(t, -k);
        let phi_s = match &self.cfg.phi {
            Some(phi) => phi(s),
            None => default_phi(s),
        };
        if k >= 0 {
            let mut x = phi_s.exp();
            for _ in 0..k {
                x = x * x;
            }
            Ok(x)
        } else {
            Ok(mul_pow2(phi_s, k).exp())
        }
    }

    /// `|f(t+s) - f(t) f(s)|`: zero exactly when the split is even, but
    /// bounded away from zero for uneven splits like (t, t/2).
    pub fn semigroup_defect(&self, t: f64, s: f64) -> Result<f64> {
        Ok((self.value(t + s)? - self.value(t)? * self.value(s)?).abs())
    }

    /// Measures the k = 1 and k = 2 step defects. k = 1 runs over
    /// `tau_grid`; k = 2 runs along `tau_j = subseq_start * 2^{-j}`,
    /// `j < subseq_len`. The returned modulus is fitted from the k = 1
    /// data alone and is zero in exact arithmetic, while `k2_floor` stays
    /// positive: the two are irreconcilable, which is the point.
    pub fn eq2_modulus_check(
        &self,
        tau_grid: &[f64],
        subseq_start: f64,
        subseq_len: usize,
    ) -> Result<Eq2Report> {
        if tau_grid.is_empty() || subseq_len == 0 {
            return Err(Error::InvalidRange(
                "need a nonempty grid and subsequence".into(),
            ));
        }
        let mut k1: f64 = 0.0;
        let mut c_fit: f64 = 0.0;
        for &tau in tau_grid {
            if !(tau > 0.0) || 2.0 * tau > self.cfg.delta * (1.0 + 1e-12) {
                return Err(Error::InvalidRange(format!(
                    "k = 1 defect needs 2 tau <= delta, got tau = {tau}"
                )));
            }
            let defect = (self.value(tau)? * self.value(tau)? - self.value(2.0 * tau)?).abs();
            let normalized = defect / tau;
            k1 = k1.max(normalized);
            c_fit = c_fit.max(normalized / tau);
        }
        let modulus = if k1 == 0.0 {
            OmegaModulus::zero()
        } else {
            OmegaModulus::new(c_fit, 1.0)?
        };
        let mut k2: f64 = 0.0;
        let mut k2_floor = f64::INFINITY;
        for j in 0..subseq_len {
            let tau = mul_pow2(subseq_start, -(j as i32));
            if 3.0 * tau > self.cfg.delta * (1.0 + 1e-12) {
                return Err(Error::InvalidRange(format!(
                    "k = 2 defect needs 3 tau <= delta, got tau = {tau}"
                )));
            }
            let defect =
                (self.value(2.0 * tau)? * self.value(tau)? - self.value(3.0 * tau)?).abs();
            let normalized = defect / (2.0 * tau);
            k2 = k2.max(normalized);
            k2_floor = k2_floor.min(normalized);
        }
        Ok(Eq2Report {
            modulus,
            k1,
            k2,
            k2_floor,
        })
    }
}

impl LocalFlow for CounterexampleFlow {
    fn step(&self, tau: f64, t0: f64, u: &State) -> Result<State> {
        check_step_args(self.cfg.delta, self.cfg.horizon, tau, t0)?;
        if u.space() != &self.space {
            return Err(Error::SpaceMismatch(format!(
                "state from '{}' fed to flow on '{}'",
                u.space(),
                self.space
            )));
        }
        let x = u.as_scalar()?;
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::NotInBody {
                dist: if x < 0.0 { -x } else { x - 1.0 },
            });
        }
        if tau == 0.0 {
            return Ok(u.clone());
        }
        Ok(State::scalar(self.space.clone(), self.value(tau)? * x))
    }

    fn delta(&self) -> f64 {
        self.cfg.delta
    }

    fn horizon(&self) -> f64 {
        self.cfg.horizon
    }

    fn lip(&self) -> f64 {
        // |f| <= 1 handles the state direction; |f'| = |f phi'(s)| is
        // bounded by sup|phi'| < 1 uniformly in the dyadic level.
        1.0
    }

    fn applicable(&self, _t0: f64, u: &State) -> bool {
        match u.as_scalar() {
            Ok(x) => u.space() == &self.space && (0.0..=1.0).contains(&x),
            Err(_) => false,
        }
    }
}
