//! Implicit Euler through the resolvent: one step solves
//! `(I - t A) x = u`, i.e. `F(t, t0) u = (I - tA)^{-1} u`.
//!
//! For a matrix whose resolvents are contractive this is the textbook
//! route to the semigroup `e^{tA}`; the flow is exact at the level of the
//! resolvent identities and only the composition carries discretization
//! error. States are admissible when `Au` and `A^2 u` stay inside a norm
//! ball, which is what makes the linear commutation modulus certified.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::linalg::LU;
use nalgebra::{DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flow::{check_step_args, Certificate, LocalFlow};
use crate::modulus::OmegaModulus;
use crate::space::{SpaceId, State};

#[derive(Clone, Debug)]
pub struct ResolventFlowConfig {
    pub generator: DMatrix<f64>,
    /// Norm cap for `Au` and `A^2 u` on admissible states.
    pub m_bound: f64,
    pub delta: f64,
    pub horizon: f64,
}

pub struct ResolventFlow {
    cfg: ResolventFlowConfig,
    space: SpaceId,
    stability: f64,
    a_squared: DMatrix<f64>,
    factorizations: Mutex<HashMap<u64, Arc<LU<f64, Dyn, Dyn>>>>,
}

fn validate_config(cfg: &ResolventFlowConfig) -> Result<()> {
    if !cfg.generator.is_square() || cfg.generator.nrows() == 0 {
        return Err(Error::InvalidConfig(format!(
            "generator must be square and nonempty, got {}x{}",
            cfg.generator.nrows(),
            cfg.generator.ncols()
        )));
    }
    if cfg.generator.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig(
            "generator entries must be finite".into(),
        ));
    }
    for (name, v) in [
        ("m_bound", cfg.m_bound),
        ("delta", cfg.delta),
        ("horizon", cfg.horizon),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "{name} must be finite and positive, got {v}"
            )));
        }
    }
    Ok(())
}

impl ResolventFlow {
    /// Builds the flow and checks contractivity of the scaled resolvents
    /// `lambda (lambda I - A)^{-1}` on a logarithmic grid of lambda. A
    /// generator that fails the check needs `unvalidated` and its growth
    /// factor instead.
    pub fn new(cfg: ResolventFlowConfig) -> Result<Self> {
        validate_config(&cfg)?;
        let n = cfg.generator.nrows();
        let eye = DMatrix::<f64>::identity(n, n);
        let lo = (1.0 / cfg.delta).ln();
        let hi = (1000.0 / cfg.delta).ln();
        for k in 0..20 {
            let lambda = (lo + (hi - lo) * k as f64 / 19.0).exp();
            let shifted = &eye * lambda - &cfg.generator;
            let inv = shifted.try_inverse().ok_or_else(|| {
                Error::SingularSystem(format!("lambda I - A singular at lambda = {lambda}"))
            })?;
            let top = (inv * lambda).svd(false, false).singular_values[0];
            if top > 1.0 + 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "scaled resolvent norm {top} at lambda = {lambda} breaks contractivity"
                )));
            }
        }
        Self::assemble(cfg, 1.0)
    }

    /// Skips the contractivity check; admissible only while step sizes
    /// satisfy `delta ||A|| <= 1/2`, which keeps every factor bounded by
    /// `e^{2 tau ||A||}` and the composition by `e^{2 horizon ||A||}`.
    pub fn unvalidated(cfg: ResolventFlowConfig) -> Result<Self> {
        validate_config(&cfg)?;
        let norm = cfg.generator.norm();
        if cfg.delta * norm > 0.5 {
            return Err(Error::InvalidConfig(format!(
                "delta * ||A|| = {} exceeds 1/2; shrink the step window",
                cfg.delta * norm
            )));
        }
        let stability = (2.0 * cfg.horizon * norm).exp();
        Self::assemble(cfg, stability)
    }

    fn assemble(cfg: ResolventFlowConfig, stability: f64) -> Result<Self> {
        let a_squared = &cfg.generator * &cfg.generator;
        let space = SpaceId::new(&format!("resolvent-{}d", cfg.generator.nrows()));
        Ok(ResolventFlow {
            cfg,
            space,
            stability,
            a_squared,
            factorizations: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ResolventFlowConfig {
        &self.cfg
    }

    pub fn space(&self) -> &SpaceId {
        &self.space
    }

    pub fn vector_state(&self, v: DVector<f64>) -> Result<State> {
        if v.len() != self.cfg.generator.nrows() {
            return Err(Error::SpaceMismatch(format!(
                "vector dimension {} vs flow dimension {}",
                v.len(),
                self.cfg.generator.nrows()
            )));
        }
        Ok(State::vector(self.space.clone(), v))
    }

    pub fn certificate(&self) -> Certificate {
        Certificate {
            stability: self.stability,
            modulus: OmegaModulus::new(3.0 * self.cfg.m_bound, 1.0)
                .expect("constants validated at construction"),
        }
    }

    fn factorization(&self, tau: f64) -> Result<Arc<LU<f64, Dyn, Dyn>>> {
        let key = tau.to_bits();
        if let Some(f) = self
            .factorizations
            .lock()
            .expect("factorization cache poisoned")
            .get(&key)
        {
            return Ok(f.clone());
        }
        let n = self.cfg.generator.nrows();
        let mut system = -self.cfg.generator.clone();
        for i in 0..n {
            system[(i, i)] += 1.0 / tau;
        }
        let f = Arc::new(system.lu());
        self.factorizations
            .lock()
            .expect("factorization cache poisoned")
            .insert(key, f.clone());
        Ok(f)
    }

    fn resolve(&self, tau: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        let lu = self.factorization(tau)?;
        lu.solve(&(v / tau)).ok_or_else(|| {
            Error::SingularSystem(format!("(1/t) I - A singular at t = {tau}"))
        })
    }

    /// One-norm condition estimate of the step system `(1/t) I - A`.
    pub fn condition_estimate(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidRange(format!(
                "condition estimate needs t > 0, got {t}"
            )));
        }
        let n = self.cfg.generator.nrows();
        let mut system = -self.cfg.generator.clone();
        for i in 0..n {
            system[(i, i)] += 1.0 / t;
        }
        let inv = system.clone().try_inverse().ok_or_else(|| {
            Error::SingularSystem(format!("(1/t) I - A singular at t = {t}"))
        })?;
        let one_norm = |m: &DMatrix<f64>| {
            (0..m.ncols())
                .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0f64, f64::max)
        };
        Ok(one_norm(&system) * one_norm(&inv))
    }

    /// Residuals of the two defining identities at `(t, s, u)`:
    /// first `F(t)u = u + t A F(t)u`, then
    /// `t F(t)u - s F(s)u = (t - s) F(t)F(s)u`.
    pub fn identity_check(&self, t: f64, s: f64, u: &State) -> Result<(f64, f64)> {
        for v in [t, s] {
            if !(v > 0.0) || v > self.cfg.delta * (1.0 + 1e-12) {
                return Err(Error::InvalidRange(format!(
                    "identity check needs times in (0, delta], got {v}"
                )));
            }
        }
        let v = u.as_vector()?;
        let ft = self.resolve(t, v)?;
        let fs = self.resolve(s, v)?;
        let r1 = (&ft - v - &self.cfg.generator * &ft * t).norm();
        let fts = self.resolve(t, &fs)?;
        let r2 = (&ft * t - &fs * s - fts * (t - s)).norm();
        Ok((r1, r2))
    }

    /// Random admissible states: direction from the unit cube, length
    /// scaled so `u`, `Au`, `A^2 u` all sit safely inside the norm cap.
    pub fn sample_states(&self, seed: u64, count: usize) -> Vec<State> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.cfg.generator.nrows();
        let m = self.cfg.m_bound;
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let v = DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(-1.0..1.0f64)));
            if v.norm() == 0.0 {
                continue;
            }
            let caps = [
                m / v.norm(),
                m / (&self.cfg.generator * &v).norm(),
                m / (&self.a_squared * &v).norm(),
            ];
            let cap = caps.iter().cloned().fold(f64::INFINITY, f64::min);
            let scale = 0.99 * cap.min(1e6) * rng.gen_range(0.1..1.0f64);
            out.push(State::vector(self.space.clone(), v * scale));
        }
        out
    }
}

impl LocalFlow for ResolventFlow {
    fn step(&self, tau: f64, t0: f64, u: &State) -> Result<State> {
        check_step_args(self.cfg.delta, self.cfg.horizon, tau, t0)?;
        if u.space() != &self.space {
            return Err(Error::SpaceMismatch(format!(
                "state from '{}' fed to flow on '{}'",
                u.space(),
                self.space
            )));
        }
        let v = u.as_vector()?;
        if tau == 0.0 {
            return Ok(u.clone());
        }
        Ok(State::vector(self.space.clone(), self.resolve(tau, v)?))
    }

    fn delta(&self) -> f64 {
        self.cfg.delta
    }

    fn horizon(&self) -> f64 {
        self.cfg.horizon
    }

    fn lip(&self) -> f64 {
        // State part: stability. Time part: the resolvent identity gives
        // d/dt F(t)u = A F(t)^2 u with norm at most stability^2 * m_bound.
        self.stability * (1.0 + self.stability * self.cfg.m_bound)
    }

    fn applicable(&self, _t0: f64, u: &State) -> bool {
        let v = match u.as_vector() {
            Ok(v) => v,
            Err(_) => return false,
        };
        if u.space() != &self.space || v.iter().any(|x| !x.is_finite()) {
            return false;
        }
        let cap = self.cfg.m_bound * (1.0 + 1e-6);
        (&self.cfg.generator * v).norm() <= cap && (&self.a_squared * v).norm() <= cap
    }
}

/// Plane rotation demo: `A = [[0, -1], [1, 0]]`, contractive resolvents,
/// exact orbit `e^{tA}` to compare against.
pub fn rotation_demo(delta: f64, horizon: f64, m_bound: f64) -> Result<ResolventFlow> {
    ResolventFlow::new(ResolventFlowConfig {
        generator: DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
        m_bound,
        delta,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::{dyadic_process, ProcessApprox};
    use crate::space::distance;
    use crate::tolerances;

    fn demo() -> ResolventFlow {
        rotation_demo(0.25, 2.0, 1.0).unwrap()
    }

    #[test]
    fn zero_step_is_identity() {
        let f = demo();
        let u = f.vector_state(DVector::from_vec(vec![0.6, -0.3])).unwrap();
        let out = f.step(0.0, 0.5, &u).unwrap();
        assert_eq!(distance(&out, &u).unwrap(), 0.0);
    }

    #[test]
    fn zero_generator_is_identity_at_any_step() {
        let f = ResolventFlow::new(ResolventFlowConfig {
            generator: DMatrix::zeros(3, 3),
            m_bound: 1.0,
            delta: 0.5,
            horizon: 2.0,
        })
        .unwrap();
        let u = f
            .vector_state(DVector::from_vec(vec![0.1, -0.2, 0.3]))
            .unwrap();
        let out = f.step(0.3, 0.0, &u).unwrap();
        let err = (out.as_vector().unwrap() - u.as_vector().unwrap()).norm();
        assert!(err < 1e-15);
    }

    #[test]
    fn nilpotent_resolvent_is_i_plus_ta() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let f = ResolventFlow::unvalidated(ResolventFlowConfig {
            generator: a.clone(),
            m_bound: 5.0,
            delta: 0.5,
            horizon: 2.0,
        })
        .unwrap();
        let u = f.vector_state(DVector::from_vec(vec![0.4, 0.8])).unwrap();
        for t in [0.05, 0.2, 0.5] {
            let out = f.step(t, 0.0, &u).unwrap();
            let v = u.as_vector().unwrap();
            let expect = v + &a * v * t;
            let err = (out.as_vector().unwrap() - expect).norm();
            assert!(err < 1e-14, "pencil inverse drifted by {err} at t = {t}");
        }
    }

    #[test]
    fn rotation_step_matches_the_closed_form() {
        // (I - tA)^{-1} for the rotation generator is
        // [[1, -t], [t, 1]] / (1 + t^2) applied... inverted: the solve
        // result is ((u1 - t u2), (t u1 + u2)) / (1 + t^2).
        let f = demo();
        let u = f.vector_state(DVector::from_vec(vec![0.7, 0.1])).unwrap();
        let t = 0.2;
        let out = f.step(t, 0.0, &u).unwrap();
        let v = out.as_vector().unwrap();
        let d = 1.0 + t * t;
        assert!((v[0] - (0.7 - t * 0.1) / d).abs() < 1e-15);
        assert!((v[1] - (t * 0.7 + 0.1) / d).abs() < 1e-15);
    }

    #[test]
    fn contractivity_check_rejects_expanding_generators() {
        let err = ResolventFlow::new(ResolventFlowConfig {
            generator: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            m_bound: 1.0,
            delta: 0.25,
            horizon: 2.0,
        });
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn unvalidated_requires_small_steps() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        let err = ResolventFlow::unvalidated(ResolventFlowConfig {
            generator: a,
            m_bound: 1.0,
            delta: 0.5,
            horizon: 2.0,
        });
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn identity_residuals_are_roundoff() {
        let f = demo();
        for (i, u) in f.sample_states(7, 20).into_iter().enumerate() {
            let t = 0.01 + 0.012 * (i as f64 % 20.0);
            let s = 0.25 - 0.011 * (i as f64 % 20.0);
            let (r1, r2) = f.identity_check(t, s, &u).unwrap();
            assert!(r1 <= tolerances::IDENTITY_RESIDUAL, "r1 = {r1}");
            assert!(r2 <= tolerances::IDENTITY_RESIDUAL, "r2 = {r2}");
        }
    }

    #[test]
    fn dyadic_level_and_error_against_the_rotation_oracle() {
        let f = demo();
        let u = f.vector_state(DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let cert = f.certificate();
        let approx = ProcessApprox::new(&f, cert.stability, Some(cert.modulus));
        let t = 1.0;
        let out = dyadic_process(&approx, t, 0.0, &u, 1e-3).unwrap();
        assert_eq!(out.level, 14);
        let oracle = DVector::from_vec(vec![t.cos(), t.sin()]);
        let err = (out.state.as_vector().unwrap() - oracle).norm();
        assert!(err <= 1e-4, "missed e^{{tA}} by {err}");
        assert!((err - 2.57e-5).abs() < 5e-6, "drifted from frozen error: {err}");
    }

    #[test]
    fn condition_estimate_is_modest_on_the_demo_window() {
        let f = demo();
        for t in [0.01, 0.1, 0.25] {
            let kappa = f.condition_estimate(t).unwrap();
            assert!(kappa >= 1.0);
            assert!(kappa < 10.0, "kappa = {kappa} at t = {t}");
        }
    }

    #[test]
    fn samples_are_admissible() {
        let f = demo();
        for u in f.sample_states(11, 32) {
            assert!(f.applicable(0.0, &u));
        }
    }

    #[test]
    fn oversized_states_are_not_applicable() {
        let f = demo();
        let u = f.vector_state(DVector::from_vec(vec![3.0, 0.0])).unwrap();
        assert!(!f.applicable(0.0, &u));
    }
}
