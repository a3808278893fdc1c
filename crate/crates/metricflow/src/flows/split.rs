//! Operator splitting: one step composes two semigroup steps,
//! `F(t, t0) u = S1_t(S2_t(u))`.
//!
//! The composition is a local flow rather than a semigroup as soon as the
//! two pieces fail to commute; the commutation modulus measures by how
//! much, and the certified polygonal modulus picks up the factor
//! `lip1 * lip2` from interleaving the pieces.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flow::{check_step_args, Certificate, LocalFlow};
use crate::flows::matexp::expm;
use crate::modulus::OmegaModulus;
use crate::space::{distance, SpaceId, State};

pub type SemigroupMap = Arc<dyn Fn(f64, &DVector<f64>) -> Result<DVector<f64>> + Send + Sync>;

#[derive(Clone)]
pub struct SplitFlowConfig {
    pub sg1: SemigroupMap,
    pub sg2: SemigroupMap,
    pub lip1: f64,
    pub lip2: f64,
    pub commutation_omega: OmegaModulus,
    pub trotter_c: f64,
    pub dim: usize,
    /// Norm cap for admissible states. Trajectories grow under the split
    /// steps, so this is the grown radius, not the sampling radius.
    pub radius: f64,
    pub sample_radius: f64,
    pub delta: f64,
    pub horizon: f64,
}

pub struct SplitFlow {
    cfg: SplitFlowConfig,
    space: SpaceId,
}

impl SplitFlow {
    pub fn new(cfg: SplitFlowConfig) -> Result<Self> {
        for (name, v) in [
            ("lip1", cfg.lip1),
            ("lip2", cfg.lip2),
            ("trotter_c", cfg.trotter_c),
            ("radius", cfg.radius),
            ("sample_radius", cfg.sample_radius),
            ("delta", cfg.delta),
            ("horizon", cfg.horizon),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        if cfg.dim == 0 {
            return Err(Error::InvalidConfig("dim must be positive".into()));
        }
        if cfg.sample_radius > cfg.radius {
            return Err(Error::InvalidConfig(
                "sample_radius exceeds the admissible radius".into(),
            ));
        }
        let space = SpaceId::new(&format!("split-{}d", cfg.dim));
        Ok(SplitFlow { cfg, space })
    }

    /// Splitting of `d/dt u = (A + B) u` into the two matrix exponentials,
    /// with every certified constant computed from the matrices:
    /// Frobenius norms bound the per-step growth, the commutation modulus
    /// is `||[A,B]|| e^{(|A|+|B|) delta}` times the grown state radius,
    /// and the Trotter constant is `e^{(|A|+|B|) horizon}`.
    pub fn matrix_pair(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        sample_radius: f64,
        delta: f64,
        horizon: f64,
    ) -> Result<Self> {
        if !a.is_square() || a.nrows() != b.nrows() || !b.is_square() {
            return Err(Error::InvalidConfig(format!(
                "generators must be square and matching, got {}x{} and {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        let dim = a.nrows();
        let na = a.norm();
        let nb = b.norm();
        let comm = &a * &b - &b * &a;
        let comm_norm = comm.norm();
        let grown = ((na + nb) * horizon).exp();
        let radius = sample_radius * grown * (1.0 + 1e-6);
        let commutation_omega = if comm_norm == 0.0 {
            OmegaModulus::zero()
        } else {
            OmegaModulus::new(
                comm_norm * ((na + nb) * delta).exp() * sample_radius * grown,
                1.0,
            )?
        };
        let cfg = SplitFlowConfig {
            sg1: cached_exponential(a),
            sg2: cached_exponential(b),
            lip1: (na * delta).exp(),
            lip2: (nb * delta).exp(),
            commutation_omega,
            trotter_c: grown,
            dim,
            radius,
            sample_radius,
            delta,
            horizon,
        };
        SplitFlow::new(cfg)
    }

    pub fn config(&self) -> &SplitFlowConfig {
        &self.cfg
    }

    pub fn space(&self) -> &SpaceId {
        &self.space
    }

    pub fn vector_state(&self, v: DVector<f64>) -> Result<State> {
        if v.len() != self.cfg.dim {
            return Err(Error::SpaceMismatch(format!(
                "vector dimension {} vs flow dimension {}",
                v.len(),
                self.cfg.dim
            )));
        }
        Ok(State::vector(self.space.clone(), v))
    }

    pub fn certificate(&self) -> Certificate {
        let co = self.cfg.commutation_omega;
        let modulus = if co.coefficient() == 0.0 {
            OmegaModulus::zero()
        } else {
            OmegaModulus::new(
                self.cfg.lip1 * self.cfg.lip2 * co.coefficient(),
                co.exponent(),
            )
            .expect("constants validated at construction")
        };
        Certificate {
            stability: self.cfg.trotter_c,
            modulus,
        }
    }

    /// `d(S1_t S2_t u, S2_t S1_t u)`: how far the two orderings disagree.
    pub fn commutation_defect(&self, t: f64, u: &State) -> Result<f64> {
        if !(t > 0.0) || t > self.cfg.delta / 2.0 {
            return Err(Error::InvalidRange(format!(
                "defect time must lie in (0, delta/2], got {t}"
            )));
        }
        let v = u.as_vector()?;
        let forward = (self.cfg.sg1)(t, &(self.cfg.sg2)(t, v)?)?;
        let reversed = (self.cfg.sg2)(t, &(self.cfg.sg1)(t, v)?)?;
        Ok((forward - reversed).norm())
    }

    /// Max growth ratio of the n-fold product `[S1_{t/n} S2_{t/n}]^n` over
    /// pairs and n ≤ n_max. Must stay below `trotter_c`.
    pub fn trotter_stability_check(
        &self,
        t: f64,
        n_max: usize,
        pairs: &[(State, State)],
    ) -> Result<f64> {
        if n_max == 0 {
            return Err(Error::InvalidRange("n_max must be at least 1".into()));
        }
        if !(t > 0.0) || t > self.cfg.horizon {
            return Err(Error::InvalidRange(format!(
                "time must lie in (0, horizon], got {t}"
            )));
        }
        let mut worst: f64 = 0.0;
        for (u, w) in pairs {
            let base = distance(u, w)?;
            if base == 0.0 {
                return Err(Error::DegeneratePair);
            }
            for n in 1..=n_max {
                let tau = t / n as f64;
                if tau > self.cfg.delta {
                    continue;
                }
                let mut x = u.clone();
                let mut y = w.clone();
                for k in 0..n {
                    let at = k as f64 * tau;
                    x = self.step(tau, at, &x)?;
                    y = self.step(tau, at, &y)?;
                }
                worst = worst.max(distance(&x, &y)? / base);
            }
        }
        Ok(worst)
    }

    pub fn sample_states(&self, seed: u64, count: usize) -> Vec<State> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut v = DVector::from_iterator(
                self.cfg.dim,
                (0..self.cfg.dim).map(|_| rng.gen_range(-1.0..1.0f64)),
            );
            let norm = v.norm();
            if norm > 0.0 {
                v *= self.cfg.sample_radius * rng.gen_range(0.05..1.0f64) / norm;
            }
            out.push(State::vector(self.space.clone(), v));
        }
        out
    }
}

/// Wraps a generator matrix as `(t, u) -> e^{tA} u`, caching the dense
/// exponential per step size so dyadic sweeps factor each level once.
fn cached_exponential(gen: DMatrix<f64>) -> SemigroupMap {
    let cache: Mutex<HashMap<u64, Arc<DMatrix<f64>>>> = Mutex::new(HashMap::new());
    Arc::new(move |t: f64, u: &DVector<f64>| {
        let key = t.to_bits();
        let cached = cache.lock().expect("exponential cache poisoned").get(&key).cloned();
        let mat = match cached {
            Some(m) => m,
            None => {
                let m = Arc::new(expm(&(&gen * t))?);
                cache
                    .lock()
                    .expect("exponential cache poisoned")
                    .insert(key, m.clone());
                m
            }
        };
        Ok(&*mat * u)
    })
}

impl LocalFlow for SplitFlow {
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
        let inner = (self.cfg.sg2)(tau, v)?;
        let outer = (self.cfg.sg1)(tau, &inner)?;
        Ok(State::vector(self.space.clone(), outer))
    }

    fn delta(&self) -> f64 {
        self.cfg.delta
    }

    fn horizon(&self) -> f64 {
        self.cfg.horizon
    }

    fn lip(&self) -> f64 {
        self.cfg.trotter_c
    }

    fn applicable(&self, _t0: f64, u: &State) -> bool {
        match u.as_vector() {
            Ok(v) => {
                u.space() == &self.space
                    && v.iter().all(|x| x.is_finite())
                    && v.norm() <= self.cfg.radius
            }
            Err(_) => false,
        }
    }
}

/// The non-commuting 2x2 demo pair: A has a 1 above the diagonal, B below.
/// `[A, B] = diag(1, -1)`, so the commutation defect is genuinely first
/// order in each factor and the splitting converges at rate one.
pub fn shear_pair_demo(delta: f64, horizon: f64) -> Result<SplitFlow> {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
    SplitFlow::matrix_pair(a, b, 1.0, delta, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::{dyadic_process, euler_epsilon, ProcessApprox};

    fn demo() -> SplitFlow {
        shear_pair_demo(0.5, 1.0).unwrap()
    }

    #[test]
    fn zero_step_is_identity() {
        let f = demo();
        let u = f.vector_state(DVector::from_vec(vec![0.3, -0.7])).unwrap();
        let out = f.step(0.0, 0.2, &u).unwrap();
        assert_eq!(distance(&out, &u).unwrap(), 0.0);
    }

    #[test]
    fn commuting_diagonals_reproduce_the_sum_exactly() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 0.5]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![0.25, -2.0]));
        let f = SplitFlow::matrix_pair(a.clone(), b.clone(), 1.0, 0.5, 1.0).unwrap();
        let u = f.vector_state(DVector::from_vec(vec![0.8, -0.6])).unwrap();
        let t = 1.0;
        let out = euler_epsilon(&f, 0.3, t, 0.0, &u).unwrap();
        let oracle = expm(&((a + b) * t)).unwrap() * u.as_vector().unwrap();
        let err = (out.as_vector().unwrap() - oracle).norm();
        assert!(err < 1e-12, "split of commuting pair drifted: {err}");
        assert_eq!(f.certificate().modulus.coefficient(), 0.0);
    }

    #[test]
    fn commuting_defect_is_roundoff() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 0.5]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![0.25, -2.0]));
        let f = SplitFlow::matrix_pair(a, b, 1.0, 0.5, 1.0).unwrap();
        let u = f.vector_state(DVector::from_vec(vec![0.8, -0.6])).unwrap();
        for t in [0.05, 0.1, 0.25] {
            assert!(f.commutation_defect(t, &u).unwrap() < 1e-12);
        }
    }

    #[test]
    fn shear_defect_is_quadratic_and_certified() {
        let f = demo();
        let u = f.vector_state(DVector::from_vec(vec![0.8, -0.6])).unwrap();
        let omega = f.config().commutation_omega;
        let mut ratios = Vec::new();
        for t in [0.025, 0.05, 0.1, 0.2] {
            let d = f.commutation_defect(t, &u).unwrap();
            assert!(d > 0.0);
            assert!(d / t <= omega.eval(t).unwrap(), "defect {d} at {t} beats the modulus");
            ratios.push(d / (t * t));
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
        assert!(hi / lo < 1.3, "defect is not quadratic: {ratios:?}");
    }

    #[test]
    fn dyadic_process_matches_the_exponential_oracle() {
        let f = demo();
        let u = f.vector_state(DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let cert = f.certificate();
        let approx = ProcessApprox::new(&f, cert.stability, Some(cert.modulus));
        let out = dyadic_process(&approx, 1.0, 0.0, &u, 1e-2).unwrap();
        assert_eq!(out.level, 18);
        assert!(!out.empirical);
        let sum = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let oracle = expm(&sum).unwrap() * u.as_vector().unwrap();
        let err = (out.state.as_vector().unwrap() - oracle).norm();
        assert!(err < 1e-4, "dyadic split missed the oracle by {err}");
    }

    #[test]
    fn certificate_carries_the_interleaving_factor() {
        let f = demo();
        let cert = f.certificate();
        let co = f.config().commutation_omega.coefficient();
        assert_eq!(cert.modulus.exponent(), 1.0);
        assert!((cert.modulus.coefficient() - f.config().lip1 * f.config().lip2 * co).abs() < 1e-12);
        // A = B^T with unit Frobenius norm each: lip1 = lip2 = e^{delta},
        // growth e^{2 horizon}, commutator norm sqrt(2).
        let expect = (2.0f64 * 0.5).exp()
            * std::f64::consts::SQRT_2
            * (2.0f64 * 0.5).exp()
            * (2.0f64 * 1.0).exp();
        assert!(
            (cert.modulus.coefficient() - expect).abs() < 1e-9 * expect,
            "got {}, expected {expect}",
            cert.modulus.coefficient()
        );
    }

    #[test]
    fn trotter_products_stay_below_the_stability_constant() {
        let f = demo();
        let states = f.sample_states(41, 8);
        let pairs: Vec<_> = states
            .chunks(2)
            .map(|c| (c[0].clone(), c[1].clone()))
            .collect();
        let worst = f.trotter_stability_check(1.0, 12, &pairs).unwrap();
        assert!(worst <= f.config().trotter_c, "{worst}");
        assert!(worst > 1.0, "shear pair should genuinely expand");
    }

    #[test]
    fn contractive_diagonals_contract() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -0.5]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![-0.25, -2.0]));
        let f = SplitFlow::matrix_pair(a, b, 1.0, 0.5, 1.0).unwrap();
        let u = f.vector_state(DVector::from_vec(vec![0.8, -0.6])).unwrap();
        let w = f.vector_state(DVector::from_vec(vec![-0.1, 0.4])).unwrap();
        let worst = f
            .trotter_stability_check(1.0, 6, &[(u, w)])
            .unwrap();
        assert!(worst < 1.0);
    }

    #[test]
    fn degenerate_pair_is_rejected() {
        let f = demo();
        let u = f.vector_state(DVector::from_vec(vec![0.8, -0.6])).unwrap();
        assert!(matches!(
            f.trotter_stability_check(1.0, 4, &[(u.clone(), u)]),
            Err(Error::DegeneratePair)
        ));
    }

    #[test]
    fn defect_window_is_enforced() {
        let f = demo();
        let u = f.vector_state(DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!(f.commutation_defect(0.3, &u).is_err());
        assert!(f.commutation_defect(0.0, &u).is_err());
        assert!(f.commutation_defect(0.25, &u).is_ok());
    }
}
