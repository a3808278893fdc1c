//! The stop problem: an ODE field projected back onto a convex body.
//!
//! One step moves along the field and re-projects:
//! `F(t, t0) u = P(u + t f(t0, u))`. The admissible step length
//! `delta = min(d / (2 sup||f||), T)` keeps two consecutive steps inside a
//! tube of width `d` around the body, where the projection's commutation
//! constant `K` is valid.

use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flow::{check_step_args, Certificate, LocalFlow};
use crate::flows::convex::ConvexBody;
use crate::modulus::OmegaModulus;
use crate::space::{SpaceId, State};
use crate::tolerances;

pub type VectorField = Arc<dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync>;

#[derive(Clone)]
pub struct StopFlowConfig {
    pub body: ConvexBody,
    pub field: VectorField,
    /// `sup ||f||` over the window and the body.
    pub f_bound: f64,
    /// Lipschitz constant of `f` in the state.
    pub f_lip: f64,
    /// Modulus of continuity of `f` in time; zero for autonomous fields.
    pub f_omega: OmegaModulus,
    /// Projection commutation constant of the body.
    pub k_commute: f64,
    /// Width of the tube around the body in which `k_commute` is valid.
    pub tube_width: f64,
    pub horizon: f64,
}

pub struct StopFlow {
    cfg: StopFlowConfig,
    space: SpaceId,
    delta: f64,
}

impl StopFlow {
    pub fn new(cfg: StopFlowConfig) -> Result<Self> {
        for (name, v) in [
            ("f_bound", cfg.f_bound),
            ("f_lip", cfg.f_lip),
            ("tube_width", cfg.tube_width),
            ("horizon", cfg.horizon),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if cfg.f_bound == 0.0 || cfg.tube_width == 0.0 || cfg.horizon == 0.0 {
            return Err(Error::InvalidConfig(
                "f_bound, tube_width and horizon must be positive".into(),
            ));
        }
        if !(cfg.k_commute >= 0.0) || !cfg.k_commute.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "k_commute must be finite and nonnegative, got {}",
                cfg.k_commute
            )));
        }
        let delta = (cfg.tube_width / (2.0 * cfg.f_bound)).min(cfg.horizon);
        let space = SpaceId::new(&format!("constrained-vectors-{}d", cfg.body.dim()));
        Ok(StopFlow { cfg, space, delta })
    }

    pub fn config(&self) -> &StopFlowConfig {
        &self.cfg
    }

    pub fn space(&self) -> &SpaceId {
        &self.space
    }

    pub fn vector_state(&self, v: DVector<f64>) -> Result<State> {
        if v.len() != self.cfg.body.dim() {
            return Err(Error::SpaceMismatch(format!(
                "vector dimension {} vs body dimension {}",
                v.len(),
                self.cfg.body.dim()
            )));
        }
        Ok(State::vector(self.space.clone(), v))
    }

    /// Certified constants. The commutation modulus combines the field's
    /// time modulus with the projection curvature term
    /// `(f_lip + K) sup||f|| tau`; when the exponents differ, the steeper
    /// term is relaxed to the flatter exponent over `(0, delta]` so a
    /// single power law dominates both.
    pub fn certificate(&self) -> Certificate {
        let linear_c = (self.cfg.f_lip + self.cfg.k_commute) * self.cfg.f_bound;
        let fo = self.cfg.f_omega;
        let modulus = if fo.coefficient() == 0.0 {
            OmegaModulus::new(linear_c, 1.0)
        } else if fo.exponent() == 1.0 {
            OmegaModulus::new(fo.coefficient() + linear_c, 1.0)
        } else {
            let alpha = fo.exponent().min(1.0);
            let c = fo.coefficient() * self.delta.powf(fo.exponent() - alpha)
                + linear_c * self.delta.powf(1.0 - alpha);
            OmegaModulus::new(c, alpha)
        }
        .expect("constants validated at construction");
        Certificate {
            stability: (self.cfg.f_lip * self.delta).exp(),
            modulus,
        }
    }

    /// Random states inside the body.
    pub fn sample_states(&self, seed: u64, count: usize) -> Result<Vec<State>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = self.cfg.body.dim();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let v = match &self.cfg.body {
                ConvexBody::Ball { center, radius } => {
                    let dir = DVector::from_iterator(
                        dim,
                        (0..dim).map(|_| rng.gen_range(-1.0..1.0f64)),
                    );
                    let norm = dir.norm();
                    let dir = if norm == 0.0 { dir } else { dir / norm };
                    let r = *radius * rng.gen_range(0.0..1.0f64).powf(1.0 / dim as f64);
                    center + dir * r
                }
                ConvexBody::Box { lower, upper } => DVector::from_iterator(
                    dim,
                    lower
                        .iter()
                        .zip(upper.iter())
                        .map(|(l, u)| rng.gen_range(*l..*u)),
                ),
                ConvexBody::Halfspace { .. } => {
                    let raw = DVector::from_iterator(
                        dim,
                        (0..dim).map(|_| rng.gen_range(-1.0..1.0f64)),
                    );
                    self.cfg.body.project(&raw)?
                }
            };
            out.push(State::vector(self.space.clone(), v));
        }
        Ok(out)
    }
}

impl LocalFlow for StopFlow {
    fn step(&self, tau: f64, t0: f64, u: &State) -> Result<State> {
        check_step_args(self.delta, self.cfg.horizon, tau, t0)?;
        if u.space() != &self.space {
            return Err(Error::SpaceMismatch(format!(
                "state from '{}' fed to flow on '{}'",
                u.space(),
                self.space
            )));
        }
        let v = u.as_vector()?;
        let projected = self.cfg.body.project(v)?;
        let dist = (v - &projected).norm();
        if dist > tolerances::BODY_TOL {
            return Err(Error::NotInBody { dist });
        }
        if tau == 0.0 {
            return Ok(u.clone());
        }
        let drift = (self.cfg.field)(t0, v);
        let moved = v + drift * tau;
        let result = self.cfg.body.project(&moved)?;
        Ok(State::vector(self.space.clone(), result))
    }

    fn delta(&self) -> f64 {
        self.delta
    }

    fn horizon(&self) -> f64 {
        self.cfg.horizon
    }

    fn lip(&self) -> f64 {
        // One step moves by at most f_bound per unit time and expands
        // state distances by a factor of at most exp(f_lip * tau).
        (self.cfg.f_lip * self.delta).exp().max(self.cfg.f_bound)
    }

    fn applicable(&self, _t0: f64, u: &State) -> bool {
        match u.as_vector() {
            Ok(v) => {
                u.space() == &self.space
                    && self
                        .cfg
                        .body
                        .contains(v, tolerances::BODY_TOL)
                        .unwrap_or(false)
            }
            Err(_) => false,
        }
    }
}

/// The rotating-outward unit-disk demo: `f(u) = (-u2, u1) + u` on the unit
/// disk, with certified constants from the closed-form field bounds.
pub fn unit_disk_demo(tube_width: f64, horizon: f64) -> Result<StopFlow> {
    let body = ConvexBody::ball(DVector::from_vec(vec![0.0, 0.0]), 1.0)?;
    let field: VectorField = Arc::new(|_t, u: &DVector<f64>| {
        DVector::from_vec(vec![-u[1] + u[0], u[0] + u[1]])
    });
    StopFlow::new(StopFlowConfig {
        body,
        field,
        // ||f(u)|| = sqrt(2) ||u|| <= sqrt(2) on the disk; Df is sqrt(2)
        // times a rotation, so f_lip = sqrt(2) as well.
        f_bound: std::f64::consts::SQRT_2,
        f_lip: std::f64::consts::SQRT_2,
        f_omega: OmegaModulus::zero(),
        k_commute: 1.0,
        tube_width,
        horizon,
    })
}
