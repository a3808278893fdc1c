//! Local flows on complete metric spaces: polygonal composition, dyadic
//! limits, and certified convergence bounds.
//!
//! A local flow `F(tau, t0)` advances a state by a short time `tau` from
//! base time `t0`. Composing short steps along a schedule yields an Euler
//! polygonal arc; refining the step dyadically yields a limit process `P`.
//! When the flow's self-commutation defect is controlled by a power-law
//! modulus `omega(tau) = C tau^alpha`, the distance between arcs, the
//! limit, and single steps is controlled by closed-form bounds built from
//! the Osgood integral of `omega`.
//!
//! The crate provides:
//!
//! * the composition machinery ([`compose_euler`], [`euler_epsilon`],
//!   [`dyadic_polygonal`], [`dyadic_process`]),
//! * the bounds ([`bounds`]),
//! * five concrete flows ([`flows`]): a periodic heat stencil, a projected
//!   stop problem on a convex body, matrix operator splitting, a matrix
//!   resolvent step, and a scalar flow whose limit process exists but is
//!   not a semigroup,
//! * estimation and verification routines ([`analysis`]) that fit moduli
//!   and stability constants from samples and check every bound against
//!   measurements.

pub mod analysis;
pub mod bounds;
pub mod error;
pub mod euler;
pub mod flow;
pub mod flows;
pub mod modulus;
pub mod space;
pub mod tolerances;

pub use error::{Error, Result};
pub use euler::{
    compose_euler, dyadic_polygonal, dyadic_process, epsilon_schedule, euler_epsilon,
    DyadicOutcome, ProcessApprox,
};
pub use flow::{check_step_args, Certificate, LocalFlow, Schedule};
pub use modulus::{osgood_integral, OmegaModulus};
pub use space::{distance, Payload, SpaceId, State};
