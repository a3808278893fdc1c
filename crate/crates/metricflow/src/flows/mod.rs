//! Concrete flows.

pub mod convex;
pub mod counterexample;
pub mod heat;
pub mod matexp;
pub mod resolvent;
pub mod split;
pub mod stop;

pub use convex::{projection_commutation_defect, ConvexBody};
pub use counterexample::{BumpFn, CounterexampleFlow, CounterexampleFlowConfig, Eq2Report};
pub use heat::{second_difference, HeatFlow, HeatFlowConfig};
pub use matexp::expm;
pub use resolvent::{rotation_demo, ResolventFlow, ResolventFlowConfig};
pub use split::{shear_pair_demo, SemigroupMap, SplitFlow, SplitFlowConfig};
pub use stop::{unit_disk_demo, StopFlow, StopFlowConfig, VectorField};
