#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Primary-frequency dynamics of mixed generator/DER power systems: a
//! lossless network model, its common-frequency linearisation, a lumped
//! second-order reduction with an error bound, and DER droop/inertia design.

pub mod analysis;
pub mod bound;
pub mod design;
pub mod error;
pub mod fullorder;
pub mod linalg;
pub mod network;
pub mod reduced;
pub mod sim;
pub mod system;

pub use bound::{decay_envelope, evaluate_bound, perturbation_norm, BoundReport, DecayEnvelope};
pub use design::{design, DesignResult, DesignTargets, TransferFunction2, TransientTarget};
pub use error::{Error, Result};
pub use fullorder::{aggregate, build_full_model, Aggregates, FullOrderModel};
pub use network::{solve_equilibrium, AngleSolution};
pub use reduced::{build_auxiliary, build_reduced, optimize_tau_bar, AuxiliaryModel, ReducedModel, TauBarResult};
pub use sim::{StepMetrics, StepScenario, Trajectory};
pub use system::{Bus, BusId, BusKind, DerParams, GeneratorParams, Line, SystemDescription};
