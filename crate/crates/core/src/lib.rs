//! Reachability quantities of finite Markov decision processes, computed by
//! recasting them as multichain long-run average-reward problems and solving
//! the resulting occupation-measure linear programs.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`]: the finite MDP, policies, and the chain a stationary policy induces.
//! * [`transform`]: absorbing-set and two-layer (visited-B) kernel constructions.
//! * [`lp`]: a sparse LP container and a two-phase primal simplex with duals.
//! * [`avg`]: the multichain gain LP, policy extraction, and independent oracles.
//! * [`reach`]: p-domains, reach-avoid, and reach under a hitting constraint.
//! * [`sim`]: seeded Monte Carlo rollouts used to certify returned policies.
//! * [`grid`]: wind-grid navigation models for experiments.

pub mod avg;
pub mod error;
pub mod fixtures;
pub mod fmt;
pub mod grid;
pub mod lp;
pub mod model;
pub mod reach;
pub mod sim;
pub mod transform;

pub use error::{Error, Result};
pub use model::{
    ActionId, Distribution, Model, ModelBuilder, StateId, StateSet, StationaryPolicy, TwoPhasePolicy, ValidationReport,
};

/// Version of this crate, recorded in CLI manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Probability tolerance used when validating kernels, distributions and policies.
pub const PROB_TOL: f64 = 1e-12;
