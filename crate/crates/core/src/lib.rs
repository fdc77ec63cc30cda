//! Almost-sure reach-avoid winning regions for POMDPs.
//!
//! The crate computes winning regions of belief supports with an incremental
//! constraint-solving loop, checks them against an explicit belief-support
//! MDP, and turns them into shields that restrict an agent to safe actions.

pub mod analysis;
pub mod benchmarks;
pub mod bits;
pub mod encoding;
pub mod jani;
pub mod pomdp;
pub mod region;
pub mod sim;
pub mod smt;
pub mod synthesis;

pub use bits::StateSet;
pub use pomdp::{
    make_absorbing, validate, BeliefSupport, Diagnostic, LiftedSpecification, ModelError, Pomdp,
    PomdpBuilder, Prob, Specification, Transition,
};
pub use region::{Entry, InsertOutcome, RegionError, RegionSize, Shield, WinningRegionStore};
