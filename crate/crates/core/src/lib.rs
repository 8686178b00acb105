//! Continuous-time binary Galton–Watson forests, their piecewise-linear
//! exploration paths, exact local times, and the Monte Carlo machinery used
//! to check the discrete and generalized Ray–Knight identities.
//!
//! The crate is `no_std` and only needs `alloc`. Replicated experiments are
//! driven through [`diagnostics::ReplicaRunner`], so a std front end can plug
//! in a thread pool without this crate knowing about threads.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bijection;
pub mod diagnostics;
mod error;
pub mod paths;
pub mod rng;
pub mod samplers;
pub mod stats;
pub mod trees;

pub use error::{Error, Result};
pub use paths::{ExplorationPath, LocalTimeProfile, StepFunction};
pub use rng::{Lane, Substream};
pub use samplers::{FellerParams, FellerPath, RateParams, RenormParams};
pub use trees::{Forest, PopulationTrajectory, TreeNode};
