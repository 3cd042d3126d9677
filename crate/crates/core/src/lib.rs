//! Constrained network topology optimization.
//!
//! The crate models a layered transport network (core `T`, aggregation `H`
//! and access `J` nodes), decides whether a candidate topology satisfies the
//! distance, utilization and formation requirements, scores valid topologies
//! with a load-balancing objective, and searches the topology space with an
//! advantage actor-critic agent over a compressed five-step action space.
//! A graph-convolutional classifier can stand in for the verifier as the
//! reward source once it is accurate enough.
//!
//! Everything here is `no_std` + `alloc`. File formats, instance generation
//! and the command line live in the companion `netforge` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod a2c;
pub mod action_space;
pub mod baselines;
mod error;
pub mod evaluator;
pub mod neural;
pub mod paths;
pub mod rng;
pub mod topology;

pub use error::{Error, Result};
pub use evaluator::{verify, Reason, Verdict};
pub use topology::{Instance, Network, NodeKind, NodeRecord, Params, Topology, HOURS};
