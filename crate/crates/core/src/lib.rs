//! Leader-driven sign-pattern formation for Laplacian multi-agent systems.
//!
//! The crate builds an integrator-augmented linear-quadratic problem whose
//! cost carries no reference state, solves for its minimal positive
//! semi-definite Riccati solution, certifies the closed-loop spectrum, and
//! synthesizes a distributed observer so that each leader can run the
//! feedback law from a local estimate. Everything here is pure numerics on
//! dense matrices; file formats and the command-line front end live in the
//! companion `patternlq-cli` crate.
//!
//! Vertices are 1-based in every public constructor that takes a vertex
//! list (leaders, induced subgraphs, edge literals) and 0-based in the
//! matrices.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x < y)` is used on purpose so that NaN fails every check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod centralized;
pub mod error;
pub mod graphs;
pub mod numerics;
pub mod observer;
pub mod patterns;
pub mod plant;
pub mod sim;

mod float;
#[cfg(test)]
mod test_support;

pub use centralized::{BasinVerdict, CentralizedDesign, SpectralCertificate};
pub use error::{Error, Result};
pub use graphs::Graph;
pub use observer::{ErrorSystem, MeasurementMap, ObserverDesign, ObserverOptions};
pub use patterns::{EdgePartition, PatternSpec};
pub use plant::{AssumptionReport, AugmentedSystem, Equilibrium, FeasibilityOutcome, PlantModel};
pub use sim::{SimOptions, TrajectoryRecord};
