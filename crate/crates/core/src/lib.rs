//! Activated random walks on `Z^d`.
//!
//! The crate is organised bottom-up:
//!
//! - [`state`] and [`lattice`]: site states `0 < ρ < 1 < 2 < …`, finite
//!   arenas and configurations.
//! - [`instructions`]: the seed-keyed field of sleep and jump instructions
//!   and the initial particle laws.
//! - [`engine`]: legal and acceptable topplings, stabilization under
//!   interchangeable policies, and exact property checks.
//! - [`models`]: the continuous-time chain, the particle-hole model and the
//!   driven-dissipative loop.
//! - [`experiments`]: fixation and activity statistics built on the above.

pub mod engine;
pub mod error;
pub mod experiments;
pub mod instructions;
pub mod lattice;
pub mod models;
pub mod rng;
pub mod state;
pub mod stats;

pub use engine::{stabilize, stabilize_acceptable, Engine, Odometer, Policy, StabilizationResult, StabilizationStatus, ToppleMode};
pub use error::{ArwError, Result};
pub use instructions::{sample_initial, InitialLaw, Instruction, InstructionField, JumpDistribution};
pub use lattice::{Arena, BoundaryMode, Configuration, Offset, Site};
pub use state::SiteState;
