//! Stochastic dynamics: the continuous-time chain, the particle-hole model
//! and the driven-dissipative loop.

pub mod ctmc;
pub mod particle_hole;
pub mod soc;

pub use ctmc::{ctmc_run, CtmcAction, CtmcEvent, CtmcHorizon, CtmcOutcome};
pub use particle_hole::{particle_hole_run, ParticleHoleHorizon, ParticleHoleOutcome};
pub use soc::{soc_run, SocParams, SocSample, SocTrace};
