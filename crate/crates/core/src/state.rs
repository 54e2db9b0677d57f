//! Single-site state algebra on `{0, ρ, 1, 2, ...}`.
//!
//! `Empty` is no particle, `Sleeping` is exactly one passive particle and
//! `Active(n)` is `n >= 1` active particles. The derived ordering is
//! `Empty < Sleeping < Active(1) < Active(2) < ...`.
//!
//! The three site operations are: add a particle ([`SiteState::plus_one`]),
//! remove a particle ([`SiteState::minus_one`]) and apply a sleep
//! instruction ([`SiteState::sleep_apply`]). Removing from and sleeping on
//! an empty site are not acceptable.

use serde::{Deserialize, Serialize};

use crate::error::{ArwError, Result};

/// Largest active count a site may hold.
pub const MAX_ACTIVE: u32 = i32::MAX as u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub enum SiteState {
    #[default]
    Empty,
    Sleeping,
    Active(u32),
}

impl SiteState {
    /// `Active(n)` with the `n >= 1` check; `active(0)` is `Empty`.
    pub fn active(n: u32) -> Result<Self> {
        match n {
            0 => Ok(SiteState::Empty),
            n if n > MAX_ACTIVE => Err(ArwError::Overflow),
            n => Ok(SiteState::Active(n)),
        }
    }

    /// Add one particle. A sleeping particle is woken up by the arrival.
    #[inline]
    pub fn plus_one(self) -> Result<Self> {
        Ok(match self {
            SiteState::Empty => SiteState::Active(1),
            SiteState::Sleeping => SiteState::Active(2),
            SiteState::Active(n) if n >= MAX_ACTIVE => return Err(ArwError::Overflow),
            SiteState::Active(n) => SiteState::Active(n + 1),
        })
    }

    /// Remove one particle, whatever its state.
    #[inline]
    pub fn minus_one(self) -> Result<Self> {
        match self {
            SiteState::Empty => Err(ArwError::NotAcceptable),
            SiteState::Sleeping | SiteState::Active(1) => Ok(SiteState::Empty),
            SiteState::Active(n) => Ok(SiteState::Active(n - 1)),
        }
    }

    /// A lone active particle falls asleep; with company the attempt is void.
    #[inline]
    pub fn sleep_apply(self) -> Result<Self> {
        match self {
            SiteState::Empty => Err(ArwError::NotAcceptable),
            SiteState::Sleeping | SiteState::Active(1) => Ok(SiteState::Sleeping),
            other => Ok(other),
        }
    }

    /// Number of active particles.
    #[inline]
    pub fn active_count(self) -> u32 {
        match self {
            SiteState::Active(n) => n,
            _ => 0,
        }
    }

    /// Number of particles regardless of their state.
    #[inline]
    pub fn particle_count(self) -> u32 {
        match self {
            SiteState::Empty => 0,
            SiteState::Sleeping => 1,
            SiteState::Active(n) => n,
        }
    }

    #[inline]
    pub fn is_unstable(self) -> bool {
        matches!(self, SiteState::Active(_))
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self == SiteState::Empty
    }

    /// Short text form used in logs and CSV: `0`, `s`, or the active count.
    pub fn symbol(self) -> String {
        match self {
            SiteState::Empty => "0".into(),
            SiteState::Sleeping => "s".into(),
            SiteState::Active(n) => n.to_string(),
        }
    }
}
