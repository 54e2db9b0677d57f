//! The continuous-time chain: every active particle carries a clock of rate
//! `1 + λ`; when it rings the particle tries to sleep with probability
//! `λ/(1+λ)` and otherwise jumps by a `p`-distributed step. A sleep attempt
//! at a site with two or more particles has no effect.

use rand::Rng;
use serde::Serialize;

use crate::error::{ArwError, Result};
use crate::instructions::{sleep_probability, JumpDistribution};
use crate::lattice::{Configuration, Offset, Site, Target};
use crate::rng::{self, domain};
use crate::state::SiteState;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CtmcAction {
    Jump(Offset),
    SleepAttempt,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CtmcEvent {
    pub time: f64,
    pub site: Site,
    pub action: CtmcAction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtmcHorizon {
    /// Run until no window site holds an active particle.
    Absorption,
    MaxEvents(u64),
}

#[derive(Clone, Debug)]
pub struct CtmcOutcome {
    pub final_config: Configuration,
    pub events: Vec<CtmcEvent>,
    pub time: f64,
    /// The event budget ran out before absorption.
    pub non_absorbing: bool,
}

/// Simulate the chain on the window of `config`. Particles leaving the window
/// stop in the halo (or are dissipated, per the arena's boundary mode).
pub fn ctmc_run(
    config: Configuration,
    lambda: f64,
    jumps: &JumpDistribution,
    seed: u64,
    horizon: CtmcHorizon,
) -> Result<CtmcOutcome> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ArwError::InvalidParams(format!("sleep rate {lambda} must be positive and finite")));
    }
    let arena = config.arena().clone();
    arena.check_range(jumps.range())?;
    let mut rng = rng::sequential_rng(seed, domain::CTMC);
    let sleep_p = sleep_probability(lambda);
    let window = arena.window_indices();
    let mut cfg = config;
    let mut events = Vec::new();
    let mut time = 0.0;
    let max = match horizon {
        CtmcHorizon::Absorption => u64::MAX,
        CtmcHorizon::MaxEvents(n) => n,
    };
    loop {
        let active: u64 = window.iter().map(|&i| cfg.at(i).active_count() as u64).sum();
        if active == 0 {
            return Ok(CtmcOutcome { final_config: cfg, events, time, non_absorbing: false });
        }
        if events.len() as u64 >= max {
            return Ok(CtmcOutcome { final_config: cfg, events, time, non_absorbing: true });
        }
        let rate = (1.0 + lambda) * active as f64;
        time += -(1.0 - rng.random::<f64>()).ln() / rate;
        let mut pick = rng.random_range(0..active);
        let i = *window
            .iter()
            .find(|&&i| {
                let a = cfg.at(i).active_count() as u64;
                if pick < a {
                    true
                } else {
                    pick -= a;
                    false
                }
            })
            .expect("some site holds the chosen particle");
        let s = cfg.at(i);
        let action = if rng.random::<f64>() < sleep_p {
            if s == SiteState::Active(1) {
                cfg.put(i, SiteState::Sleeping);
            }
            CtmcAction::SleepAttempt
        } else {
            let z = jumps.sample_with(rng.random::<f64>());
            cfg.put(i, s.minus_one()?);
            match arena.target(i, z) {
                Target::Index(t) => {
                    let st = cfg.at(t).plus_one()?;
                    cfg.put(t, st);
                }
                Target::Outside => cfg.add_outside(1),
            }
            CtmcAction::Jump(z)
        };
        events.push(CtmcEvent { time, site: arena.site(i), action });
    }
}
