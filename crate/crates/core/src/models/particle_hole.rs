//! The particle-hole model on a torus.
//!
//! Every site starts with an unfilled hole. Particles carry labels `(x, j)`
//! with `j < η(x)`. At time 0 each occupied site picks one of its particles
//! uniformly to settle there; all others walk. A walking particle that steps
//! onto an unfilled site settles and fills it; filled sites are transparent.
//! Walkers are exchangeable with unit rate, so the jump chain picks a
//! uniformly random walker at each event.

use rand::Rng;
use serde::Serialize;

use crate::error::{ArwError, Result};
use crate::instructions::JumpDistribution;
use crate::lattice::{Arena, BoundaryMode, Configuration, Site, Target};
use crate::rng::{self, domain};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Label {
    pub origin: Site,
    pub index: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ParticleStatus {
    Free,
    Settled(Site),
}

#[derive(Clone, Debug, Serialize)]
pub struct LabeledParticle {
    pub id: Label,
    pub position: Site,
    pub steps: u64,
    pub status: ParticleStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParticleHoleHorizon {
    MaxEvents(u64),
    /// Stop when no walker is left or no hole is left unfilled.
    AllSettledOrStuck,
}

#[derive(Clone, Debug, Serialize)]
pub struct ParticleHoleOutcome {
    pub particles: Vec<LabeledParticle>,
    /// Settling particle per site, in storage order (`None` = unfilled hole).
    pub settled_by: Vec<Option<usize>>,
    pub filled: usize,
    pub settled: usize,
    pub free: usize,
    pub events: u64,
    /// Number of times the settled/filled bijection was checked.
    pub bijection_checks: u64,
}

impl ParticleHoleOutcome {
    /// Fraction of sites whose hole is filled.
    pub fn filled_fraction(&self) -> f64 {
        self.filled as f64 / self.settled_by.len() as f64
    }
}

fn check_bijection(particles: &[LabeledParticle], settled_by: &[Option<usize>], arena: &Arena) -> Result<()> {
    let mut settled = 0;
    for (p, part) in particles.iter().enumerate() {
        if let ParticleStatus::Settled(at) = part.status {
            settled += 1;
            if arena.index(at).and_then(|i| settled_by[i]) != Some(p) {
                return Err(ArwError::InvalidParams(format!("settled particle {p} does not own its hole")));
            }
        }
    }
    let filled = settled_by.iter().filter(|s| s.is_some()).count();
    if filled != settled {
        return Err(ArwError::InvalidParams(format!("{settled} settled particles but {filled} filled holes")));
    }
    Ok(())
}

pub fn particle_hole_run(
    config: &Configuration,
    jumps: &JumpDistribution,
    seed: u64,
    horizon: ParticleHoleHorizon,
) -> Result<ParticleHoleOutcome> {
    let arena = config.arena();
    if arena.boundary() != BoundaryMode::Torus {
        return Err(ArwError::Arena("the particle-hole model runs on a torus".into()));
    }
    arena.check_range(jumps.range())?;
    let mut rng = rng::sequential_rng(seed, domain::PARTICLE_HOLE);
    let n = arena.storage_len();
    let sites: Vec<Site> = (0..n).map(|i| arena.site(i)).collect();
    let mut particles = Vec::new();
    let mut settled_by = vec![None; n];
    let mut free = Vec::new();
    for (i, &site) in sites.iter().enumerate() {
        let s = config.at(i);
        if s == crate::state::SiteState::Sleeping {
            return Err(ArwError::InvalidParams("initial states must hold active particles only".into()));
        }
        let k = s.particle_count();
        if k == 0 {
            continue;
        }
        let settler = rng.random_range(0..k);
        for j in 0..k {
            let id = particles.len();
            let status = if j == settler {
                settled_by[i] = Some(id);
                ParticleStatus::Settled(site)
            } else {
                free.push(id);
                ParticleStatus::Free
            };
            particles.push(LabeledParticle { id: Label { origin: site, index: j }, position: site, steps: 0, status });
        }
    }
    check_bijection(&particles, &settled_by, arena)?;
    let mut checks = 1;
    let mut settled = particles.len() - free.len();
    let mut unfilled = n - settled;
    let check_every = n.max(1) as u64;
    let max = match horizon {
        ParticleHoleHorizon::MaxEvents(m) => m,
        ParticleHoleHorizon::AllSettledOrStuck => u64::MAX,
    };
    let mut events = 0u64;
    while !free.is_empty() && unfilled > 0 && events < max {
        let k = rng.random_range(0..free.len());
        let p = free[k];
        let from = arena.index(particles[p].position).unwrap();
        let z = jumps.sample_with(rng.random::<f64>());
        let to = match arena.target(from, z) {
            Target::Index(t) => t,
            Target::Outside => unreachable!("torus targets wrap"),
        };
        particles[p].position = sites[to];
        particles[p].steps += 1;
        events += 1;
        if settled_by[to].is_none() {
            settled_by[to] = Some(p);
            particles[p].status = ParticleStatus::Settled(sites[to]);
            free.swap_remove(k);
            settled += 1;
            unfilled -= 1;
        }
        if events % check_every == 0 {
            check_bijection(&particles, &settled_by, arena)?;
            checks += 1;
        }
    }
    check_bijection(&particles, &settled_by, arena)?;
    checks += 1;
    Ok(ParticleHoleOutcome {
        filled: n - unfilled,
        settled,
        free: free.len(),
        particles,
        settled_by,
        events,
        bijection_checks: checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lone_particles_settle_at_time_zero() {
        let a = Arena::rect((0, 0), (9, 9), 0, BoundaryMode::Torus).unwrap();
        let c = Configuration::from_counts(a, &[1; 100]).unwrap();
        let out = particle_hole_run(&c, &JumpDistribution::symmetric_2d(), 1, ParticleHoleHorizon::AllSettledOrStuck)
            .unwrap();
        assert_eq!((out.free, out.settled, out.filled, out.events), (0, 100, 100, 0));
    }

    #[test]
    fn subcritical_density_settles_everyone() {
        let a = Arena::line(0, 99, 0, BoundaryMode::Torus).unwrap();
        let mut counts = vec![0; 100];
        counts[0] = 30;
        counts[50] = 20;
        let c = Configuration::from_counts(a, &counts).unwrap();
        let out = particle_hole_run(&c, &JumpDistribution::symmetric_1d(), 2, ParticleHoleHorizon::AllSettledOrStuck)
            .unwrap();
        assert_eq!(out.free, 0);
        assert_eq!(out.settled, 50);
        assert_eq!(out.filled, 50);
        assert!(out.bijection_checks >= 2);
    }

    #[test]
    fn supercritical_density_gets_stuck() {
        let a = Arena::line(0, 9, 0, BoundaryMode::Torus).unwrap();
        let c = Configuration::from_counts(a, &[3; 10]).unwrap();
        let out = particle_hole_run(&c, &JumpDistribution::symmetric_1d(), 3, ParticleHoleHorizon::AllSettledOrStuck)
            .unwrap();
        assert_eq!(out.filled, 10);
        assert_eq!(out.free, 20);
    }

    #[test]
    fn rejects_non_torus() {
        let a = Arena::line(0, 9, 1, BoundaryMode::Frozen).unwrap();
        let c = Configuration::empty(a);
        assert!(particle_hole_run(&c, &JumpDistribution::symmetric_1d(), 0, ParticleHoleHorizon::MaxEvents(1)).is_err());
    }
}
