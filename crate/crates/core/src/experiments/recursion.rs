//! Totally asymmetric walks in one dimension.
//!
//! Stabilizing `[-L, 0]` site by site from the left, the number of particles
//! passed from site `-L+i` to its right neighbour obeys
//! `N_{i+1} = max(N_i + η(-L+i) - Y_i, 0)`, with `Y_i = 1` when the last
//! particle at that site falls asleep. `N_L` particles enter the origin.

use serde::Serialize;

use crate::engine::{stabilize, Policy, StabilizationStatus};
use crate::error::{ArwError, Result};
use crate::instructions::{sample_initial, sleep_probability, InitialLaw, Instruction, InstructionField, JumpDistribution};
use crate::lattice::{Arena, BoundaryMode, Configuration, Site};
use crate::rng::{self, domain};
use crate::stats::{self, Estimate};

use super::map_replicates;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RecursionTrace {
    /// `N_0 ..= N_L`.
    pub n: Vec<u64>,
    pub y: Vec<u8>,
    pub eta: Vec<u64>,
}

impl RecursionTrace {
    /// Run the recursion on given inputs.
    pub fn from_inputs(eta: &[u64], y: &[u8]) -> Self {
        assert_eq!(eta.len(), y.len(), "one sleep indicator per site");
        let mut n = Vec::with_capacity(eta.len() + 1);
        n.push(0u64);
        for (&e, &yi) in eta.iter().zip(y) {
            let last = *n.last().unwrap();
            n.push((last + e).saturating_sub(yi as u64));
        }
        RecursionTrace { n, y: y.to_vec(), eta: eta.to_vec() }
    }

    pub fn n_l(&self) -> u64 {
        *self.n.last().unwrap()
    }

    /// The recursion identity holds entry-wise.
    pub fn is_consistent(&self) -> bool {
        self.n[0] == 0
            && (0..self.eta.len()).all(|i| self.n[i + 1] == (self.n[i] + self.eta[i]).saturating_sub(self.y[i] as u64))
    }
}

fn check_params(mu: f64, lambda: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(ArwError::InvalidParams(format!("density {mu} must be positive")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ArwError::InvalidParams(format!("sleep rate {lambda} must be positive and finite")));
    }
    Ok(())
}

/// One trace on `[-L, -1]`. Counts and sleep indicators are keyed by site,
/// so traces for different `L` with the same seed share their inputs.
pub fn recursion_trace(l: u32, mu: f64, lambda: f64, seed: u64) -> Result<RecursionTrace> {
    check_params(mu, lambda)?;
    let law = InitialLaw::Poisson(mu);
    let p = sleep_probability(lambda);
    let sites = (0..l).map(|i| Site::d1(i as i32 - l as i32));
    let (eta, y): (Vec<u64>, Vec<u8>) = sites
        .map(|s| {
            let u = rng::unit_f64(rng::hash_words(&[seed, domain::RECURSION_Y, s.packed()]));
            (law.sample_site(seed, s) as u64, (u < p) as u8)
        })
        .unzip();
    Ok(RecursionTrace::from_inputs(&eta, &y))
}

#[derive(Clone, Debug, Serialize)]
pub struct RecursionSummary {
    pub l: u32,
    pub mu: f64,
    pub lambda: f64,
    pub reps: u64,
    /// `N_L` per replicate.
    pub n_l: Vec<u64>,
    pub median: u64,
    pub mean: Estimate,
}

impl RecursionSummary {
    /// Fraction of replicates with `N_L >= threshold`.
    pub fn tail(&self, threshold: f64) -> f64 {
        self.n_l.iter().filter(|&&n| n as f64 >= threshold).count() as f64 / self.reps as f64
    }
}

pub fn directed_recursion(l: u32, mu: f64, lambda: f64, seed: u64, reps: u64) -> Result<RecursionSummary> {
    check_params(mu, lambda)?;
    let n_l: Vec<u64> = map_replicates(reps, |r| {
        recursion_trace(l, mu, lambda, rng::replicate_seed(seed, r)).map(|t| t.n_l())
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let xs: Vec<f64> = n_l.iter().map(|&n| n as f64).collect();
    Ok(RecursionSummary { l, mu, lambda, reps, median: stats::median(&n_l), mean: Estimate::from_samples(&xs), n_l })
}

#[derive(Clone, Debug, Serialize)]
pub struct RecursionComparison {
    pub engine_count: u64,
    pub recursion_count: u64,
    pub trace: RecursionTrace,
    pub equal: bool,
}

/// Sleep indicator of a site holding `k` particles exhausted with the field:
/// the instruction after the `(k-1)`-th jump decides.
fn sleep_indicator(field: &InstructionField, site: Site, k: u64, pad_seed: u64) -> u8 {
    if k == 0 {
        let u = rng::unit_f64(rng::hash_words(&[pad_seed, domain::RECURSION_Y, site.packed()]));
        return (u < sleep_probability(field.lambda())) as u8;
    }
    let mut jumps = 0;
    let mut j = 1;
    loop {
        let ins = field.instruction_at(site, j);
        j += 1;
        if jumps == k - 1 {
            return (ins == Instruction::Sleep) as u8;
        }
        if matches!(ins, Instruction::Jump(_)) {
            jumps += 1;
        }
    }
}

/// Stabilize `[-L, 0]` with the engine and replay the recursion with sleep
/// indicators read from the same field; the two counts must agree.
pub fn recursion_vs_engine(l: u32, law: &InitialLaw, lambda: f64, seed: u64, policy: &Policy) -> Result<RecursionComparison> {
    let field = InstructionField::new(seed, lambda, JumpDistribution::directed_1d())?;
    if field.is_jump_only() {
        return Err(ArwError::InvalidParams("the recursion needs a finite sleep rate".into()));
    }
    let li = l as i32;
    let arena = Arena::line(-li, 0, 1, BoundaryMode::Frozen)?;
    let config: Configuration = sample_initial(law, &arena, seed)?;
    let left_mass = |c: &Configuration| (-li..0).map(|x| c.get(Site::d1(x)).particle_count() as u64).sum::<u64>();
    let before = left_mass(&config);
    let eta: Vec<u64> = (-li..0).map(|x| config.get(Site::d1(x)).particle_count() as u64).collect();
    let cap = u64::MAX;
    let r = stabilize(config, &field, policy, cap)?;
    debug_assert_eq!(r.status, StabilizationStatus::Stable);
    let engine_count = before - left_mass(&r.final_config);

    let mut n = 0u64;
    let mut y = Vec::with_capacity(l as usize);
    for (i, &e) in eta.iter().enumerate() {
        let site = Site::d1(i as i32 - li);
        let yi = sleep_indicator(&field, site, n + e, seed);
        y.push(yi);
        n = (n + e).saturating_sub(yi as u64);
    }
    let trace = RecursionTrace::from_inputs(&eta, &y);
    let recursion_count = trace.n_l();
    Ok(RecursionComparison { engine_count, recursion_count, equal: engine_count == recursion_count, trace })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExcessReport {
    pub l: u32,
    pub mu: f64,
    pub reps: u64,
    /// `P(Σ_{[0,L]} η >= L + 2√L)`.
    pub p_excess: Estimate,
    /// Excess instances that were stabilized.
    pub stabilized: u64,
    /// Among those, how many had `m(0) >= √L` or `m(L) >= √L`.
    pub boundary_hits: u64,
    /// Instances where `m(0) + m(L)` fell short of the particles pushed out.
    pub pigeonhole_violations: u64,
}

/// Sample initial masses on `[0, L]`; stabilize up to `max_stabilize` of the
/// excess instances with the given jumps and sleep rate.
pub fn excess_statistic(
    l: u32,
    mu: f64,
    lambda: f64,
    jumps: &JumpDistribution,
    seed: u64,
    reps: u64,
    max_stabilize: u64,
) -> Result<ExcessReport> {
    if jumps.dim() != 1 || !jumps.is_nearest_neighbor() {
        return Err(ArwError::Jumps("the excess statistic needs nearest-neighbour jumps in one dimension".into()));
    }
    let arena = Arena::line(0, l as i32, 1, BoundaryMode::Frozen)?;
    let law = InitialLaw::Poisson(mu);
    law.validate()?;
    let threshold = l as f64 + 2.0 * (l as f64).sqrt();
    let root = (l as f64).sqrt();
    let (mut excess, mut stabilized, mut hits, mut violations) = (0u64, 0u64, 0u64, 0u64);
    for r in 0..reps {
        let s = rng::replicate_seed(seed, r);
        let mass: u64 = arena.window_sites().map(|x| law.sample_site(s, x) as u64).sum();
        if (mass as f64) < threshold {
            continue;
        }
        excess += 1;
        if stabilized >= max_stabilize {
            continue;
        }
        stabilized += 1;
        let field = InstructionField::new(s, lambda, jumps.clone())?;
        let config = sample_initial(&law, &arena, s)?;
        let res = stabilize(config, &field, &Policy::Fifo, u64::MAX)?;
        let m0 = res.odometer.get(Site::d1(0));
        let ml = res.odometer.get(Site::d1(l as i32));
        if m0 as f64 >= root || ml as f64 >= root {
            hits += 1;
        }
        let pushed_out = mass.saturating_sub(l as u64 + 1);
        let exits = res.final_config.total_particles() - res.final_config.window_particles();
        if exits < pushed_out || m0 + ml < exits {
            violations += 1;
        }
    }
    Ok(ExcessReport {
        l,
        mu,
        reps,
        p_excess: Estimate::proportion(excess, reps),
        stabilized,
        boundary_hits: hits,
        pigeonhole_violations: violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_trace() {
        let t = RecursionTrace::from_inputs(&[2, 0, 1], &[1, 1, 0]);
        assert_eq!(t.n, vec![0, 1, 0, 1]);
        assert!(t.is_consistent());
    }

    #[test]
    fn nested_windows_share_inputs() {
        let a = recursion_trace(8, 0.5, 1.0, 3).unwrap();
        let b = recursion_trace(16, 0.5, 1.0, 3).unwrap();
        assert_eq!(a.eta[..], b.eta[8..]);
        assert_eq!(a.y[..], b.y[8..]);
        assert!(b.n_l() >= a.n_l());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(directed_recursion(8, 0.0, 1.0, 0, 1).is_err());
        assert!(directed_recursion(8, 0.5, -1.0, 0, 1).is_err());
    }

    #[test]
    fn empty_matches() {
        let c = recursion_vs_engine(16, &InitialLaw::Bernoulli(0.0), 1.0, 2, &Policy::Sweep).unwrap();
        assert_eq!((c.engine_count, c.recursion_count), (0, 0));
    }

    #[test]
    fn engine_matches_recursion() {
        for seed in 0..20 {
            let c = recursion_vs_engine(64, &InitialLaw::Poisson(0.5), 1.0, seed, &Policy::Sweep).unwrap();
            assert!(c.equal, "seed {seed}: {} vs {}", c.engine_count, c.recursion_count);
            let c = recursion_vs_engine(64, &InitialLaw::Poisson(0.9), 0.5, seed, &Policy::Fifo).unwrap();
            assert!(c.equal, "seed {seed}: {} vs {}", c.engine_count, c.recursion_count);
        }
    }

    #[test]
    fn deterministic_excess_pushes_particles_out() {
        // L = 16: L + 2√L = 24 particles on 17 sites.
        let arena = Arena::line(0, 16, 1, BoundaryMode::Frozen).unwrap();
        let mut counts = vec![1u32; 17];
        counts[8] = 8;
        let config = Configuration::from_counts(arena, &counts).unwrap();
        let field = InstructionField::new(1, 1.0, JumpDistribution::symmetric_1d()).unwrap();
        let r = stabilize(config, &field, &Policy::Fifo, u64::MAX).unwrap();
        let exits = r.final_config.total_particles() - r.final_config.window_particles();
        assert!(exits >= 24 - 17);
        assert!(r.odometer.get(Site::d1(0)) + r.odometer.get(Site::d1(16)) >= exits);
    }

    #[test]
    fn small_density_rarely_has_excess() {
        let r = excess_statistic(400, 0.2, 1.0, &JumpDistribution::symmetric_1d(), 5, 2000, 0).unwrap();
        assert_eq!(r.p_excess.value, 0.0);
    }
}
