//! Bisection for the critical density using finite windows.
//!
//! At a given `μ` the origin odometer is computed for every window size in
//! the protocol, with `(η, field)` coupled across sizes and across `μ` by
//! the replicate seed. The point is `Fixating` when the medians at the two
//! largest sizes coincide, `Active` when they differ and the median at the
//! largest size `L` exceeds `√L`, and `Undecided` otherwise.

use serde::Serialize;

use crate::engine::harness::{odometer_profile, WindowShape};
use crate::error::{ArwError, Result};
use crate::instructions::{InitialLaw, InstructionField, JumpDistribution};
use crate::rng;
use crate::stats;

use super::map_replicates;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Active,
    Fixating,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseProtocol {
    /// Window sizes, strictly increasing, at least two.
    pub l_list: Vec<i32>,
    /// Replicates per probe; odd so the median is a sample value.
    pub reps: u64,
    /// Topplings allowed per stabilization; `None` uses the engine default.
    pub cap: Option<u64>,
    /// Stop once the bracket is at most this wide.
    pub tolerance: f64,
    /// Initial upper end of the bracket.
    pub mu_hi: f64,
    /// Repeats of an undecided probe, each doubling `reps`.
    pub max_retries: u32,
}

impl PhaseProtocol {
    /// Defaults for a jump law and sleep rate.
    pub fn default_for(jumps: &JumpDistribution, lambda: f64) -> Self {
        let mu_hi = if lambda.is_finite() { 1.0 } else { 1.5 };
        if jumps.is_directed_right() {
            PhaseProtocol { l_list: vec![2048, 8192], reps: 31, cap: Some(1 << 36), tolerance: 0.08, mu_hi, max_retries: 1 }
        } else if jumps.dim() == 1 {
            PhaseProtocol { l_list: vec![64, 128], reps: 21, cap: Some(1 << 32), tolerance: 0.08, mu_hi, max_retries: 1 }
        } else {
            PhaseProtocol { l_list: vec![8, 16], reps: 11, cap: Some(1 << 32), tolerance: 0.1, mu_hi, max_retries: 1 }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_list.len() < 2 || self.l_list[0] < 1 || self.l_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ArwError::InvalidParams("need at least two strictly increasing window sizes".into()));
        }
        if self.reps == 0 || self.reps % 2 == 0 {
            return Err(ArwError::InvalidParams("reps must be odd".into()));
        }
        if !(self.tolerance > 0.0) || !(self.mu_hi > 0.0) || !self.mu_hi.is_finite() {
            return Err(ArwError::InvalidParams("tolerance and mu_hi must be positive".into()));
        }
        if self.cap == Some(0) {
            return Err(ArwError::InvalidParams("cap must be positive".into()));
        }
        Ok(())
    }
}

/// One classified density.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Probe {
    pub mu: f64,
    pub verdict: Verdict,
    pub reps: u64,
    /// Median origin odometer per window size.
    pub medians: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseEstimate {
    pub lambda: f64,
    pub mu_c_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub protocol: PhaseProtocol,
    pub probes: Vec<Probe>,
}

impl PhaseEstimate {
    pub fn width(&self) -> f64 {
        self.ci_high - self.ci_low
    }

    pub fn contains(&self, mu: f64) -> bool {
        self.ci_low <= mu && mu <= self.ci_high
    }
}

fn decide(medians: &[u64], l_max: i32) -> Verdict {
    let n = medians.len();
    if medians[n - 1] == medians[n - 2] {
        Verdict::Fixating
    } else if medians[n - 1] as f64 > (l_max as f64).sqrt() {
        Verdict::Active
    } else {
        Verdict::Undecided
    }
}

/// Classify a single density with `reps` replicates.
pub fn classify(
    mu: f64,
    lambda: f64,
    jumps: &JumpDistribution,
    protocol: &PhaseProtocol,
    reps: u64,
    seed: u64,
) -> Result<Probe> {
    let law = InitialLaw::Poisson(mu);
    law.validate()?;
    let shape = WindowShape::for_jumps(jumps);
    let profiles = map_replicates(reps, |r| {
        let s = rng::replicate_seed(seed, r);
        let field = InstructionField::new(s, lambda, jumps.clone())?;
        odometer_profile(&law, &field, &protocol.l_list, shape, s, protocol.cap)
    });
    let profiles = profiles.into_iter().collect::<Result<Vec<_>>>()?;
    let medians: Vec<u64> = (0..protocol.l_list.len())
        .map(|i| {
            let xs: Vec<u64> = profiles.iter().map(|p| p[i].origin_odometer).collect();
            stats::median(&xs)
        })
        .collect();
    let verdict = decide(&medians, *protocol.l_list.last().unwrap());
    Ok(Probe { mu, verdict, reps, medians })
}

fn classify_with_retries(
    mu: f64,
    lambda: f64,
    jumps: &JumpDistribution,
    protocol: &PhaseProtocol,
    seed: u64,
    probes: &mut Vec<Probe>,
) -> Result<Verdict> {
    let mut reps = protocol.reps;
    for attempt in 0..=protocol.max_retries {
        let p = classify(mu, lambda, jumps, protocol, reps, seed)?;
        let v = p.verdict;
        probes.push(p);
        if v != Verdict::Undecided || attempt == protocol.max_retries {
            return Ok(v);
        }
        reps = reps * 2 + 1;
    }
    unreachable!()
}

/// Largest upper end tried before giving up on finding an active density.
pub const MU_CEILING: f64 = 8.0;

/// Bracket the critical density by bisection between `0` and an active `μ`.
pub fn estimate_mu_c(
    lambda: f64,
    dim: usize,
    jumps: &JumpDistribution,
    protocol: &PhaseProtocol,
    seed: u64,
) -> Result<PhaseEstimate> {
    if !(lambda > 0.0) {
        return Err(ArwError::InvalidParams(format!("sleep rate must be positive, got {lambda}")));
    }
    if jumps.dim() != dim {
        return Err(ArwError::InvalidParams(format!("jump law is {}-dimensional, expected {dim}", jumps.dim())));
    }
    protocol.validate()?;
    let mut probes = Vec::new();
    let mut lo = 0.0;
    let mut hi = protocol.mu_hi;
    loop {
        match classify_with_retries(hi, lambda, jumps, protocol, seed, &mut probes)? {
            Verdict::Active => break,
            Verdict::Fixating => lo = hi,
            Verdict::Undecided => {}
        }
        if hi * 1.5 > MU_CEILING {
            return Err(ArwError::NoSeparation(format!(
                "no active density up to {hi} with windows {:?}; probes: {:?}",
                protocol.l_list,
                probes.iter().map(|p| (p.mu, p.verdict, p.medians.clone())).collect::<Vec<_>>()
            )));
        }
        hi *= 1.5;
    }
    while hi - lo > protocol.tolerance {
        let mid = 0.5 * (lo + hi);
        match classify_with_retries(mid, lambda, jumps, protocol, seed, &mut probes)? {
            Verdict::Active => hi = mid,
            Verdict::Fixating => lo = mid,
            Verdict::Undecided => {
                let (a, b) = (0.5 * (lo + mid), 0.5 * (mid + hi));
                let va = classify_with_retries(a, lambda, jumps, protocol, seed, &mut probes)?;
                let vb = classify_with_retries(b, lambda, jumps, protocol, seed, &mut probes)?;
                let mut moved = false;
                match va {
                    Verdict::Fixating => (lo, moved) = (a, true),
                    Verdict::Active => (hi, moved) = (a, true),
                    Verdict::Undecided => {}
                }
                if hi > b {
                    match vb {
                        Verdict::Active => (hi, moved) = (b, true),
                        Verdict::Fixating if b > lo => (lo, moved) = (b, true),
                        _ => {}
                    }
                }
                if !moved {
                    break;
                }
            }
        }
    }
    Ok(PhaseEstimate { lambda, mu_c_hat: 0.5 * (lo + hi), ci_low: lo, ci_high: hi, protocol: protocol.clone(), probes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decision_rule() {
        assert_eq!(decide(&[3, 3], 100), Verdict::Fixating);
        assert_eq!(decide(&[40, 40], 100), Verdict::Fixating);
        assert_eq!(decide(&[3, 11], 100), Verdict::Active);
        assert_eq!(decide(&[3, 5], 100), Verdict::Undecided);
    }

    #[test]
    fn protocol_validation() {
        let mut p = PhaseProtocol::default_for(&JumpDistribution::directed_1d(), 1.0);
        assert!(p.validate().is_ok());
        p.reps = 4;
        assert!(p.validate().is_err());
        p.reps = 5;
        p.l_list = vec![10, 10];
        assert!(p.validate().is_err());
    }

    #[test]
    fn directed_bracket_small_windows() {
        let jumps = JumpDistribution::directed_1d();
        let protocol = PhaseProtocol { l_list: vec![256, 1024], reps: 15, cap: Some(1 << 34), tolerance: 0.1, mu_hi: 1.0, max_retries: 1 };
        let e = estimate_mu_c(1.0, 1, &jumps, &protocol, 5).unwrap();
        assert!(e.ci_low <= e.mu_c_hat && e.mu_c_hat <= e.ci_high);
        assert!(e.contains(0.5), "{e:?}");
    }

    #[test]
    fn rejects_mismatched_dimension() {
        let p = PhaseProtocol::default_for(&JumpDistribution::symmetric_2d(), 1.0);
        assert!(estimate_mu_c(1.0, 1, &JumpDistribution::symmetric_2d(), &p, 1).is_err());
    }
}
