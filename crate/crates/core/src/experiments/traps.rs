//! Trap certification in one dimension.
//!
//! Particles are settled one at a time, nearest to the origin first, on
//! each side. For particle `k` an explorer starts at `x_k` and follows the
//! instructions (a sleep just moves on to the next instruction at the same
//! site) until it reaches the previous trap `a_{k-1}` (`a_0 = 0`). Every
//! site of `B_k = [a_{k-1}+1, x_k-1]` was visited and last left by a jump
//! towards the origin; the new trap `a_k` is the site of `B_k` nearest the
//! origin whose second-last explored instruction is a sleep. Following the
//! explorer up to that sleep settles the particle at `a_k` using acceptable
//! topplings that never touch the origin, which certifies a zero origin
//! odometer. The certificate is replayed through the engine.

use serde::Serialize;

use crate::engine::{stabilize, stabilize_acceptable, Policy, StabilizationStatus};
use crate::error::{ArwError, Result};
use crate::instructions::{InitialLaw, Instruction, InstructionField, JumpDistribution};
use crate::lattice::{Arena, BoundaryMode, Configuration, Site};
use crate::state::SiteState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TrapFailure {
    OccupiedOrigin,
    /// No sleep found before the last jump at any site of `B_k`.
    NoTrap { side: i8, k: u32 },
    /// The explorer used more than the allowed number of instructions.
    StepCap { side: i8, k: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrapCertificate {
    /// `x_1 <= … <= x_n` on the positive side.
    pub particles_right: Vec<i32>,
    /// `x_{-1} >= … >= x_{-n}` on the negative side.
    pub particles_left: Vec<i32>,
    pub traps_right: Vec<i32>,
    pub traps_left: Vec<i32>,
    /// `|a_k - a_{k-1}|` over both sides.
    pub gaps: Vec<u32>,
    /// Sites holding explored but unused instructions.
    pub corrupted: usize,
    pub instructions_explored: u64,
    /// Acceptable topplings in the settling sequence.
    pub replay_topplings: u64,
    pub replay_origin_odometer: u64,
    /// Origin odometer of the legal stabilization of `[x_{-n}, x_n]`.
    pub legal_origin_odometer: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum TrapOutcome {
    Success(TrapCertificate),
    Failure(TrapFailure),
}

impl TrapOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, TrapOutcome::Success(_))
    }
}

/// Explored-instruction counts per site.
#[derive(Default)]
struct Cursors {
    pos: Vec<u64>,
    neg: Vec<u64>,
}

impl Cursors {
    fn slot(&mut self, x: i32) -> &mut u64 {
        let (v, i) = if x >= 0 { (&mut self.pos, x as usize) } else { (&mut self.neg, (-x - 1) as usize) };
        if i >= v.len() {
            v.resize(i + 1, 0);
        }
        &mut v[i]
    }
}

/// First `n` particle positions at `side * 1, side * 2, …`.
fn particles(law: &InitialLaw, seed: u64, side: i32, n: u32) -> Vec<i32> {
    let mut out = Vec::with_capacity(n as usize);
    let mut u = 1;
    while out.len() < n as usize {
        let c = law.sample_site(seed, Site::d1(side * u));
        for _ in 0..c.min(n - out.len() as u32) {
            out.push(side * u);
        }
        u += 1;
    }
    out
}

struct SideResult {
    traps: Vec<i32>,
    gaps: Vec<u32>,
    corrupted: usize,
}

#[allow(clippy::too_many_arguments)]
fn settle_side(
    field: &InstructionField,
    cursors: &mut Cursors,
    xs: &[i32],
    side: i32,
    step_cap: u64,
    sequence: &mut Vec<Site>,
    explored: &mut u64,
) -> Result<std::result::Result<SideResult, TrapFailure>> {
    let toward = -side;
    let mut a_prev = 0i32;
    let mut res = SideResult { traps: Vec::new(), gaps: Vec::new(), corrupted: 0 };
    for (k, &xk) in xs.iter().enumerate() {
        let k = k as u32 + 1;
        let mut path: Vec<i32> = Vec::new();
        let mut cur = xk;
        while cur != a_prev {
            if path.len() as u64 >= step_cap {
                return Ok(Err(TrapFailure::StepCap { side: side as i8, k }));
            }
            let c = cursors.slot(cur);
            *c += 1;
            let j = *c;
            path.push(cur);
            if let Instruction::Jump(z) = field.instruction_at(Site::d1(cur), j) {
                cur += z.0[0];
            }
        }
        *explored += path.len() as u64;
        // Sites of B_k from the origin side outwards.
        let mut trap = None;
        let mut u = a_prev + side;
        while u != xk {
            let c = *cursors.slot(u);
            let last = field.instruction_at(Site::d1(u), c);
            if last != Instruction::Jump(crate::lattice::Offset::d1(toward)) {
                return Err(ArwError::InvalidParams(format!("last explored instruction at {u} is {last:?}")));
            }
            if c >= 2 && field.instruction_at(Site::d1(u), c - 1) == Instruction::Sleep {
                trap = Some(u);
                break;
            }
            u += side;
        }
        let Some(ak) = trap else {
            return Ok(Err(TrapFailure::NoTrap { side: side as i8, k }));
        };
        let last = path.iter().rposition(|&p| p == ak).expect("trap site was explored");
        let cut = last - 1;
        debug_assert_eq!(path[cut], ak);
        let corrupted: std::collections::BTreeSet<i32> = path[cut + 1..].iter().copied().collect();
        let (lo, hi) = if side > 0 { (a_prev + 1, ak) } else { (ak, a_prev - 1) };
        if corrupted.iter().any(|&c| c < lo || c > hi) {
            return Err(ArwError::InvalidParams(format!("corrupted site outside [{lo}, {hi}]")));
        }
        res.corrupted += corrupted.len();
        sequence.extend(path[..=cut].iter().map(|&p| Site::d1(p)));
        res.gaps.push((ak - a_prev).unsigned_abs());
        res.traps.push(ak);
        a_prev = ak;
    }
    Ok(Ok(res))
}

/// Try to certify that `n` particles on each side of the origin settle
/// without the origin ever toppling. `step_cap` bounds each exploration.
pub fn trap_certify(
    mu: f64,
    lambda: f64,
    jumps: &JumpDistribution,
    n: u32,
    seed: u64,
    step_cap: u64,
) -> Result<TrapOutcome> {
    if jumps.dim() != 1 || !jumps.is_nearest_neighbor() {
        return Err(ArwError::Jumps("trap certification needs nearest-neighbour jumps in one dimension".into()));
    }
    let field = InstructionField::new(seed, lambda, jumps.clone())?;
    if field.is_jump_only() {
        return Err(ArwError::InvalidParams("trap certification needs a finite sleep rate".into()));
    }
    let law = InitialLaw::Poisson(mu);
    law.validate()?;
    if law.sample_site(seed, Site::ORIGIN) > 0 {
        return Ok(TrapOutcome::Failure(TrapFailure::OccupiedOrigin));
    }
    let right = particles(&law, seed, 1, n);
    let left = particles(&law, seed, -1, n);
    let mut cursors = Cursors::default();
    let mut sequence = Vec::new();
    let mut explored = 0;
    let r = match settle_side(&field, &mut cursors, &right, 1, step_cap, &mut sequence, &mut explored)? {
        Ok(r) => r,
        Err(f) => return Ok(TrapOutcome::Failure(f)),
    };
    let l = match settle_side(&field, &mut cursors, &left, -1, step_cap, &mut sequence, &mut explored)? {
        Ok(l) => l,
        Err(f) => return Ok(TrapOutcome::Failure(f)),
    };

    // Replay: the settling sequence as acceptable topplings.
    let x_lo = left.last().copied().unwrap_or(-1);
    let x_hi = right.last().copied().unwrap_or(1);
    let lo = sequence.iter().map(|s| s.0[0]).min().unwrap_or(0).min(x_lo);
    let hi = sequence.iter().map(|s| s.0[0]).max().unwrap_or(0).max(x_hi);
    let config_on = |arena: Arena| -> Result<Configuration> {
        let mut c = Configuration::empty(arena);
        for &x in right.iter().chain(&left) {
            c.add_particle(Site::d1(x))?;
        }
        Ok(c)
    };
    let replay = stabilize_acceptable(config_on(Arena::line(lo, hi, 1, BoundaryMode::Frozen)?)?, &field, &sequence)?;
    if replay.status != StabilizationStatus::Stable {
        return Err(ArwError::InvalidParams("replayed settling sequence is not stabilizing".into()));
    }
    for &a in r.traps.iter().chain(&l.traps) {
        if replay.final_config.get(Site::d1(a)) != SiteState::Sleeping {
            return Err(ArwError::InvalidParams(format!("no sleeping particle at trap {a}")));
        }
    }
    let legal = stabilize(config_on(Arena::line(x_lo, x_hi, 1, BoundaryMode::Frozen)?)?, &field, &Policy::Fifo, u64::MAX)?;

    let mut gaps = r.gaps;
    gaps.extend(l.gaps);
    Ok(TrapOutcome::Success(TrapCertificate {
        particles_right: right,
        particles_left: left,
        traps_right: r.traps,
        traps_left: l.traps,
        gaps,
        corrupted: r.corrupted + l.corrupted,
        instructions_explored: explored,
        replay_topplings: replay.topplings_total,
        replay_origin_odometer: replay.origin_odometer,
        legal_origin_odometer: legal.origin_odometer,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed_where(origin_occupied: bool) -> u64 {
        let law = InitialLaw::Poisson(0.25);
        (0..).find(|&s| (law.sample_site(s, Site::ORIGIN) > 0) == origin_occupied).unwrap()
    }

    #[test]
    fn occupied_origin_fails_immediately() {
        let s = seed_where(true);
        let out = trap_certify(0.25, 1.0, &JumpDistribution::symmetric_1d(), 5, s, 1_000_000).unwrap();
        assert_eq!(out, TrapOutcome::Failure(TrapFailure::OccupiedOrigin));
    }

    #[test]
    fn successes_verify() {
        let mut successes = 0;
        for seed in 0..60 {
            let out = trap_certify(0.25, 1.0, &JumpDistribution::symmetric_1d(), 5, seed, 1_000_000).unwrap();
            if let TrapOutcome::Success(c) = out {
                successes += 1;
                assert_eq!(c.replay_origin_odometer, 0);
                assert_eq!(c.legal_origin_odometer, 0);
                assert!(c.traps_right.windows(2).all(|w| w[0] < w[1]));
                assert!(c.traps_left.windows(2).all(|w| w[0] > w[1]));
                for (a, x) in c.traps_right.iter().zip(&c.particles_right) {
                    assert!(a < x);
                }
            }
        }
        assert!(successes > 0);
    }
}
