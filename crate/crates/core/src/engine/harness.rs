//! Exact property checks on the engine: abelianness, least action and
//! monotonicity of the odometer in the window.

use rand::Rng;
use serde::Serialize;

use super::{stabilize, Engine, Policy, StabilizationResult, StabilizationStatus, ToppleMode};
use crate::error::{ArwError, Result};
use crate::instructions::{sample_initial, InitialLaw, InstructionField, JumpDistribution};
use crate::lattice::{Arena, BoundaryMode, Configuration, Site};
use crate::rng::{self, domain};

/// Recipe for a random finite instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceSpec {
    pub dim: usize,
    pub side: i32,
    pub mu: f64,
    pub lambda: f64,
    pub jumps: JumpDistribution,
}

/// A concrete instance: initial configuration and instruction field.
pub struct Instance {
    pub spec: InstanceSpec,
    pub config: Configuration,
    pub field: InstructionField,
}

impl InstanceSpec {
    /// Window `[0, side-1]^d` with a frozen halo of the jump range.
    pub fn arena(&self) -> Result<Arena> {
        let hi = self.side - 1;
        Arena::new(self.dim, [0; 3], [hi; 3], self.jumps.range(), BoundaryMode::Frozen)
    }

    pub fn build(&self, seed: u64) -> Result<Instance> {
        let config = sample_initial(&InitialLaw::Poisson(self.mu), &self.arena()?, seed)?;
        let field = InstructionField::new(seed, self.lambda, self.jumps.clone())?;
        Ok(Instance { spec: self.clone(), config, field })
    }

    /// Draw an instance: dimension 1 or 2, side in `1..=max_side_1d` (1D) or
    /// `1..=max_side_2d` (2D), μ uniform in (0, 2], λ from {0.5, 1, ∞},
    /// symmetric nearest-neighbour jumps.
    pub fn random(seed: u64, max_side_1d: i32, max_side_2d: i32) -> InstanceSpec {
        let mut r = rng::sequential_rng(seed, domain::HARNESS);
        let dim = if r.random_bool(0.5) { 1 } else { 2 };
        let side = r.random_range(1..=if dim == 1 { max_side_1d } else { max_side_2d });
        let mu = 2.0 * (1.0 - r.random::<f64>());
        let lambda = [0.5, 1.0, f64::INFINITY][r.random_range(0..3)];
        let jumps = if dim == 1 { JumpDistribution::symmetric_1d() } else { JumpDistribution::symmetric_2d() };
        InstanceSpec { dim, side, mu, lambda, jumps }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AbelianReport {
    pub policies: usize,
    pub all_stable: bool,
    pub exact: bool,
    /// Largest `|h_a(x) - h_b(x)|` against the first policy.
    pub max_odometer_discrepancy: u64,
    /// Number of window sites whose final state differs from the first policy.
    pub max_state_discrepancy: usize,
}

/// Stabilize the same instance under each policy and compare exactly.
pub fn check_abelian(
    config: &Configuration,
    field: &InstructionField,
    policies: &[Policy],
    cap: u64,
) -> Result<AbelianReport> {
    if policies.len() < 2 {
        return Err(ArwError::InvalidParams("need at least two policies".into()));
    }
    let runs =
        policies.iter().map(|p| stabilize(config.clone(), field, p, cap)).collect::<Result<Vec<StabilizationResult>>>()?;
    let base = &runs[0];
    let base_h = base.odometer.window_counts();
    let base_s = base.final_config.window_states();
    let mut report = AbelianReport {
        policies: policies.len(),
        all_stable: runs.iter().all(|r| r.status == StabilizationStatus::Stable),
        exact: true,
        max_odometer_discrepancy: 0,
        max_state_discrepancy: 0,
    };
    for r in &runs[1..] {
        let h = r.odometer.window_counts();
        let d = h.iter().zip(&base_h).map(|(a, b)| a.abs_diff(*b)).max().unwrap_or(0);
        let s = r.final_config.window_states().iter().zip(&base_s).filter(|(a, b)| a != b).count();
        report.max_odometer_discrepancy = report.max_odometer_discrepancy.max(d);
        report.max_state_discrepancy = report.max_state_discrepancy.max(s);
        if r != base {
            report.exact = false;
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct LeastActionReport {
    /// `m_β <= m_α` at every window site.
    pub holds: bool,
    /// `m_β < m_α` somewhere.
    pub strict: bool,
    pub alpha_topplings: u64,
    pub beta_topplings: u64,
    pub injected: u32,
}

/// Greedy acceptable stabilizing sequence: legal topplings in random order,
/// interleaved with up to `surplus` topplings of sleeping sites (each taken
/// with probability `inject_p` per step, and any left over spent once the
/// window is stable). Returns the sequence and the number injected.
pub fn acceptable_sequence(
    config: &Configuration,
    field: &InstructionField,
    seed: u64,
    surplus: u32,
    inject_p: f64,
    cap: u64,
) -> Result<(Vec<Site>, u32)> {
    let mut r = rng::sequential_rng(seed, domain::HARNESS ^ 1);
    let mut e = Engine::new(config.clone(), field)?;
    let window: Vec<Site> = e.arena().window_sites().collect();
    let mut seq = Vec::new();
    let mut left = surplus;
    loop {
        if e.topplings() >= cap {
            return Err(ArwError::ConstructionFailed(cap));
        }
        let unstable: Vec<Site> = window.iter().copied().filter(|&s| e.config().get(s).is_unstable()).collect();
        let sleeping: Vec<Site> =
            window.iter().copied().filter(|&s| e.config().get(s) == crate::state::SiteState::Sleeping).collect();
        let inject = left > 0 && !sleeping.is_empty() && (unstable.is_empty() || r.random_bool(inject_p));
        let s = if inject {
            left -= 1;
            sleeping[r.random_range(0..sleeping.len())]
        } else if let Some(&s) = unstable.get(r.random_range(0..unstable.len().max(1))) {
            s
        } else {
            break;
        };
        e.topple(s, ToppleMode::Acceptable)?;
        seq.push(s);
    }
    Ok((seq, surplus - left))
}

/// Compare a legal FIFO stabilization `β` with a constructed acceptable
/// stabilizing sequence `α`.
pub fn check_least_action(
    config: &Configuration,
    field: &InstructionField,
    seed: u64,
    surplus: u32,
    cap: u64,
) -> Result<LeastActionReport> {
    let beta = stabilize(config.clone(), field, &Policy::Fifo, cap)?;
    if beta.status != StabilizationStatus::Stable {
        return Err(ArwError::CapExceeded(cap));
    }
    let (seq, injected) = acceptable_sequence(config, field, seed, surplus, 0.1, cap)?;
    let alpha = super::stabilize_acceptable(config.clone(), field, &seq)?;
    if alpha.status != StabilizationStatus::Stable {
        return Err(ArwError::ConstructionFailed(cap));
    }
    let (ma, mb) = (alpha.odometer.window_counts(), beta.odometer.window_counts());
    Ok(LeastActionReport {
        holds: mb.iter().zip(&ma).all(|(b, a)| b <= a),
        strict: mb.iter().zip(&ma).any(|(b, a)| b < a),
        alpha_topplings: alpha.topplings_total,
        beta_topplings: beta.topplings_total,
        injected,
    })
}

/// Window family used by [`odometer_profile`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WindowShape {
    /// `[-L, L]^d`.
    Centered,
    /// `[-L, 0]` in one dimension: everything that can reach the origin
    /// under jumps to the right.
    LeftHalfLine,
}

impl WindowShape {
    pub fn for_jumps(jumps: &JumpDistribution) -> Self {
        if jumps.is_directed_right() {
            WindowShape::LeftHalfLine
        } else {
            WindowShape::Centered
        }
    }

    pub fn arena(self, dim: usize, l: i32, halo: u32) -> Result<Arena> {
        match self {
            WindowShape::Centered => Arena::centered(dim, l, halo, BoundaryMode::Frozen),
            WindowShape::LeftHalfLine if dim == 1 => Arena::line(-l, 0, halo, BoundaryMode::Frozen),
            WindowShape::LeftHalfLine => Err(ArwError::Arena("half-line windows are one-dimensional".into())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ProfileEntry {
    pub l: i32,
    pub origin_odometer: u64,
    pub status: StabilizationStatus,
}

/// Origin odometer of the same `(η, field)` stabilized in growing windows.
/// `cap` of `None` uses [`super::default_cap`] per window.
pub fn odometer_profile(
    law: &InitialLaw,
    field: &InstructionField,
    l_list: &[i32],
    shape: WindowShape,
    seed: u64,
    cap: Option<u64>,
) -> Result<Vec<ProfileEntry>> {
    if l_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ArwError::InvalidParams("window sizes must be strictly increasing".into()));
    }
    let dim = field.jumps().dim();
    let halo = field.jumps().range();
    l_list
        .iter()
        .map(|&l| {
            let arena = shape.arena(dim, l, halo)?;
            let cap = cap.unwrap_or_else(|| super::default_cap(arena.window_len(), law.density()));
            let config = sample_initial(law, &arena, seed)?;
            let r = stabilize(config, field, &Policy::Fifo, cap)?;
            Ok(ProfileEntry { l, origin_odometer: r.origin_odometer, status: r.status })
        })
        .collect()
}
