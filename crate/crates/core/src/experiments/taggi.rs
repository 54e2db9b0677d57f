//! Biased walks: the escape functional `F(λ)`, the two-stage toppling
//! procedure on `[-2L, 0]`, good walks in two dimensions and the resulting
//! activity condition.

use rand::Rng;
use serde::Serialize;

use crate::engine::{Engine, ToppleMode};
use crate::error::{ArwError, Result};
use crate::instructions::{sleep_probability, InitialLaw, Instruction, InstructionField, JumpDistribution};
use crate::lattice::{Arena, BoundaryMode, Configuration, Site};
use crate::rng::{self, domain};
use crate::stats::{self, Estimate};
use crate::state::SiteState;

/// Paths are cut once their chance of coming back is below this.
pub const RETURN_BOUND: f64 = 1e-9;

/// Law of the increment along the first axis, as `(step, probability)`.
fn first_axis_law(jumps: &JumpDistribution) -> Vec<(i64, f64)> {
    let mut law: Vec<(i64, f64)> = Vec::new();
    for &(z, p) in jumps.entries() {
        let s = z.0[0] as i64;
        match law.iter_mut().find(|(t, _)| *t == s) {
            Some(e) => e.1 += p,
            None => law.push((s, p)),
        }
    }
    law
}

/// Positive root `θ` of `E[e^{-θ ξ}] = 1`, so that a walk at height `x > 0`
/// ever returns to `(-∞, 0]` with probability at most `e^{-θ x}`.
/// Infinite when no step goes down; `None` without positive drift.
pub fn lundberg_exponent(law: &[(i64, f64)]) -> Option<f64> {
    let drift: f64 = law.iter().map(|&(s, p)| s as f64 * p).sum();
    if drift <= 0.0 {
        return None;
    }
    if law.iter().all(|&(s, _)| s >= 0) {
        return Some(f64::INFINITY);
    }
    let phi = |t: f64| law.iter().map(|&(s, p)| p * (-t * s as f64).exp()).sum::<f64>() - 1.0;
    let mut hi = 1.0;
    while phi(hi) < 0.0 {
        hi *= 2.0;
    }
    // phi is convex, phi(0) = 0 and phi'(0) < 0: find a point below the root.
    let mut lo = hi / 1024.0;
    while phi(lo) >= 0.0 && lo > 1e-300 {
        lo /= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

fn return_bound(theta: f64, x: i64) -> f64 {
    if theta.is_infinite() {
        0.0
    } else {
        (-theta * x as f64).exp()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FEstimate {
    pub lambda: f64,
    /// Point estimate with a 95% interval widened by the truncation bounds.
    pub f: Estimate,
    /// Paths stopped by the step horizon rather than by the return bound.
    pub horizon_cut: u64,
}

/// Monte Carlo estimate of `F(λ) = E[(1+λ)^{-T}]`, `T` the number of times
/// `n >= 0` a walk from 0 is found in `(-∞, 0]`.
pub fn estimate_f(
    lambda: f64,
    jumps: &JumpDistribution,
    samples: u64,
    seed: u64,
    horizon: Option<u64>,
) -> Result<FEstimate> {
    if jumps.dim() != 1 {
        return Err(ArwError::Jumps("F is defined for one-dimensional walks".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ArwError::InvalidParams(format!("sleep rate {lambda} must be positive and finite")));
    }
    let law = first_axis_law(jumps);
    let theta = lundberg_exponent(&law);
    if theta.is_none() && horizon.is_none() {
        return Err(ArwError::InvalidParams("walks without drift to the right need a step horizon".into()));
    }
    let theta = theta.unwrap_or(0.0);
    let r = 1.0 / (1.0 + lambda);
    let max_steps = horizon.unwrap_or(u64::MAX);
    let mut rng = rng::sequential_rng(seed, domain::WALKS);
    let mut upper = Vec::with_capacity(samples as usize);
    let mut lower = Vec::with_capacity(samples as usize);
    let mut cut = 0;
    for _ in 0..samples {
        let mut x = 0i64;
        let mut t = 1i32;
        let mut steps = 0u64;
        let horizon_hit = loop {
            if x > 0 && theta > 0.0 && return_bound(theta, x) < RETURN_BOUND {
                break false;
            }
            if r.powi(t) < RETURN_BOUND {
                break false;
            }
            if steps >= max_steps {
                break true;
            }
            x += jumps.sample_with(rng.random::<f64>()).0[0] as i64;
            steps += 1;
            if x <= 0 {
                t += 1;
            }
        };
        let v = r.powi(t);
        upper.push(v);
        lower.push(if horizon_hit { 0.0 } else { v });
        cut += horizon_hit as u64;
    }
    let hi = Estimate::from_samples(&upper);
    let lo = Estimate::from_samples(&lower);
    Ok(FEstimate {
        lambda,
        f: Estimate {
            value: hi.value,
            ci_low: lo.ci_low - RETURN_BOUND,
            ci_high: hi.ci_high + RETURN_BOUND,
            n: samples,
        },
        horizon_cut: cut,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GoodWalkEstimate {
    pub k: Estimate,
    pub horizon_cut: u64,
}

/// Monte Carlo estimate of `K = P[(X_n - X_0)·e_1 > 0 for all n >= 1]`.
/// Paths still good at the horizon count as good in the point estimate and
/// as bad in the lower end of the interval.
pub fn good_walk_fraction(
    jumps: &JumpDistribution,
    samples: u64,
    seed: u64,
    horizon: Option<u64>,
) -> Result<GoodWalkEstimate> {
    let law = first_axis_law(jumps);
    let theta = lundberg_exponent(&law);
    if theta.is_none() && horizon.is_none() {
        return Err(ArwError::InvalidParams("walks without drift along e_1 need a step horizon".into()));
    }
    let theta = theta.unwrap_or(0.0);
    let max_steps = horizon.unwrap_or(u64::MAX);
    let mut rng = rng::sequential_rng(seed, domain::WALKS ^ 2);
    let (mut good, mut cut) = (0u64, 0u64);
    for _ in 0..samples {
        let mut x = 0i64;
        let mut steps = 0u64;
        loop {
            x += jumps.sample_with(rng.random::<f64>()).0[0] as i64;
            steps += 1;
            if x <= 0 {
                break;
            }
            if theta > 0.0 && return_bound(theta, x) < RETURN_BOUND {
                good += 1;
                break;
            }
            if steps >= max_steps {
                good += 1;
                cut += 1;
                break;
            }
        }
    }
    let hi = Estimate::proportion(good, samples);
    let lo = Estimate::proportion(good - cut, samples);
    Ok(GoodWalkEstimate {
        k: Estimate {
            value: hi.value,
            ci_low: (lo.ci_low - RETURN_BOUND).max(0.0),
            ci_high: (hi.ci_high + RETURN_BOUND).min(1.0),
            n: samples,
        },
        horizon_cut: cut,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ActivityCondition {
    pub active: bool,
    /// `[μ - λ/(1+λ)(1 - e^{-μ})] K - e^{-μ}`.
    pub margin: f64,
}

/// Sufficient condition for activity with a drifted walk in two dimensions;
/// a positive margin predicts non-fixation. Accepts `λ = 0` and `λ = ∞`.
pub fn taggi2d_condition(mu: f64, lambda: f64, k: f64) -> Result<ActivityCondition> {
    if !(mu > 0.0) || !(lambda >= 0.0) || !(0.0..=1.0).contains(&k) {
        return Err(ArwError::InvalidParams(format!("need μ > 0, λ >= 0, K in [0, 1]; got {mu}, {lambda}, {k}")));
    }
    let s = if lambda == 0.0 { 0.0 } else { sleep_probability(lambda) };
    let margin = (mu - s * (1.0 - (-mu).exp())) * k - (-mu).exp();
    Ok(ActivityCondition { active: margin > 0.0, margin })
}

#[derive(Clone, Debug, Serialize)]
pub struct StagedReport {
    pub l: u32,
    pub initial_mass: u64,
    /// Particles on `[-L, 0]` after the first stage.
    pub n0: u64,
    /// Particles at the origin after the second stage.
    pub n_l: u64,
    /// Second-stage particles that fell asleep at or left of their start.
    pub losses: u64,
    /// Largest leftward displacement of a first-stage walk.
    pub max_left_displacement: i64,
    /// Walks that reached the left end of the arena.
    pub overflows: u64,
}

struct Staged<'f> {
    engine: Engine<'f>,
    lo: i32,
    overflows: u64,
}

impl Staged<'_> {
    fn count(&self, x: i32) -> u32 {
        self.engine.config().get(Site::d1(x)).particle_count()
    }

    /// Topple `x` once; returns the site the moved particle lands on, or
    /// `None` for a sleep instruction.
    fn step(&mut self, x: i32) -> Result<Option<i32>> {
        Ok(match self.engine.topple(Site::d1(x), ToppleMode::Legal)? {
            Instruction::Sleep => None,
            Instruction::Jump(z) => Some(x + z.0[0]),
        })
    }
}

/// The two-stage legal toppling procedure on `[-2L, 0]` for a walk drifting
/// to the right, with `η` Poisson on `[-L, 0]`.
pub fn taggi_staged_run(l: u32, mu: f64, lambda: f64, jumps: &JumpDistribution, seed: u64) -> Result<StagedReport> {
    if jumps.dim() != 1 || first_axis_law(jumps).iter().map(|&(s, p)| s as f64 * p).sum::<f64>() <= 0.0 {
        return Err(ArwError::Jumps("the staged procedure needs a one-dimensional walk drifting right".into()));
    }
    let li = l as i32;
    let law = InitialLaw::Poisson(mu);
    law.validate()?;
    let arena = Arena::line(-2 * li, 0, jumps.range(), BoundaryMode::Frozen)?;
    let counts: Vec<u32> =
        (-2 * li..=0).map(|x| if x >= -li { law.sample_site(seed, Site::d1(x)) } else { 0 }).collect();
    let initial_mass = counts.iter().map(|&c| c as u64).sum();
    let field = InstructionField::new(seed, lambda, jumps.clone())?;
    if field.is_jump_only() {
        return Err(ArwError::InvalidParams("the staged procedure needs a finite sleep rate".into()));
    }
    let config = Configuration::from_counts(arena, &counts)?;
    let mut st = Staged { engine: Engine::new(config, &field)?, lo: -2 * li, overflows: 0 };

    // Stage 1: spread multiple occupancies on [-L, -1] into singletons.
    let mut max_disp = 0i64;
    for x in -li..0 {
        while st.count(x) >= 2 {
            let mut cur = x;
            loop {
                if cur < st.lo {
                    st.overflows += 1;
                    break;
                }
                if cur == 0 || st.count(cur) == 1 {
                    break;
                }
                if let Some(next) = st.step(cur)? {
                    cur = next;
                    max_disp = max_disp.max((x - cur) as i64);
                }
            }
        }
    }
    let n0 = (-li..=0).map(|x| st.count(x) as u64).sum();

    // Stage 2: sweep left to right, keeping [x+1, -1] at most singly occupied.
    let mut losses = 0;
    for x in -li..0 {
        if st.engine.config().get(Site::d1(x)) != SiteState::Active(1) {
            continue;
        }
        let mut cur = x;
        loop {
            if cur < st.lo {
                st.overflows += 1;
                losses += 1;
                break;
            }
            if cur == 0 || (cur > x && st.count(cur) == 1) {
                break;
            }
            match st.step(cur)? {
                Some(next) => cur = next,
                None if st.engine.config().get(Site::d1(cur)) == SiteState::Sleeping => {
                    losses += 1;
                    break;
                }
                None => {}
            }
        }
    }
    Ok(StagedReport {
        l,
        initial_mass,
        n0,
        n_l: st.count(0) as u64,
        losses,
        max_left_displacement: max_disp,
        overflows: st.overflows,
    })
}

/// Median of `N_L / L` over seeds `0..reps` (derived per replicate).
pub fn staged_median_fraction(l: u32, mu: f64, lambda: f64, jumps: &JumpDistribution, seed: u64, reps: u64) -> Result<f64> {
    let xs = (0..reps)
        .map(|r| taggi_staged_run(l, mu, lambda, jumps, rng::replicate_seed(seed, r)).map(|s| s.n_l as f64 / l as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(stats::median(&xs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directed_f_is_exact() {
        for lambda in [0.5, 1.0, 2.0] {
            let e = estimate_f(lambda, &JumpDistribution::directed_1d(), 1000, 1, None).unwrap();
            assert!((e.f.value - 1.0 / (1.0 + lambda)).abs() < 1e-12);
            assert!(e.f.contains(1.0 / (1.0 + lambda)));
        }
        let e = estimate_f(1e-3, &JumpDistribution::directed_1d(), 100, 1, None).unwrap();
        assert!((e.f.value - 1.0 / 1.001).abs() < 1e-12);
    }

    #[test]
    fn symmetric_walk_needs_horizon() {
        assert!(estimate_f(1.0, &JumpDistribution::symmetric_1d(), 10, 1, None).is_err());
        let e = estimate_f(1.0, &JumpDistribution::symmetric_1d(), 2000, 1, Some(10_000)).unwrap();
        assert!(e.f.value < 0.05);
    }

    #[test]
    fn lundberg_for_simple_walk() {
        // q e^{-θ} + (1-q) e^{θ} = 1 gives θ = ln(q / (1-q)).
        let th = lundberg_exponent(&[(1, 0.75), (-1, 0.25)]).unwrap();
        assert!((th - 3f64.ln()).abs() < 1e-9);
        assert_eq!(lundberg_exponent(&[(1, 1.0)]), Some(f64::INFINITY));
        assert_eq!(lundberg_exponent(&[(1, 0.5), (-1, 0.5)]), None);
    }

    #[test]
    fn biased_f_matches_exact_value() {
        let j = JumpDistribution::biased_1d(0.8).unwrap();
        let a = estimate_f(1.0, &j, 40_000, 1, None).unwrap();
        let b = estimate_f(1.0, &j, 40_000, 2, None).unwrap();
        assert!((a.f.value - b.f.value).abs() < 3.0 * (a.f.ci_high - a.f.ci_low));
        assert!(a.f.value > 0.0 && a.f.value < 0.5);
    }

    #[test]
    fn fully_directed_walks_are_good() {
        let j = JumpDistribution::new(2, vec![(crate::lattice::Offset::d2(1, 0), 1.0)]).unwrap();
        let k = good_walk_fraction(&j, 1000, 3, None).unwrap();
        assert_eq!(k.k.value, 1.0);
    }

    #[test]
    fn symmetric_walks_fail_eventually() {
        let k = good_walk_fraction(&JumpDistribution::symmetric_2d(), 2000, 3, Some(100_000)).unwrap();
        assert!(k.k.value < 0.05);
        assert_eq!(k.k.ci_low, 0.0);
        assert!(good_walk_fraction(&JumpDistribution::symmetric_2d(), 10, 3, None).is_err());
    }

    #[test]
    fn good_fraction_reproducible() {
        let j = JumpDistribution::biased_2d(0.9).unwrap();
        let a = good_walk_fraction(&j, 20_000, 1, None).unwrap().k;
        let b = good_walk_fraction(&j, 20_000, 2, None).unwrap().k;
        assert!(a.value > 0.0 && a.value < 1.0);
        assert!(a.ci_low <= b.ci_high && b.ci_low <= a.ci_high);
    }

    #[test]
    fn activity_condition_arithmetic() {
        let c = taggi2d_condition(1.0, 0.0, 1.0).unwrap();
        assert!(c.active);
        assert!((c.margin - (1.0 - (-1f64).exp())).abs() < 1e-15);
        for mu in [0.1, 0.5, 1.0] {
            assert!(!taggi2d_condition(mu, 1e9, 0.3).unwrap().active);
        }
        let c = taggi2d_condition(2.0, 1.0, 0.5).unwrap();
        let e2 = (-2.0f64).exp();
        let expected = (2.0 - 0.5 * (1.0 - e2)) * 0.5 - e2;
        assert!((c.margin - expected).abs() < 1e-15);
        assert!(taggi2d_condition(2.0, f64::INFINITY, 1.0).unwrap().active);
    }

    #[test]
    fn staged_run_conserves_particles() {
        let j = JumpDistribution::biased_1d(0.9).unwrap();
        let r = taggi_staged_run(256, 0.9, 0.2, &j, 4).unwrap();
        assert!(r.n0 <= r.initial_mass);
        assert_eq!(r.n_l + r.losses, r.n0);
    }
}
