//! The instruction field and initial laws.
//!
//! Instruction `(x, j)` is a pure function of `(seed, x, j)`: the field is
//! never stored, only evaluated. Site `x` has a SplitMix64 stream keyed by
//! `(seed, x)` and instruction `j` is its `j`-th output, decoded as a sleep
//! with probability `λ/(1+λ)` and as a jump by `z` with probability
//! `p(z)/(1+λ)`. With `λ = ∞` the field holds jumps only; the engine then
//! puts lone particles to sleep at no toppling cost.

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ArwError, Result};
use crate::lattice::{Arena, Configuration, Offset, Site};
use crate::rng::{self, domain};
use crate::state::SiteState;

/// Finite-support jump law `p(z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpDistribution {
    dim: usize,
    entries: Vec<(Offset, f64)>,
}

impl JumpDistribution {
    pub fn new(dim: usize, entries: Vec<(Offset, f64)>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(ArwError::Jumps(format!("dimension {dim} not in 1..=3")));
        }
        if entries.is_empty() {
            return Err(ArwError::Jumps("empty support".into()));
        }
        let mut total = 0.0;
        for (i, &(z, p)) in entries.iter().enumerate() {
            if z.is_zero() {
                return Err(ArwError::Jumps("offset 0 is not a jump".into()));
            }
            if z.0[dim..].iter().any(|&c| c != 0) {
                return Err(ArwError::Jumps(format!("offset {z:?} has too many axes for d={dim}")));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(ArwError::Jumps(format!("probability {p} not in (0, 1]")));
            }
            if entries[..i].iter().any(|&(w, _)| w == z) {
                return Err(ArwError::Jumps(format!("offset {z:?} repeated")));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(ArwError::Jumps(format!("probabilities sum to {total}")));
        }
        Ok(JumpDistribution { dim, entries })
    }

    /// Totally asymmetric: always one step to the right.
    pub fn directed_1d() -> Self {
        Self::new(1, vec![(Offset::d1(1), 1.0)]).unwrap()
    }

    pub fn symmetric_1d() -> Self {
        Self::biased_1d(0.5).unwrap()
    }

    /// `p(+1) = q`, `p(-1) = 1 - q`.
    pub fn biased_1d(q: f64) -> Result<Self> {
        match q {
            q if q == 1.0 => Ok(Self::directed_1d()),
            q if q == 0.0 => Self::new(1, vec![(Offset::d1(-1), 1.0)]),
            q => Self::new(1, vec![(Offset::d1(1), q), (Offset::d1(-1), 1.0 - q)]),
        }
    }

    pub fn symmetric_2d() -> Self {
        Self::biased_2d(0.25).unwrap()
    }

    /// `p(+e1) = q`, the rest split evenly over the other three neighbours.
    pub fn biased_2d(q: f64) -> Result<Self> {
        if q == 1.0 {
            return Self::new(2, vec![(Offset::d2(1, 0), 1.0)]);
        }
        let r = (1.0 - q) / 3.0;
        Self::new(
            2,
            vec![(Offset::d2(1, 0), q), (Offset::d2(-1, 0), r), (Offset::d2(0, 1), r), (Offset::d2(0, -1), r)],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(Offset, f64)] {
        &self.entries
    }

    /// `Σ p(z) z`.
    pub fn drift(&self) -> [f64; 3] {
        let mut v = [0.0; 3];
        for &(z, p) in &self.entries {
            for k in 0..3 {
                v[k] += p * z.0[k] as f64;
            }
        }
        v
    }

    /// Largest sup-norm of a jump.
    pub fn range(&self) -> u32 {
        self.entries.iter().map(|(z, _)| z.sup_norm()).max().unwrap_or(0)
    }

    pub fn is_nearest_neighbor(&self) -> bool {
        self.entries.iter().all(|(z, _)| z.l1_norm() == 1)
    }

    /// One-dimensional law whose jumps all go right.
    pub fn is_directed_right(&self) -> bool {
        self.dim == 1 && self.entries.iter().all(|(z, _)| z.0[0] > 0)
    }

    /// Draw a jump from a uniform `u` in [0, 1).
    pub fn sample_with(&self, u: f64) -> Offset {
        let mut acc = 0.0;
        for &(z, p) in &self.entries {
            acc += p;
            if u < acc {
                return z;
            }
        }
        self.entries.last().unwrap().0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instruction {
    Jump(Offset),
    Sleep,
}

/// Decoded instruction with the jump given as an index into the support.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Action {
    Sleep,
    Jump(usize),
}

#[derive(Clone, Debug)]
pub struct InstructionField {
    seed: u64,
    lambda: f64,
    jumps: JumpDistribution,
    key: u64,
    sleep_threshold: u64,
    jump_thresholds: Vec<u64>,
}

fn to_threshold(c: f64) -> u64 {
    if c >= 1.0 {
        u64::MAX
    } else {
        (c * 18_446_744_073_709_551_616.0) as u64
    }
}

impl InstructionField {
    /// `lambda` in `(0, ∞]`; pass `f64::INFINITY` for the jump-only field.
    pub fn new(seed: u64, lambda: f64, jumps: JumpDistribution) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(ArwError::InvalidParams(format!("sleep rate {lambda} must be positive")));
        }
        let sleep = if lambda.is_infinite() { 0.0 } else { sleep_probability(lambda) };
        let mut acc = sleep;
        let mut jump_thresholds = Vec::with_capacity(jumps.entries.len());
        for &(_, p) in &jumps.entries {
            acc += (1.0 - sleep) * p;
            jump_thresholds.push(to_threshold(acc));
        }
        *jump_thresholds.last_mut().unwrap() = u64::MAX;
        Ok(InstructionField {
            seed,
            lambda,
            key: rng::hash_words(&[seed, domain::INSTRUCTIONS]),
            sleep_threshold: to_threshold(sleep),
            jump_thresholds,
            jumps,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn jumps(&self) -> &JumpDistribution {
        &self.jumps
    }

    /// `λ = ∞`: no sleep instructions, lone particles sleep instantly.
    pub fn is_jump_only(&self) -> bool {
        self.lambda.is_infinite()
    }

    /// Stream key of a site; instruction `j` is `stream_at(key, j)` decoded.
    #[inline]
    pub fn site_key(&self, site: Site) -> u64 {
        rng::mix64(self.key ^ rng::mix64(site.packed()))
    }

    #[inline]
    pub(crate) fn action(&self, site_key: u64, j: u64) -> Action {
        let bits = rng::stream_at(site_key, j);
        if bits < self.sleep_threshold {
            return Action::Sleep;
        }
        let mut i = 0;
        while bits >= self.jump_thresholds[i] && i + 1 < self.jump_thresholds.len() {
            i += 1;
        }
        Action::Jump(i)
    }

    #[inline]
    pub(crate) fn decode(&self, action: Action) -> Instruction {
        match action {
            Action::Sleep => Instruction::Sleep,
            Action::Jump(i) => Instruction::Jump(self.jumps.entries[i].0),
        }
    }

    /// Instruction `j >= 1` at `site`.
    pub fn instruction_at(&self, site: Site, j: u64) -> Instruction {
        debug_assert!(j >= 1, "instructions are indexed from 1");
        self.decode(self.action(self.site_key(site), j))
    }
}

/// `λ/(1+λ)`, with the `λ = ∞` limit equal to 1.
pub fn sleep_probability(lambda: f64) -> f64 {
    if lambda.is_infinite() {
        1.0
    } else {
        lambda / (1.0 + lambda)
    }
}

/// Law of the i.i.d. initial particle counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialLaw {
    Poisson(f64),
    Bernoulli(f64),
    /// Counts over the window in lexicographic site order.
    Deterministic(Vec<u32>),
}

impl InitialLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialLaw::Poisson(mu) if !(mu > 0.0 && mu.is_finite()) => Err(ArwError::InvalidDensity(mu)),
            InitialLaw::Bernoulli(mu) if !(0.0..=1.0).contains(&mu) => Err(ArwError::InvalidDensity(mu)),
            _ => Ok(()),
        }
    }

    /// Mean particles per site (for deterministic laws, the window average).
    pub fn density(&self) -> f64 {
        match self {
            InitialLaw::Poisson(mu) | InitialLaw::Bernoulli(mu) => *mu,
            InitialLaw::Deterministic(c) if c.is_empty() => 0.0,
            InitialLaw::Deterministic(c) => c.iter().map(|&n| n as f64).sum::<f64>() / c.len() as f64,
        }
    }

    /// Count at one site; a pure function of `(seed, site)`.
    pub fn sample_site(&self, seed: u64, site: Site) -> u32 {
        let key = rng::hash_words(&[seed, domain::INITIAL, site.packed()]);
        match *self {
            InitialLaw::Poisson(mu) => {
                let mut r = rng::sequential_rng(key, 0);
                Poisson::new(mu).expect("validated density").sample(&mut r) as u32
            }
            InitialLaw::Bernoulli(mu) => (rng::unit_f64(rng::stream_at(key, 0)) < mu) as u32,
            InitialLaw::Deterministic(_) => panic!("deterministic laws have no per-site sampler"),
        }
    }
}

/// i.i.d. initial configuration on the window; the halo starts empty.
pub fn sample_initial(law: &InitialLaw, arena: &Arena, seed: u64) -> Result<Configuration> {
    law.validate()?;
    match law {
        InitialLaw::Deterministic(counts) => Configuration::from_counts(arena.clone(), counts),
        _ => {
            let mut cfg = Configuration::empty(arena.clone());
            for site in arena.window_sites() {
                let n = law.sample_site(seed, site);
                cfg.set(site, SiteState::active(n)?)?;
            }
            Ok(cfg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoundaryMode;
    use crate::stats;

    #[test]
    fn deterministic_in_arguments() {
        let f = InstructionField::new(11, 1.0, JumpDistribution::symmetric_2d()).unwrap();
        for j in 1..50 {
            let s = Site::d2(3, -7);
            assert_eq!(f.instruction_at(s, j), f.instruction_at(s, j));
        }
        let g = InstructionField::new(11, 1.0, JumpDistribution::symmetric_2d()).unwrap();
        assert_eq!(f.instruction_at(Site::d2(1, 1), 5), g.instruction_at(Site::d2(1, 1), 5));
    }

    #[test]
    fn sleep_frequency_lambda_one() {
        let f = InstructionField::new(3, 1.0, JumpDistribution::symmetric_1d()).unwrap();
        let n = 1_000_000u64;
        let sleeps = (1..=n).filter(|&j| f.instruction_at(Site::d1(0), j) == Instruction::Sleep).count();
        let p = sleeps as f64 / n as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!((p - 0.5).abs() <= 3.0 * sigma, "sleep frequency {p}");
    }

    #[test]
    fn infinite_lambda_is_jump_only() {
        let f = InstructionField::new(3, f64::INFINITY, JumpDistribution::symmetric_1d()).unwrap();
        assert!(f.is_jump_only());
        let right = (1..10_001)
            .filter(|&j| match f.instruction_at(Site::d1(4), j) {
                Instruction::Jump(z) => z == Offset::d1(1),
                Instruction::Sleep => panic!("sleep instruction in a jump-only field"),
            })
            .count();
        assert!((right as f64 / 10_000.0 - 0.5).abs() < 0.015, "{right}");
    }

    #[test]
    fn rejects_bad_lambda() {
        assert!(InstructionField::new(0, 0.0, JumpDistribution::directed_1d()).is_err());
        assert!(InstructionField::new(0, f64::NAN, JumpDistribution::directed_1d()).is_err());
    }

    #[test]
    fn marginal_chi_square() {
        let lambda = 0.7;
        let jumps = JumpDistribution::biased_2d(0.4).unwrap();
        let f = InstructionField::new(99, lambda, jumps.clone()).unwrap();
        let n = 1_000_000u64;
        let mut counts = vec![0u64; 1 + jumps.entries().len()];
        let key = f.site_key(Site::d2(2, 5));
        for j in 1..=n {
            match f.action(key, j) {
                Action::Sleep => counts[0] += 1,
                Action::Jump(i) => counts[i + 1] += 1,
            }
        }
        let mut probs = vec![sleep_probability(lambda)];
        probs.extend(jumps.entries().iter().map(|&(_, p)| p / (1.0 + lambda)));
        let p_value = stats::chi_square_gof(&counts, &probs);
        assert!(p_value > 1e-3, "chi-square p-value {p_value}");
    }

    #[test]
    fn cross_site_independence() {
        let f = InstructionField::new(5, 1.0, JumpDistribution::symmetric_1d()).unwrap();
        let n = 100_000u64;
        let (a, b) = (f.site_key(Site::d1(0)), f.site_key(Site::d1(1)));
        let xs: Vec<f64> = (1..=n).map(|j| (f.action(a, j) == Action::Sleep) as u8 as f64).collect();
        let ys: Vec<f64> = (1..=n).map(|j| (f.action(b, j) == Action::Sleep) as u8 as f64).collect();
        let r = stats::correlation(&xs, &ys);
        assert!(r.abs() <= 4.0 / (n as f64).sqrt(), "correlation {r}");
    }

    #[test]
    fn jump_law_validation() {
        assert!(JumpDistribution::new(1, vec![(Offset::d1(1), 0.5)]).is_err());
        assert!(JumpDistribution::new(1, vec![(Offset::d1(0), 1.0)]).is_err());
        assert!(JumpDistribution::new(1, vec![(Offset::d1(1), 0.5), (Offset::d1(1), 0.5)]).is_err());
        assert!(JumpDistribution::new(1, vec![(Offset::d2(1, 1), 1.0)]).is_err());
        let j = JumpDistribution::biased_1d(0.75).unwrap();
        assert!((j.drift()[0] - 0.5).abs() < 1e-15);
        assert!(j.is_nearest_neighbor());
        assert!(JumpDistribution::directed_1d().is_directed_right());
    }

    #[test]
    fn deterministic_initial() {
        let a = Arena::line(0, 2, 1, BoundaryMode::Frozen).unwrap();
        let c = sample_initial(&InitialLaw::Deterministic(vec![1, 0, 2]), &a, 0).unwrap();
        assert_eq!(c.window_states(), vec![SiteState::Active(1), SiteState::Empty, SiteState::Active(2)]);
    }

    #[test]
    fn poisson_moments() {
        let a = Arena::line(0, 999_999, 0, BoundaryMode::Dissipative).unwrap();
        let c = sample_initial(&InitialLaw::Poisson(0.5), &a, 17).unwrap();
        let xs: Vec<f64> = c.window_states().iter().map(|s| s.particle_count() as f64).collect();
        let m = stats::mean(&xs);
        assert!((m - 0.5).abs() <= 4.0 * (0.5f64 / 1e6).sqrt(), "mean {m}");

        let c = sample_initial(&InitialLaw::Poisson(1.0), &a, 18).unwrap();
        let xs: Vec<f64> = c.window_states().iter().map(|s| s.particle_count() as f64).collect();
        let ratio = stats::variance(&xs) / stats::mean(&xs);
        assert!((ratio - 1.0).abs() <= 0.01, "dispersion {ratio}");
    }

    #[test]
    fn invalid_densities() {
        let a = Arena::line(0, 2, 1, BoundaryMode::Frozen).unwrap();
        assert_eq!(sample_initial(&InitialLaw::Poisson(0.0), &a, 0), Err(ArwError::InvalidDensity(0.0)));
        assert_eq!(sample_initial(&InitialLaw::Bernoulli(1.5), &a, 0), Err(ArwError::InvalidDensity(1.5)));
    }
}
