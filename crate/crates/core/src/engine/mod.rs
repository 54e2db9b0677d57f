//! Diaconis-Fulton toppling engine.
//!
//! An [`Engine`] owns a configuration and an odometer and reads instructions
//! from a borrowed [`InstructionField`]. Toppling site `x` consumes
//! instruction `h(x) + 1` and increments `h(x)`. Only window sites topple;
//! halo sites collect particles that leave the window (`Frozen`), particles
//! leaving a `Dissipative` window are counted and removed, and a `Torus`
//! window wraps.

pub mod harness;

use std::collections::VecDeque;

use rand::Rng;
use serde::Serialize;

use crate::error::{ArwError, Result};
use crate::instructions::{Action, Instruction, InstructionField};
use crate::lattice::{Arena, BoundaryMode, Configuration, Site, Target};
use crate::rng::{self, domain};
use crate::state::SiteState;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToppleMode {
    /// Site must hold an active particle.
    Legal,
    /// Site must hold any particle, sleeping ones included.
    Acceptable,
}

/// Order in which unstable sites are chosen.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Policy {
    Fifo,
    Lifo,
    /// Lexicographic passes, exhausting each site before moving on.
    Sweep,
    UniformRandom(u64),
    /// Exactly these legal topplings, in order.
    Explicit(Vec<Site>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StabilizationStatus {
    Stable,
    CapExceeded,
    /// An explicit sequence ran out with unstable sites left.
    Unstable,
}

/// Per-site toppling counts over the arena storage (zero off the window).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Odometer {
    arena: Arena,
    counts: Vec<u64>,
}

impl Odometer {
    pub fn zero(arena: Arena) -> Self {
        let n = arena.storage_len();
        Odometer { arena, counts: vec![0; n] }
    }

    pub fn get(&self, site: Site) -> u64 {
        self.arena.index(site).map_or(0, |i| self.counts[i])
    }

    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    /// Counts over the window in lexicographic order.
    pub fn window_counts(&self) -> Vec<u64> {
        self.arena.window_sites().map(|s| self.get(s)).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Pointwise `self <= other` over the window of `self`.
    pub fn le(&self, other: &Odometer) -> bool {
        self.arena.window_sites().all(|s| self.get(s) <= other.get(s))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizationResult {
    pub status: StabilizationStatus,
    pub final_config: Configuration,
    pub odometer: Odometer,
    pub topplings_total: u64,
    pub origin_odometer: u64,
}

/// Configuration, odometer and field cursor for one run.
pub struct Engine<'f> {
    field: &'f InstructionField,
    config: Configuration,
    odometer: Vec<u64>,
    keys: Vec<u64>,
    in_window: Vec<bool>,
    deltas: Vec<isize>,
    topplings: u64,
}

impl<'f> Engine<'f> {
    pub fn new(config: Configuration, field: &'f InstructionField) -> Result<Self> {
        let arena = config.arena().clone();
        if arena.dim() != field.jumps().dim() {
            return Err(ArwError::Arena(format!(
                "arena dimension {} but jump law dimension {}",
                arena.dim(),
                field.jumps().dim()
            )));
        }
        arena.check_range(field.jumps().range())?;
        let n = arena.storage_len();
        let mut keys = vec![0u64; n];
        let mut in_window = vec![false; n];
        for i in arena.window_indices() {
            keys[i] = field.site_key(arena.site(i));
            in_window[i] = true;
        }
        let deltas = field.jumps().entries().iter().map(|&(z, _)| arena.linear_delta(z)).collect();
        let mut e = Engine { field, config, odometer: vec![0; n], keys, in_window, deltas, topplings: 0 };
        if field.is_jump_only() {
            for i in arena.window_indices() {
                e.settle_if_alone(i);
            }
        }
        Ok(e)
    }

    pub fn field(&self) -> &InstructionField {
        self.field
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn arena(&self) -> &Arena {
        self.config.arena()
    }

    pub fn topplings(&self) -> u64 {
        self.topplings
    }

    pub fn odometer_at(&self, site: Site) -> u64 {
        self.arena().index(site).map_or(0, |i| self.odometer[i])
    }

    pub fn odometer(&self) -> Odometer {
        Odometer { arena: self.arena().clone(), counts: self.odometer.clone() }
    }

    pub fn is_stable(&self) -> bool {
        self.config.is_stable_in_window()
    }

    /// Unstable window sites, as storage indices in lexicographic order.
    pub fn unstable_indices(&self) -> Vec<usize> {
        self.arena().window_indices().into_iter().filter(|&i| self.config.at(i).is_unstable()).collect()
    }

    #[inline]
    fn settle_if_alone(&mut self, i: usize) {
        if self.config.at(i) == SiteState::Active(1) && self.in_window[i] {
            self.config.put(i, SiteState::Sleeping);
        }
    }

    /// Add one particle at a window site (waking a sleeper there).
    pub fn add_particle(&mut self, site: Site) -> Result<()> {
        let i = self.window_index(site)?;
        let s = self.config.at(i).plus_one()?;
        self.config.put(i, s);
        if self.field.is_jump_only() {
            self.settle_if_alone(i);
        }
        Ok(())
    }

    fn window_index(&self, site: Site) -> Result<usize> {
        match self.arena().index(site) {
            Some(i) if self.in_window[i] => Ok(i),
            _ => Err(ArwError::OutsideWindow(site)),
        }
    }

    /// Topple `site`; returns the instruction consumed.
    pub fn topple(&mut self, site: Site, mode: ToppleMode) -> Result<Instruction> {
        let i = self.window_index(site)?;
        let s = self.config.at(i);
        match mode {
            ToppleMode::Legal if !s.is_unstable() => return Err(ArwError::IllegalToppling(site)),
            ToppleMode::Acceptable if s.is_empty() => return Err(ArwError::NotAcceptable),
            _ => {}
        }
        let action = self.topple_index(i)?;
        Ok(self.field.decode(action))
    }

    /// Topple the window site at storage index `i`, which must hold a particle.
    #[inline]
    pub(crate) fn topple_index(&mut self, i: usize) -> Result<Action> {
        let j = self.odometer[i] + 1;
        let action = self.field.action(self.keys[i], j);
        let s = self.config.at(i);
        match action {
            Action::Sleep => self.config.put(i, s.sleep_apply()?),
            Action::Jump(k) => {
                self.config.put(i, s.minus_one()?);
                match self.resolve(i, k) {
                    Target::Index(t) => {
                        let st = self.config.at(t).plus_one()?;
                        self.config.put(t, st);
                        if self.field.is_jump_only() {
                            self.settle_if_alone(t);
                        }
                    }
                    Target::Outside => self.config.add_outside(1),
                }
                if self.field.is_jump_only() {
                    self.settle_if_alone(i);
                }
            }
        }
        self.odometer[i] = j;
        self.topplings += 1;
        Ok(action)
    }

    #[inline]
    fn resolve(&self, i: usize, k: usize) -> Target {
        match self.arena().boundary() {
            BoundaryMode::Frozen => Target::Index((i as isize + self.deltas[k]) as usize),
            BoundaryMode::Dissipative => {
                let t = (i as isize + self.deltas[k]) as usize;
                if self.in_window[t] {
                    Target::Index(t)
                } else {
                    Target::Outside
                }
            }
            BoundaryMode::Torus => self.arena().target(i, self.field.jumps().entries()[k].0),
        }
    }

    /// Topple policy-chosen unstable sites until the window is stable or
    /// `cap` total topplings (counted over the engine's lifetime) are reached.
    pub fn run(&mut self, policy: &Policy, cap: u64) -> Result<StabilizationStatus> {
        match policy {
            Policy::Fifo => self.run_queue(self.unstable_indices(), cap, false),
            Policy::Lifo => self.run_queue(self.unstable_indices(), cap, true),
            Policy::Sweep => self.run_sweep(cap),
            Policy::UniformRandom(seed) => self.run_random(*seed, cap),
            Policy::Explicit(seq) => {
                for &s in seq {
                    if self.topplings >= cap {
                        return Ok(StabilizationStatus::CapExceeded);
                    }
                    self.topple(s, ToppleMode::Legal)?;
                }
                Ok(if self.is_stable() { StabilizationStatus::Stable } else { StabilizationStatus::Unstable })
            }
        }
    }

    /// Relax starting from the given unstable sites, assuming every other
    /// window site is stable.
    pub fn relax_from(&mut self, sites: &[Site], cap: u64) -> Result<StabilizationStatus> {
        let idx = sites.iter().map(|&s| self.window_index(s)).collect::<Result<Vec<_>>>()?;
        self.run_queue(idx, cap, false)
    }

    fn run_queue(&mut self, start: Vec<usize>, cap: u64, lifo: bool) -> Result<StabilizationStatus> {
        let mut queued = vec![false; self.odometer.len()];
        let mut work: VecDeque<usize> = VecDeque::with_capacity(start.len());
        for i in start {
            if !queued[i] && self.config.at(i).is_unstable() {
                queued[i] = true;
                work.push_back(i);
            }
        }
        while let Some(i) = if lifo { work.pop_back() } else { work.pop_front() } {
            queued[i] = false;
            if !self.config.at(i).is_unstable() {
                continue;
            }
            if self.topplings >= cap {
                return Ok(StabilizationStatus::CapExceeded);
            }
            if let Action::Jump(k) = self.topple_index(i)? {
                if let Target::Index(t) = self.resolve(i, k) {
                    if self.in_window[t] && !queued[t] && self.config.at(t).is_unstable() {
                        queued[t] = true;
                        work.push_back(t);
                    }
                }
            }
            if !queued[i] && self.config.at(i).is_unstable() {
                queued[i] = true;
                work.push_back(i);
            }
        }
        Ok(StabilizationStatus::Stable)
    }

    fn run_sweep(&mut self, cap: u64) -> Result<StabilizationStatus> {
        let order = self.arena().window_indices();
        loop {
            let before = self.topplings;
            for &i in &order {
                while self.config.at(i).is_unstable() {
                    if self.topplings >= cap {
                        return Ok(StabilizationStatus::CapExceeded);
                    }
                    self.topple_index(i)?;
                }
            }
            if self.topplings == before {
                return Ok(StabilizationStatus::Stable);
            }
        }
    }

    fn run_random(&mut self, seed: u64, cap: u64) -> Result<StabilizationStatus> {
        let mut rng = rng::sequential_rng(seed, domain::POLICY);
        let mut pos = vec![usize::MAX; self.odometer.len()];
        let mut set = self.unstable_indices();
        for (k, &i) in set.iter().enumerate() {
            pos[i] = k;
        }
        while !set.is_empty() {
            if self.topplings >= cap {
                return Ok(StabilizationStatus::CapExceeded);
            }
            let i = set[rng.random_range(0..set.len())];
            let touched = match self.topple_index(i)? {
                Action::Jump(k) => match self.resolve(i, k) {
                    Target::Index(t) if self.in_window[t] => Some(t),
                    _ => None,
                },
                Action::Sleep => None,
            };
            for j in std::iter::once(i).chain(touched) {
                let unstable = self.config.at(j).is_unstable();
                if unstable && pos[j] == usize::MAX {
                    pos[j] = set.len();
                    set.push(j);
                } else if !unstable && pos[j] != usize::MAX {
                    let k = pos[j];
                    let last = *set.last().unwrap();
                    set.swap_remove(k);
                    if last != j {
                        pos[last] = k;
                    }
                    pos[j] = usize::MAX;
                }
            }
        }
        Ok(StabilizationStatus::Stable)
    }

    pub fn into_result(self, status: StabilizationStatus) -> StabilizationResult {
        let origin_odometer = self.odometer_at(Site::ORIGIN);
        let arena = self.config.arena().clone();
        StabilizationResult {
            status,
            topplings_total: self.topplings,
            origin_odometer,
            odometer: Odometer { arena, counts: self.odometer },
            final_config: self.config,
        }
    }
}

/// `100 · |V| · max(1, μ)`.
pub fn default_cap(window_len: usize, mu: f64) -> u64 {
    (100.0 * window_len as f64 * mu.max(1.0)).ceil() as u64
}

/// Stabilize `config` in its window with legal topplings chosen by `policy`.
pub fn stabilize(
    config: Configuration,
    field: &InstructionField,
    policy: &Policy,
    cap: u64,
) -> Result<StabilizationResult> {
    if cap == 0 {
        return Err(ArwError::InvalidParams("cap must be positive".into()));
    }
    let mut e = Engine::new(config, field)?;
    let status = e.run(policy, cap)?;
    Ok(e.into_result(status))
}

/// Apply `sequence` as acceptable topplings; the status records whether the
/// result is stable in the window.
pub fn stabilize_acceptable(
    config: Configuration,
    field: &InstructionField,
    sequence: &[Site],
) -> Result<StabilizationResult> {
    let mut e = Engine::new(config, field)?;
    for &s in sequence {
        e.topple(s, ToppleMode::Acceptable)?;
    }
    let status = if e.is_stable() { StabilizationStatus::Stable } else { StabilizationStatus::Unstable };
    Ok(e.into_result(status))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instructions::JumpDistribution;

    fn line(lo: i32, hi: i32, counts: &[u32]) -> Configuration {
        Configuration::from_counts(Arena::line(lo, hi, 1, BoundaryMode::Frozen).unwrap(), counts).unwrap()
    }

    /// Seed whose first instruction at `site` is `want`.
    fn seed_with_first(lambda: f64, jumps: &JumpDistribution, site: Site, want: Instruction) -> InstructionField {
        (0..)
            .map(|s| InstructionField::new(s, lambda, jumps.clone()).unwrap())
            .find(|f| f.instruction_at(site, 1) == want)
            .unwrap()
    }

    #[test]
    fn sleep_instruction_on_lone_particle() {
        let f = seed_with_first(1.0, &JumpDistribution::directed_1d(), Site::d1(0), Instruction::Sleep);
        let mut e = Engine::new(line(0, 0, &[1]), &f).unwrap();
        assert_eq!(e.topple(Site::d1(0), ToppleMode::Legal).unwrap(), Instruction::Sleep);
        assert_eq!(e.config().get(Site::d1(0)), SiteState::Sleeping);
        assert_eq!(e.odometer_at(Site::d1(0)), 1);
    }

    #[test]
    fn acceptable_toppling_moves_sleeper() {
        let f = seed_with_first(1.0, &JumpDistribution::directed_1d(), Site::d1(0), Instruction::Sleep);
        let j = (1..).find(|&j| matches!(f.instruction_at(Site::d1(0), j), Instruction::Jump(_))).unwrap();
        let mut e = Engine::new(line(0, 1, &[1, 0]), &f).unwrap();
        for _ in 1..j {
            e.topple(Site::d1(0), ToppleMode::Acceptable).unwrap();
        }
        assert_eq!(e.config().get(Site::d1(0)), SiteState::Sleeping);
        assert_eq!(e.topple(Site::d1(0), ToppleMode::Legal), Err(ArwError::IllegalToppling(Site::d1(0))));
        e.topple(Site::d1(0), ToppleMode::Acceptable).unwrap();
        assert_eq!(e.config().get(Site::d1(0)), SiteState::Empty);
        assert_eq!(e.config().get(Site::d1(1)), SiteState::Active(1));
        assert_eq!(e.odometer_at(Site::d1(0)), j);
    }

    #[test]
    fn empty_site_refuses_both_modes() {
        let f = InstructionField::new(0, 1.0, JumpDistribution::directed_1d()).unwrap();
        let mut e = Engine::new(line(0, 1, &[0, 0]), &f).unwrap();
        assert_eq!(e.topple(Site::d1(0), ToppleMode::Acceptable), Err(ArwError::NotAcceptable));
        assert_eq!(e.topple(Site::d1(0), ToppleMode::Legal), Err(ArwError::IllegalToppling(Site::d1(0))));
        assert_eq!(e.topple(Site::d1(2), ToppleMode::Acceptable), Err(ArwError::OutsideWindow(Site::d1(2))));
    }

    #[test]
    fn empty_configuration_is_stable() {
        let f = InstructionField::new(0, 1.0, JumpDistribution::symmetric_2d()).unwrap();
        let a = Arena::centered(2, 3, 1, BoundaryMode::Frozen).unwrap();
        let r = stabilize(Configuration::empty(a), &f, &Policy::Fifo, 10).unwrap();
        assert_eq!(r.status, StabilizationStatus::Stable);
        assert_eq!(r.odometer.total(), 0);
    }

    #[test]
    fn fifo_and_lifo_agree() {
        let f = InstructionField::new(9, 1.0, JumpDistribution::directed_1d()).unwrap();
        let c = line(-3, 0, &[2, 0, 1, 0]);
        let a = stabilize(c.clone(), &f, &Policy::Fifo, 1000).unwrap();
        let b = stabilize(c, &f, &Policy::Lifo, 1000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn halo_range_is_checked() {
        let f = InstructionField::new(0, 1.0, JumpDistribution::directed_1d()).unwrap();
        let c = Configuration::empty(Arena::line(0, 3, 0, BoundaryMode::Frozen).unwrap());
        assert!(Engine::new(c, &f).is_err());
    }

    #[test]
    fn dissipative_conserves_mass() {
        let f = InstructionField::new(2, 0.5, JumpDistribution::symmetric_1d()).unwrap();
        let a = Arena::line(0, 9, 1, BoundaryMode::Dissipative).unwrap();
        let c = Configuration::from_counts(a, &[3, 0, 2, 5, 0, 1, 0, 0, 4, 1]).unwrap();
        let r = stabilize(c, &f, &Policy::Fifo, 1_000_000).unwrap();
        assert_eq!(r.status, StabilizationStatus::Stable);
        assert_eq!(r.final_config.total_particles() + r.final_config.outside_count(), 16);
    }

    #[test]
    fn jump_only_lone_particles_sleep() {
        let f = InstructionField::new(5, f64::INFINITY, JumpDistribution::symmetric_1d()).unwrap();
        let c = line(0, 4, &[1, 0, 3, 0, 1]);
        let r = stabilize(c, &f, &Policy::Fifo, 1_000_000).unwrap();
        assert_eq!(r.status, StabilizationStatus::Stable);
        for s in r.final_config.window_states() {
            assert!(matches!(s, SiteState::Empty | SiteState::Sleeping));
        }
    }

    #[test]
    fn jump_only_settles_at_no_cost() {
        let f = InstructionField::new(5, f64::INFINITY, JumpDistribution::symmetric_1d()).unwrap();
        let r = stabilize(line(0, 2, &[1, 0, 1]), &f, &Policy::Fifo, 10).unwrap();
        assert_eq!(r.topplings_total, 0);
        assert_eq!(r.final_config.window_states(), vec![SiteState::Sleeping, SiteState::Empty, SiteState::Sleeping]);
    }

    #[test]
    fn cap_is_reported() {
        let f = InstructionField::new(1, 0.01, JumpDistribution::symmetric_1d()).unwrap();
        let r = stabilize(line(0, 4, &[5, 5, 5, 5, 5]), &f, &Policy::Fifo, 3).unwrap();
        assert_eq!(r.status, StabilizationStatus::CapExceeded);
        assert_eq!(r.topplings_total, 3);
    }

    #[test]
    fn torus_wraps() {
        let f = InstructionField::new(1, 1.0, JumpDistribution::directed_1d()).unwrap();
        let a = Arena::line(0, 4, 0, BoundaryMode::Torus).unwrap();
        let c = Configuration::from_counts(a, &[0, 0, 0, 0, 3]).unwrap();
        let r = stabilize(c, &f, &Policy::Fifo, 100_000).unwrap();
        assert_eq!(r.final_config.total_particles(), 3);
        assert_eq!(r.final_config.outside_count(), 0);
    }
}
