//! Lattice sites, finite arenas and configurations.
//!
//! An [`Arena`] is an axis-aligned window `V` of `Z^d` (`d <= 3`) plus a
//! halo ring. Sites are stored densely in lexicographic order of their
//! coordinates. What happens to a particle that leaves the window depends
//! on the [`BoundaryMode`]:
//!
//! * `Frozen`: it lands in the halo and stays there (halo sites never topple);
//! * `Dissipative`: it is deleted and counted in `outside_count`;
//! * `Torus`: coordinates wrap around the window.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ArwError, Result};
use crate::state::SiteState;

/// Coordinates must stay below this in absolute value (keys pack 21 bits per axis).
pub const COORD_LIMIT: i32 = 1 << 20;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Site(pub [i32; 3]);

impl Site {
    pub const ORIGIN: Site = Site([0, 0, 0]);

    pub fn d1(x: i32) -> Self {
        Site([x, 0, 0])
    }

    pub fn d2(x: i32, y: i32) -> Self {
        Site([x, y, 0])
    }

    pub fn shifted(self, by: Offset) -> Self {
        Site([self.0[0] + by.0[0], self.0[1] + by.0[1], self.0[2] + by.0[2]])
    }

    /// Injective packing of the coordinates into 63 bits.
    pub(crate) fn packed(self) -> u64 {
        let f = |c: i32| ((c + COORD_LIMIT) as u64) & ((1 << 21) - 1);
        f(self.0[0]) | (f(self.0[1]) << 21) | (f(self.0[2]) << 42)
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

/// A jump displacement `z`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize)]
pub struct Offset(pub [i32; 3]);

impl Offset {
    pub fn d1(x: i32) -> Self {
        Offset([x, 0, 0])
    }

    pub fn d2(x: i32, y: i32) -> Self {
        Offset([x, y, 0])
    }

    pub fn is_zero(self) -> bool {
        self.0 == [0, 0, 0]
    }

    pub fn sup_norm(self) -> u32 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn l1_norm(self) -> u32 {
        self.0.iter().map(|c| c.unsigned_abs()).sum()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum BoundaryMode {
    Frozen,
    Dissipative,
    Torus,
}

/// Where a jump from a stored site ends up.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Target {
    Index(usize),
    Outside,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Arena {
    dim: usize,
    lo: [i32; 3],
    hi: [i32; 3],
    halo: u32,
    boundary: BoundaryMode,
    // storage box and strides, derived
    slo: [i32; 3],
    extent: [usize; 3],
    stride: [usize; 3],
}

impl Arena {
    /// Window `[lo, hi]` (inclusive, first `dim` axes) with the given halo.
    pub fn new(dim: usize, lo: [i32; 3], hi: [i32; 3], halo: u32, boundary: BoundaryMode) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(ArwError::Arena(format!("dimension {dim} not in 1..=3")));
        }
        if boundary == BoundaryMode::Torus && halo != 0 {
            return Err(ArwError::Arena("torus arenas take no halo".into()));
        }
        let mut lo_n = [0; 3];
        let mut hi_n = [0; 3];
        let mut slo = [0; 3];
        let mut extent = [1usize; 3];
        for k in 0..dim {
            if lo[k] > hi[k] {
                return Err(ArwError::Arena(format!("empty window on axis {k}")));
            }
            let h = halo as i64;
            if (lo[k] as i64 - h) <= -(COORD_LIMIT as i64) || (hi[k] as i64 + h) >= COORD_LIMIT as i64 {
                return Err(ArwError::Arena("coordinates exceed the supported range".into()));
            }
            lo_n[k] = lo[k];
            hi_n[k] = hi[k];
            slo[k] = lo[k] - halo as i32;
            extent[k] = (hi[k] - lo[k]) as usize + 1 + 2 * halo as usize;
        }
        let mut stride = [0usize; 3];
        let mut s = 1usize;
        for k in (0..3).rev() {
            stride[k] = s;
            s = s.checked_mul(extent[k]).ok_or_else(|| ArwError::Arena("arena too large".into()))?;
        }
        if s > 1 << 31 {
            return Err(ArwError::Arena("arena too large".into()));
        }
        Ok(Arena { dim, lo: lo_n, hi: hi_n, halo, boundary, slo, extent, stride })
    }

    /// One-dimensional window `[lo, hi]`.
    pub fn line(lo: i32, hi: i32, halo: u32, boundary: BoundaryMode) -> Result<Self> {
        Self::new(1, [lo, 0, 0], [hi, 0, 0], halo, boundary)
    }

    /// Two-dimensional window `[lo.0, hi.0] x [lo.1, hi.1]`.
    pub fn rect(lo: (i32, i32), hi: (i32, i32), halo: u32, boundary: BoundaryMode) -> Result<Self> {
        Self::new(2, [lo.0, lo.1, 0], [hi.0, hi.1, 0], halo, boundary)
    }

    /// The box `[-r, r]^d`.
    pub fn centered(dim: usize, radius: i32, halo: u32, boundary: BoundaryMode) -> Result<Self> {
        Self::new(dim, [-radius; 3], [radius; 3], halo, boundary)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halo(&self) -> u32 {
        self.halo
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn window_lo(&self) -> Site {
        Site(self.lo)
    }

    pub fn window_hi(&self) -> Site {
        Site(self.hi)
    }

    pub fn storage_len(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn window_len(&self) -> usize {
        (0..self.dim).map(|k| (self.hi[k] - self.lo[k]) as usize + 1).product()
    }

    pub fn in_window(&self, site: Site) -> bool {
        (0..3).all(|k| site.0[k] >= self.lo[k] && site.0[k] <= self.hi[k])
    }

    /// Storage index of `site`, if it lies in the window or the halo.
    pub fn index(&self, site: Site) -> Option<usize> {
        let mut idx = 0;
        for k in 0..3 {
            let c = site.0[k] as i64 - self.slo[k] as i64;
            if c < 0 || c as usize >= self.extent[k] {
                return None;
            }
            idx += c as usize * self.stride[k];
        }
        Some(idx)
    }

    pub fn site(&self, mut idx: usize) -> Site {
        let mut c = [0i32; 3];
        for k in 0..3 {
            c[k] = (idx / self.stride[k]) as i32 + self.slo[k];
            idx %= self.stride[k];
        }
        Site(c)
    }

    pub fn index_in_window(&self, idx: usize) -> bool {
        self.in_window(self.site(idx))
    }

    /// Window sites in lexicographic order.
    pub fn window_sites(&self) -> impl Iterator<Item = Site> + '_ {
        let (lo, hi) = (self.lo, self.hi);
        (lo[0]..=hi[0]).flat_map(move |x| {
            (lo[1]..=hi[1]).flat_map(move |y| (lo[2]..=hi[2]).map(move |z| Site([x, y, z])))
        })
    }

    pub fn window_indices(&self) -> Vec<usize> {
        self.window_sites().map(|s| self.index(s).expect("window site is stored")).collect()
    }

    /// Linear index shift for `offset`; valid whenever the target stays in storage.
    pub fn linear_delta(&self, offset: Offset) -> isize {
        (0..3).map(|k| offset.0[k] as isize * self.stride[k] as isize).sum()
    }

    /// Resolve a jump from the stored site `idx`.
    pub fn target(&self, idx: usize, offset: Offset) -> Target {
        let to = self.site(idx).shifted(offset);
        match self.boundary {
            BoundaryMode::Torus => {
                let mut c = to.0;
                for k in 0..self.dim {
                    let n = self.hi[k] - self.lo[k] + 1;
                    c[k] = (c[k] - self.lo[k]).rem_euclid(n) + self.lo[k];
                }
                Target::Index(self.index(Site(c)).expect("wrapped site is stored"))
            }
            BoundaryMode::Dissipative if !self.in_window(to) => Target::Outside,
            _ => self.index(to).map_or(Target::Outside, Target::Index),
        }
    }

    /// Check that any jump of sup-norm `range` from the window lands in storage.
    pub fn check_range(&self, range: u32) -> Result<()> {
        match self.boundary {
            BoundaryMode::Torus => {
                for k in 0..self.dim {
                    if ((self.hi[k] - self.lo[k] + 1) as u32) < range {
                        return Err(ArwError::Arena("torus smaller than the jump range".into()));
                    }
                }
                Ok(())
            }
            _ if self.halo < range => Err(ArwError::Arena(format!(
                "halo {} is smaller than the jump range {range}",
                self.halo
            ))),
            _ => Ok(()),
        }
    }
}

/// Site states over window and halo, plus the count of dissipated particles.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Configuration {
    arena: Arena,
    states: Vec<SiteState>,
    outside_count: u64,
}

impl Configuration {
    pub fn empty(arena: Arena) -> Self {
        let n = arena.storage_len();
        Configuration { arena, states: vec![SiteState::Empty; n], outside_count: 0 }
    }

    /// Active particle counts over the window, in lexicographic site order.
    pub fn from_counts(arena: Arena, counts: &[u32]) -> Result<Self> {
        if counts.len() != arena.window_len() {
            return Err(ArwError::Arena(format!(
                "{} counts for a window of {} sites",
                counts.len(),
                arena.window_len()
            )));
        }
        let mut cfg = Self::empty(arena);
        let idx = cfg.arena.window_indices();
        for (&i, &n) in idx.iter().zip(counts) {
            cfg.states[i] = SiteState::active(n)?;
        }
        Ok(cfg)
    }

    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    pub fn states(&self) -> &[SiteState] {
        &self.states
    }

    pub fn outside_count(&self) -> u64 {
        self.outside_count
    }

    pub(crate) fn add_outside(&mut self, n: u64) {
        self.outside_count += n;
    }

    #[inline]
    pub fn at(&self, idx: usize) -> SiteState {
        self.states[idx]
    }

    #[inline]
    pub(crate) fn put(&mut self, idx: usize, s: SiteState) {
        self.states[idx] = s;
    }

    /// State at `site`; sites outside storage read as `Empty`.
    pub fn get(&self, site: Site) -> SiteState {
        self.arena.index(site).map_or(SiteState::Empty, |i| self.states[i])
    }

    pub fn set(&mut self, site: Site, state: SiteState) -> Result<()> {
        let i = self
            .arena
            .index(site)
            .ok_or_else(|| ArwError::Arena(format!("site {site:?} is not stored")))?;
        self.states[i] = state;
        Ok(())
    }

    /// Add one particle at `site` (waking a sleeper there).
    pub fn add_particle(&mut self, site: Site) -> Result<()> {
        let s = self.get(site).plus_one()?;
        self.set(site, s)
    }

    /// Particles over window and halo, not counting dissipated ones.
    pub fn total_particles(&self) -> u64 {
        self.states.iter().map(|s| s.particle_count() as u64).sum()
    }

    pub fn window_particles(&self) -> u64 {
        self.arena.window_sites().map(|s| self.get(s).particle_count() as u64).sum()
    }

    pub fn is_stable_in_window(&self) -> bool {
        self.arena.window_sites().all(|s| !self.get(s).is_unstable())
    }

    /// Window states in lexicographic order.
    pub fn window_states(&self) -> Vec<SiteState> {
        self.arena.window_sites().map(|s| self.get(s)).collect()
    }

    /// Pointwise `self <= other` on the sites stored by `self`.
    pub fn le(&self, other: &Configuration) -> bool {
        (0..self.states.len()).all(|i| self.states[i] <= other.get(self.arena.site(i)))
    }
}
