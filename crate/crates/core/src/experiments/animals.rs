//! Exhaustive search over lattice animals through the origin.
//!
//! A finite connected `V` is internally fillable when its initial weight
//! `w(V) = Σ_{x∈V} η(x)` is at least `|V|`. Every 4-connected subset of the
//! window containing the origin, up to a size cap, is enumerated exactly
//! once (Redelmeier's method).

use serde::Serialize;

use crate::error::{ArwError, Result};
use crate::lattice::{Configuration, Site};

/// Largest size cap accepted; the number of animals grows exponentially.
pub const MAX_SIZE_CAP: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnimalReport {
    pub size_cap: usize,
    /// `max w(V)/|V|` over animals of size `k + 1`.
    pub max_ratio: Vec<f64>,
    /// Some animal of size `k + 1` is internally fillable.
    pub fillable: Vec<bool>,
    /// Number of animals of size `k + 1`.
    pub counted: Vec<u64>,
}

struct Search<'a> {
    cap: usize,
    weight: &'a [u32],
    neighbours: &'a [[usize; 4]],
    seen: Vec<bool>,
    best: Vec<u64>,
    counted: Vec<u64>,
}

const NONE: usize = usize::MAX;

impl Search<'_> {
    fn grow(&mut self, untried: &mut Vec<usize>, size: usize, w: u64) {
        while let Some(v) = untried.pop() {
            let (size, w) = (size + 1, w + self.weight[v] as u64);
            self.counted[size - 1] += 1;
            self.best[size - 1] = self.best[size - 1].max(w);
            if size < self.cap {
                let mut next = untried.clone();
                let mut added = Vec::new();
                for &u in &self.neighbours[v] {
                    if u != NONE && !self.seen[u] {
                        self.seen[u] = true;
                        added.push(u);
                        next.push(u);
                    }
                }
                self.grow(&mut next, size, w);
                for u in added {
                    self.seen[u] = false;
                }
            }
        }
    }
}

/// Enumerate connected subsets of the window that contain the origin.
pub fn greedy_animal_max(config: &Configuration, size_cap: usize) -> Result<AnimalReport> {
    if size_cap > MAX_SIZE_CAP {
        return Err(ArwError::SizeCapTooLarge(size_cap));
    }
    let arena = config.arena();
    if arena.dim() != 2 {
        return Err(ArwError::Arena("lattice animals are enumerated in two dimensions".into()));
    }
    if !arena.in_window(Site::ORIGIN) {
        return Err(ArwError::OutsideWindow(Site::ORIGIN));
    }
    let n = arena.storage_len();
    let mut weight = vec![0u32; n];
    let mut neighbours = vec![[NONE; 4]; n];
    for s in arena.window_sites() {
        let i = arena.index(s).unwrap();
        weight[i] = config.at(i).particle_count();
        let [x, y, _] = s.0;
        for (k, t) in [Site::d2(x + 1, y), Site::d2(x - 1, y), Site::d2(x, y + 1), Site::d2(x, y - 1)]
            .into_iter()
            .enumerate()
        {
            if arena.in_window(t) {
                neighbours[i][k] = arena.index(t).unwrap();
            }
        }
    }
    let root = arena.index(Site::ORIGIN).unwrap();
    let mut search = Search {
        cap: size_cap,
        weight: &weight,
        neighbours: &neighbours,
        seen: vec![false; n],
        best: vec![0; size_cap],
        counted: vec![0; size_cap],
    };
    if size_cap > 0 {
        search.seen[root] = true;
        search.grow(&mut vec![root], 0, 0);
    }
    let max_ratio: Vec<f64> = search.best.iter().enumerate().map(|(k, &b)| b as f64 / (k + 1) as f64).collect();
    Ok(AnimalReport {
        size_cap,
        fillable: search.best.iter().enumerate().map(|(k, &b)| b >= (k + 1) as u64).collect(),
        counted: search.counted,
        max_ratio,
    })
}
