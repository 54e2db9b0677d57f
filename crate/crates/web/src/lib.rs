//! Browser demo: stabilize a box, drive a box to criticality, and sample the
//! directed-walk escape count.

use arw_core::experiments::recursion::directed_recursion;
use arw_core::models::soc::{soc_run, SocParams};
use arw_core::{
    sample_initial, stabilize, Arena, ArwError, BoundaryMode, InitialLaw, InstructionField, JumpDistribution, Policy,
    SiteState, StabilizationStatus,
};
use wasm_bindgen::prelude::*;

fn js_err(e: ArwError) -> String {
    e.to_string()
}

/// Final state of a stabilized square box.
#[wasm_bindgen]
pub struct Grid {
    side: u32,
    states: Vec<i32>,
    odometer: Vec<u32>,
    topplings: u64,
    stable: bool,
}

#[wasm_bindgen]
impl Grid {
    #[wasm_bindgen(getter)]
    pub fn side(&self) -> u32 {
        self.side
    }

    /// Row-major site states: `-1` sleeping, `0` empty, `n` active particles.
    pub fn states(&self) -> Vec<i32> {
        self.states.clone()
    }

    /// Row-major toppling counts.
    pub fn odometer(&self) -> Vec<u32> {
        self.odometer.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn topplings(&self) -> f64 {
        self.topplings as f64
    }

    #[wasm_bindgen(getter)]
    pub fn stable(&self) -> bool {
        self.stable
    }
}

/// Stabilize Poisson(`mu`) particles on a `side × side` box with symmetric
/// nearest-neighbour jumps; mass leaving the box is lost.
#[wasm_bindgen]
pub fn stabilize_grid(side: u32, mu: f64, lambda: f64, seed: u32, cap: f64) -> Result<Grid, String> {
    if !(1..=256).contains(&side) {
        return Err(String::from("side must be in 1..=256"));
    }
    if !(cap >= 1.0) {
        return Err(String::from("cap must be at least 1"));
    }
    let hi = side as i32 - 1;
    let arena = Arena::rect((0, 0), (hi, hi), 1, BoundaryMode::Dissipative).map_err(js_err)?;
    let config = sample_initial(&InitialLaw::Poisson(mu), &arena, seed as u64).map_err(js_err)?;
    let field = InstructionField::new(seed as u64, lambda, JumpDistribution::symmetric_2d()).map_err(js_err)?;
    let res = stabilize(config, &field, &Policy::Fifo, cap as u64).map_err(js_err)?;
    let states = res
        .final_config
        .window_states()
        .into_iter()
        .map(|s| match s {
            SiteState::Empty => 0,
            SiteState::Sleeping => -1,
            SiteState::Active(n) => n.min(i32::MAX as u32) as i32,
        })
        .collect();
    let odometer = res.odometer.window_counts().into_iter().map(|c| c.min(u32::MAX as u64) as u32).collect();
    Ok(Grid {
        side,
        states,
        odometer,
        topplings: res.topplings_total,
        stable: res.status == StabilizationStatus::Stable,
    })
}

/// Density trace of the driven-dissipative box: alternating
/// `(additions, density)` pairs.
#[wasm_bindgen]
pub fn soc_trace(l: i32, lambda: f64, additions: u32, seed: u32) -> Result<Vec<f64>, String> {
    if !(3..=128).contains(&l) {
        return Err(String::from("L must be in 3..=128"));
    }
    let mut p = SocParams::new(l, 1, lambda, JumpDistribution::symmetric_1d(), additions as u64, seed as u64);
    p.sample_every = (additions as u64 / 400).max(1);
    let trace = soc_run(&p).map_err(js_err)?;
    Ok(trace.samples.iter().flat_map(|s| [s.additions as f64, s.density]).collect())
}

/// Median escape count `N_L` of the totally asymmetric walk for each `mu`.
#[wasm_bindgen]
pub fn directed_medians(l: u32, lambda: f64, mus: Vec<f64>, reps: u32, seed: u32) -> Result<Vec<f64>, String> {
    if l == 0 || l > 1 << 16 {
        return Err(String::from("L must be in 1..=65536"));
    }
    if reps == 0 {
        return Err(String::from("reps must be positive"));
    }
    mus.iter()
        .map(|&mu| directed_recursion(l, mu, lambda, seed as u64, reps as u64).map(|s| s.median as f64).map_err(js_err))
        .collect()
}
