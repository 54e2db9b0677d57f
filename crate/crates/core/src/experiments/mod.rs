//! Fixation and activity experiments.
//!
//! Every experiment is a pure function of its parameters and seed. Sweeps
//! over replicates use `rng::replicate_seed(seed, r)` for replicate `r` and
//! aggregate in replicate order, so results do not depend on scheduling.

pub mod animals;
pub mod ghosts;
pub mod phase;
pub mod recursion;
pub mod taggi;
pub mod traps;

/// Map `f` over replicate indices `0..reps`, in parallel when enabled,
/// returning results in index order.
pub fn map_replicates<T, F>(reps: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..reps).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..reps).map(f).collect()
    }
}
