//! Batch execution of independent replicates.
//!
//! Replicates are embarrassingly parallel: each one owns its generator
//! (seeded from base seed + index) and never shares mutable state. Results
//! are returned in index order, so the output is byte-identical whether the
//! batch ran on one thread or many. The `parallel` feature (on by default)
//! fans batches out over rayon; without it everything runs sequentially
//! through the same interface.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Runs `f(0..count)` and collects results in index order, in parallel when
/// the `parallel` feature is enabled.
pub fn run_replicates<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Always-sequential twin of [`run_replicates`]; the reference ordering for
/// equivalence checks and benchmarks.
pub fn run_replicates_sequential<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}

/// Caps the worker count for subsequent parallel batches. Call once, before
/// the first batch; later calls fail harmlessly. Without the `parallel`
/// feature this is a no-op and the cap is irrelevant.
pub fn limit_threads(jobs: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::dynamics::run_episode;
    use crate::game::GameMatrix;
    use crate::policy::{PolicyRecommender, RewirePolicy};
    use crate::rng::replicate_seed;

    #[test]
    fn preserves_index_order() {
        let out = run_replicates(100, |i| i * i);
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn parallel_equals_sequential_for_episodes() {
        let game = GameMatrix::prisoners_dilemma();
        let run = |i: usize| {
            let cfg = SimConfig::new(20, 4, 0.1, 1.0, 500, replicate_seed(77, i)).unwrap();
            let mut rec = PolicyRecommender::new(RewirePolicy::RANDOM);
            run_episode(&cfg, &game, &mut rec).unwrap()
        };
        let par = run_replicates(8, run);
        let seq = run_replicates_sequential(8, run);
        assert_eq!(par, seq);
    }

    #[test]
    fn empty_batch() {
        let out: Vec<u8> = run_replicates(0, |_| unreachable!());
        assert!(out.is_empty());
    }
}
