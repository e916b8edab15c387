//! Execution policy for the data-parallel loops and seeded RNG streams.
//!
//! All parallel work is expressed as an indexed map whose output order is the
//! index order, so reductions downstream are sequential and deterministic.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

impl ExecMode {
    /// True when work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// Evaluate `f(0), ..., f(n-1)` and collect the results in index order.
pub fn map_indexed<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = mode;
    (0..n).map(f).collect()
}

/// Map over a slice, preserving order.
pub fn map_slice<S, T, F>(mode: ExecMode, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    map_indexed(mode, items.len(), |i| f(&items[i]))
}

/// Independent ChaCha stream for `(seed, stream)`. Streams with different ids
/// never overlap, so replica `i` sees the same numbers regardless of how many
/// replicas run or in which order.
pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for item `index` of a labelled family (`tag` separates unrelated
/// consumers sharing a seed).
pub fn stream_id(tag: u32, index: u64) -> u64 {
    ((tag as u64) << 40) ^ index
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn modes_agree() {
        let f = |i: usize| {
            let mut r = stream_rng(7, i as u64);
            r.random::<f64>()
        };
        let a = map_indexed(ExecMode::Sequential, 64, f);
        let b = map_indexed(ExecMode::Parallel, 64, f);
        assert_eq!(a, b);
    }

    #[test]
    fn streams_differ() {
        let a: u64 = stream_rng(1, 0).random();
        let b: u64 = stream_rng(1, 1).random();
        assert_ne!(a, b);
    }
}
