use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Maps a closure over `0..n` and returns results in index order.
///
/// Implementations may evaluate indices concurrently, but the returned vector
/// must be ordered by index so downstream reductions are scheduling-independent.
pub trait Executor: Sync {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// Seed of ensemble member `index` under base seed `base`.
///
/// ChaCha8 keyed by `base`, stream `index`, first output word. Members are
/// independent of each other and of evaluation order.
pub fn realization_seed(base: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(index);
    rng.next_u64()
}
