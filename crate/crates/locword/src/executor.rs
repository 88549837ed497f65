//! Worker pool backing the core `Executor` trait.

use locword_core::Executor;
use rayon::prelude::*;

use crate::error::{CliError, CliResult, ExitCode};

/// A rayon pool of fixed size. Results come back in index order, so output
/// never depends on the worker count.
pub struct PoolExecutor {
    pool: rayon::ThreadPool,
}

impl PoolExecutor {
    /// `workers = None` uses the available parallelism.
    pub fn new(workers: Option<usize>) -> CliResult<Self> {
        let n = match workers {
            Some(0) => return Err(CliError::usage("--workers must be at least 1")),
            Some(n) => n,
            None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::new(ExitCode::Internal, format!("worker pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for PoolExecutor {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use locword_core::Sequential;

    #[test]
    fn matches_sequential_order() {
        let pool = PoolExecutor::new(Some(3)).unwrap();
        let f = |i: usize| (i * 7919) % 101;
        assert_eq!(pool.map_indexed(500, f), Sequential.map_indexed(500, f));
        assert_eq!(pool.workers(), 3);
        assert!(PoolExecutor::new(Some(0)).is_err());
    }
}
