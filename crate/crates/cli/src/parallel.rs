use gwrk_core::diagnostics::ReplicaRunner;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// Replicas on a rayon pool. Results come back in replica order, so the
/// outcome does not depend on the number of threads.
pub struct ThreadPool {
    pool: rayon::ThreadPool,
}

impl ThreadPool {
    /// `None` uses every available core.
    pub fn new(threads: Option<usize>) -> CliResult<Self> {
        if threads == Some(0) {
            return Err(CliError::Invalid("--threads must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl ReplicaRunner for ThreadPool {
    fn run<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync,
    {
        self.pool.install(|| (0..count).into_par_iter().map(&f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let pool = ThreadPool::new(Some(3)).unwrap();
        assert_eq!(pool.threads(), 3);
        let out = pool.run(1000, |r| r * r);
        assert!(out.iter().enumerate().all(|(i, &v)| v == (i * i) as u64));
        assert!(ThreadPool::new(Some(0)).is_err());
    }
}
