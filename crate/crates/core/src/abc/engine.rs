use rayon::prelude::*;

use crate::error::{Error, Result};

/// Worker pool for replications. Results never depend on the worker count.
pub struct Engine {
    pool: rayon::ThreadPool,
}

impl Engine {
    /// `threads == 0` uses one worker per available core.
    pub fn new(threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Evaluates `f(0..n)` in parallel and returns the results in index order.
    pub fn map<T: Send, G: Fn(usize) -> Result<T> + Sync>(&self, n: usize, f: G) -> Result<Vec<T>> {
        self.pool.install(|| (0..n).into_par_iter().map(|i| f(i)).collect())
    }

    pub fn install<T: Send, G: FnOnce() -> T + Send>(&self, f: G) -> T {
        self.pool.install(f)
    }
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("threads", &self.threads()).finish()
    }
}
