//! Thread-pool executor for batch model evaluation.

use effmap_core::qoi::Executor;
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "EFFMAP_WORKERS";

/// Worker count from `EFFMAP_WORKERS`, else the available parallelism.
pub fn default_workers() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{WORKERS_ENV}: expected a positive integer, got `{v}`"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs rows on a dedicated rayon pool. Each row is written by exactly one
/// task, so results do not depend on the worker count; on failure the
/// error of the lowest-numbered row is returned.
pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(CliError::Config("workers: must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Config(format!("workers: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn for_each_row(
        &self,
        out: &mut [f64],
        row_len: usize,
        f: &(dyn Fn(usize, &mut [f64]) -> effmap_core::Result<()> + Sync),
    ) -> effmap_core::Result<()> {
        let first_error = self.pool.install(|| {
            out.par_chunks_mut(row_len)
                .enumerate()
                .filter_map(|(i, row)| f(i, row).err().map(|e| (i, e)))
                .min_by_key(|(i, _)| *i)
        });
        first_error.map_or(Ok(()), |(_, e)| Err(e))
    }
}
