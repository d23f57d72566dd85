use fpt_core::walk::Executor;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::CliError;

/// Spreads path chunks over a dedicated rayon pool. Results come back in
/// chunk order, so estimates do not depend on the number of workers.
pub struct Rayon {
    pool: ThreadPool,
}

impl Rayon {
    /// `workers == 0` uses one thread per available core.
    pub fn new(workers: usize) -> Result<Self, CliError> {
        let pool = ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::usage(format!("cannot start {workers} workers: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Rayon {
    fn map_chunks<T, F>(&self, n_chunks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n_chunks).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fpt_core::walk::{estimate_exp_moment_direct, Sequential};
    use fpt_core::{IncrementSpec, McConfig, Quantity};

    #[test]
    fn matches_sequential_bit_for_bit() {
        let spec = IncrementSpec::exp_difference(1.0, 2.0).unwrap();
        let cfg = McConfig::default().with_paths(20_000).with_seed(11);
        let seq = estimate_exp_moment_direct(&spec, 0.05, 1.0, Quantity::Rho, &cfg, &Sequential).unwrap();
        let par = estimate_exp_moment_direct(&spec, 0.05, 1.0, Quantity::Rho, &cfg, &Rayon::new(4).unwrap()).unwrap();
        assert_eq!(seq.mean.to_bits(), par.mean.to_bits());
        assert_eq!(seq.std_error.to_bits(), par.std_error.to_bits());
    }
}
