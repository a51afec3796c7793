//! Data-parallel helpers.
//!
//! With the `parallel` feature the hot loops (grid evaluation, semigroup
//! application, random walkers, oracle sweeps) fan out over rayon's global
//! pool. Without it, or when [`Exec::Sequential`] is requested, they run on
//! the calling thread. Results are always collected in index order so both
//! paths produce identical output.

/// Execution strategy for batch evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Map `f` over `0..n`, collecting in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    /// Largest value of `f` over `0..n` (0 for an empty range).
    pub fn max<F>(self, n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        self.map(n, f).into_iter().fold(0.0, f64::max)
    }
}
