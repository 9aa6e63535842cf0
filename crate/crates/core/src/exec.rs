// SPDX-License-Identifier: Apache-2.0

//! Execution strategy for the data-parallel loops (sweeps, Monte Carlo,
//! per-pixel and per-point work).
//!
//! Work is always cut into the same fixed chunks and partial results are
//! combined in chunk order, so both strategies return bit-identical values.
//! Without the `parallel` feature, [`Exec::Parallel`] runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub(crate) fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        for exec in [Exec::Sequential, Exec::Parallel] {
            let v = exec.map(1000, |i| i * 3);
            assert!(v.iter().enumerate().all(|(i, &x)| x == i * 3));
        }
    }
}
