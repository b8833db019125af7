/// Execution strategy for the data-parallel loops.
///
/// `Parallel` falls back to the sequential path when the crate is built
/// without the `parallel` feature. Results never depend on the choice:
/// every reduction is either integer-exact or performed in index order.
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
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Maps `f` over `0..n`, preserving index order in the output.
    pub(crate) fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Folds `0..n` into per-worker accumulators and merges them.
    ///
    /// `merge` must be associative and commutative for the result to be
    /// independent of the partitioning (integer counters are).
    pub(crate) fn fold_range<A, I, F, M>(self, n: usize, init: I, fold: F, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync + Send,
        F: Fn(A, usize) -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n)
                .into_par_iter()
                .fold(&init, &fold)
                .reduce(&init, &merge);
        }
        let _ = &merge;
        (0..n).fold(init(), fold)
    }
}
