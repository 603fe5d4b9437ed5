//! Execution strategy for the batch loops.
//!
//! Every batch entry point takes an [`Execution`]. `Parallel` uses rayon when
//! the crate is built with the `parallel` feature and silently degrades to the
//! sequential path without it, so callers never need their own `cfg`.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Whether this strategy actually runs on the thread pool in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Order-preserving map.
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Map every index pair of two equally long slices, then fold the results
    /// with an associative `combine`.
    pub fn map_reduce<T, U, A, F, C>(self, left: &[T], right: &[U], identity: A, f: F, combine: C) -> A
    where
        T: Sync,
        U: Sync,
        A: Send + Clone + Sync,
        F: Fn(usize, &T, &U) -> A + Sync + Send,
        C: Fn(A, A) -> A + Sync + Send,
    {
        debug_assert_eq!(left.len(), right.len());
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return left
                .par_iter()
                .zip(right.par_iter())
                .enumerate()
                .map(|(i, (l, r))| f(i, l, r))
                .reduce(|| identity.clone(), &combine);
        }
        left.iter()
            .zip(right)
            .enumerate()
            .map(|(i, (l, r))| f(i, l, r))
            .fold(identity, &combine)
    }
}
