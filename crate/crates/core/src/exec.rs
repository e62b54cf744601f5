//! Data-parallel helpers with a sequential fallback.
//!
//! Every batch evaluation in the crate (brute-force minimizers, exhaustive
//! enumerations, sweeps) goes through [`Execution`]. With the `parallel`
//! feature disabled, [`Execution::Parallel`] silently runs sequentially, so
//! results never depend on the feature set. All reductions are performed on
//! index-ordered output, which keeps them order-independent.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
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
    /// True when work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Maps `f` over `start..end`, preserving order.
    pub fn map_range<R, F>(self, start: u64, end: u64, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(u64) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return (start..end).into_par_iter().map(f).collect();
        }
        (start..end).map(f).collect()
    }

    /// Returns the index in `start..end` minimizing `f`, smallest index on ties.
    pub fn argmin_range<F>(self, start: u64, end: u64, f: F) -> Option<(u64, f64)>
    where
        F: Fn(u64) -> f64 + Sync + Send,
    {
        let pick = |a: (u64, f64), b: (u64, f64)| {
            if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
                b
            } else {
                a
            }
        };
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return (start..end).into_par_iter().map(|i| (i, f(i))).reduce_with(pick);
        }
        (start..end).map(|i| (i, f(i))).reduce(pick)
    }
}
