//! Execution strategy for the data-parallel loops (enumerations, relation
//! checks). Results are always returned in input order, so the choice never
//! changes an answer.

use std::env;

/// How to run an embarrassingly parallel loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise falls
    /// back to sequential evaluation.
    #[default]
    Parallel,
}

impl Execution {
    /// `FROBSTRUCT_THREADS=1` forces sequential evaluation.
    pub fn from_env() -> Self {
        match env::var("FROBSTRUCT_THREADS").ok().as_deref() {
            Some("1") => Execution::Sequential,
            _ => Execution::Parallel,
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `items`, keeping the input order.
    pub fn map<T, U, F>(self, items: Vec<T>, f: F) -> Vec<U>
    where
        T: Send,
        U: Send,
        F: Fn(T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items.into_par_iter().map(f).collect();
        }
        items.into_iter().map(f).collect()
    }

    /// Maps over the range `0..n`, keeping order.
    pub fn map_range<U, F>(self, n: u64, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(u64) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// First item (in input order) for which `f` returns `Some`.
    pub fn find_first<T, U, F>(self, items: Vec<T>, f: F) -> Option<U>
    where
        T: Send,
        U: Send,
        F: Fn(T) -> Option<U> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items.into_par_iter().filter_map(f).find_first(|_| true);
        }
        items.into_iter().find_map(f)
    }
}

/// Enumeration cap, overridable through `FROBSTRUCT_CAP`.
pub fn enumeration_cap(default: u128) -> u128 {
    env::var("FROBSTRUCT_CAP").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(default)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let seq = Execution::Sequential.map_range(1000, |i| i * i % 97);
        let par = Execution::Parallel.map_range(1000, |i| i * i % 97);
        assert_eq!(seq, par);
        let first = |e: Execution| e.find_first((0..500).collect(), |i: u32| (i % 37 == 36).then_some(i));
        assert_eq!(first(Execution::Sequential), Some(36));
        assert_eq!(first(Execution::Parallel), Some(36));
    }
}
