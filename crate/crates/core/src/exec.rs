//! Batch execution strategy.
//!
//! Every per-item stage (extraction, filter rules, ROUGE scoring, stats
//! sharding) goes through [`Execution`]. `Parallel` uses rayon when the
//! `parallel` feature is enabled and silently degrades to the sequential
//! path otherwise. Both paths are order-preserving and produce identical
//! results, which the benches and tests rely on.

/// How a batch is evaluated.
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
    /// True when this strategy will actually fan out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `items`, preserving input order in the output.
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

    /// Maps `f` over borrowed items, preserving input order.
    pub fn map_ref<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Folds `items` into per-shard accumulators and merges them.
    ///
    /// `merge` must be associative and `identity` its neutral element;
    /// the result is then independent of how the work was sharded.
    pub fn fold<T, A, ID, F, M>(self, items: &[T], identity: ID, fold: F, merge: M) -> A
    where
        T: Sync,
        A: Send,
        ID: Fn() -> A + Sync + Send,
        F: Fn(A, &T) -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items
                .par_iter()
                .fold(&identity, |acc, item| fold(acc, item))
                .reduce(&identity, &merge);
        }
        let _ = &merge;
        items.iter().fold(identity(), fold)
    }
}

/// Configures the global worker pool. `None` keeps rayon's default (one
/// worker per logical CPU). Has no effect without the `parallel` feature.
pub fn configure_threads(threads: Option<usize>) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        return rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string());
    }
    let _ = threads;
    Ok(())
}
