//! Order-preserving map over independent tasks, parallel when the
//! `parallel` feature is enabled.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Uses a dedicated pool of `threads` workers, or the global pool.
    Parallel { threads: Option<usize> },
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel { threads: None }
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// `threads = Some(1)` runs sequentially.
    pub fn with_threads(threads: Option<usize>) -> Self {
        match threads {
            Some(1) => Execution::Sequential,
            threads => Execution::Parallel { threads },
        }
    }
}

/// `items.iter().map(f).collect()`, with results in input order whatever the
/// execution mode.
pub fn ordered_map<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => items.iter().map(f).collect(),
        Execution::Parallel { threads } => parallel_map(items, threads, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(items: &[T], threads: Option<usize>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let run = || items.par_iter().map(&f).collect();
    match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(run),
        None => run(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(items: &[T], _threads: Option<usize>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..1000).collect();
        let expect: Vec<u64> = items.iter().map(|i| i * i).collect();
        for exec in [Execution::Sequential, Execution::Parallel { threads: Some(3) }, Execution::default()] {
            assert_eq!(ordered_map(&items, exec, |i| i * i), expect);
        }
    }
}
