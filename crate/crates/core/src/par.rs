//! Data-parallel execution of independent jobs (ensemble members, benchmark
//! cells). Built on rayon when the `parallel` feature is enabled; without it
//! every [`Execution`] mode runs sequentially.
//!
//! Results are always returned in job-index order, so the two modes produce
//! identical output whenever each job is deterministic in its own inputs.

/// How a batch of independent jobs is scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon's global pool. Falls back to sequential without the `parallel`
    /// feature.
    #[default]
    Parallel,
}

impl Execution {
    /// True when jobs will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Runs `job(i)` for `i in 0..n` and collects the results in index order.
pub fn map_indexed<T, F>(n: usize, exec: Execution, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec == Execution::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(job).collect();
    }
    let _ = exec;
    (0..n).map(job).collect()
}

/// Number of worker threads a parallel batch may use.
pub fn current_num_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let seq = map_indexed(100, Execution::Sequential, |i| i * i);
        let par = map_indexed(100, Execution::Parallel, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[7], 49);
    }
}
