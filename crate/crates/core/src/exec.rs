//! Execution policy for the data-parallel parts of the pipeline.
//!
//! Results never depend on the policy: every parallel loop writes disjoint
//! outputs with the same per-element arithmetic as the sequential loop.

/// How row-parallel loops are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled, and runs
    /// sequentially otherwise.
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Calls `f(row_index, row)` for every `width`-long row of `data`.
pub(crate) fn for_each_row<F>(exec: Exec, data: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        data.par_chunks_mut(width)
            .enumerate()
            .for_each(|(y, row)| f(y, row));
        return;
    }
    let _ = exec;
    for (y, row) in data.chunks_mut(width).enumerate() {
        f(y, row);
    }
}

/// Fallible variant of [`for_each_row`]; returns one of the errors if any row fails.
pub(crate) fn try_for_each_row<F, E>(exec: Exec, data: &mut [f64], width: usize, f: F) -> Result<(), E>
where
    F: Fn(usize, &mut [f64]) -> Result<(), E> + Sync + Send,
    E: Send,
{
    if width == 0 {
        return Ok(());
    }
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return data
            .par_chunks_mut(width)
            .enumerate()
            .try_for_each(|(y, row)| f(y, row));
    }
    let _ = exec;
    data.chunks_mut(width)
        .enumerate()
        .try_for_each(|(y, row)| f(y, row))
}

/// Runs `f` on a dedicated pool of `threads` workers. Without the
/// `parallel` feature this just calls `f`.
pub fn with_threads<R, F>(threads: usize, f: F) -> R
where
    F: FnOnce() -> R + Send,
    R: Send,
{
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
        {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}
