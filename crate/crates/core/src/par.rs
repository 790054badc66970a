//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the helpers run on the rayon pool
//! unless the process-wide policy is switched to [`Execution::Sequential`].
//! Without the feature they are always sequential. Every helper preserves
//! index order in its output, and all floating-point reductions built on top
//! of them are performed sequentially in index order, so results are
//! bitwise identical under either policy.

use std::sync::atomic::{AtomicBool, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

/// Below this many items the helpers stay sequential; rayon's scheduling
/// overhead dominates for the small per-item work in this crate.
pub const MIN_PARALLEL_LEN: usize = 256;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Sets the process-wide execution policy. `Parallel` is a no-op when the
/// crate is built without the `parallel` feature.
pub fn set_execution(exec: Execution) {
    FORCE_SEQUENTIAL.store(exec == Execution::Sequential, Ordering::SeqCst);
}

pub fn execution() -> Execution {
    if cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::Relaxed) {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if n >= MIN_PARALLEL_LEN && execution() == Execution::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// `items.iter().map(f).collect()`, possibly in parallel.
pub fn map_slice<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if items.len() >= MIN_PARALLEL_LEN && execution() == Execution::Parallel {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Like [`map_slice`] without the length threshold, for a few coarse tasks.
pub fn map_tasks<I, T, F>(items: &[I], f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if items.len() > 1 && execution() == Execution::Parallel {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Runs `f` on a dedicated pool of `workers` threads (or inline when
/// sequential).
pub fn with_workers<R: Send, F: FnOnce() -> R + Send>(workers: usize, f: F) -> R {
    #[cfg(feature = "parallel")]
    if execution() == Execution::Parallel {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
            return pool.install(f);
        }
    }
    let _ = workers;
    f()
}
