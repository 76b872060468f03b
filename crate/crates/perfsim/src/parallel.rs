//! Order-preserving parallel map over indices on scoped threads.

use std::num::NonZeroUsize;
use std::thread;

/// Evaluates `f(0), …, f(n − 1)` on up to `available_parallelism` threads and
/// returns the results in index order. Results do not depend on scheduling as
/// long as `f` is a function of its index.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = thread::available_parallelism().map_or(1, NonZeroUsize::get).min(n.max(1));
    if workers <= 1 {
        return (0..n).map(f).collect();
    }
    let f = &f;
    let chunks: Vec<Vec<T>> = thread::scope(|s| {
        let handles: Vec<_> =
            (0..workers).map(|w| s.spawn(move || (w..n).step_by(workers).map(f).collect::<Vec<T>>())).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    // Worker w holds indices w, w + workers, …; interleave them back.
    let mut iters: Vec<_> = chunks.into_iter().map(Vec::into_iter).collect();
    (0..n).map(|i| iters[i % workers].next().expect("every index evaluated")).collect()
}
