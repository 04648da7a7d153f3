//! Minimal scoped-thread fan-out. `AXISWIRL_THREADS` caps the worker count.

use std::thread;

pub fn threads() -> usize {
    let avail = thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var("AXISWIRL_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => n.min(avail.max(1) * 4),
        _ => avail,
    }
}

/// `(0..n).map(f)` evaluated on up to [`threads`] workers, order preserved.
pub fn map_range<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = threads().min(n).max(1);
    if workers == 1 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(workers);
    let f = &f;
    thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let lo = (w * chunk).min(n);
                let hi = ((w + 1) * chunk).min(n);
                s.spawn(move || (lo..hi).map(f).collect::<Vec<T>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}
