//! Worker fan-out for exhaustive search.

use netforge_core::action_space::ActionSpaceSpec;
use netforge_core::baselines::{brute_force_range, SearchResult};
use netforge_core::Instance;

use crate::{Error, Result};

/// Worker count: `NETFORGE_THREADS` when set to a positive integer, else
/// the available parallelism.
pub fn thread_count() -> usize {
    std::env::var("NETFORGE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Exhaustive search split into contiguous index ranges. The merge keeps
/// the lowest index among ties, so the answer does not depend on `threads`.
pub fn brute_force_parallel(instance: &Instance, spec: &ActionSpaceSpec, cap: u128, threads: usize) -> Result<SearchResult> {
    let size = spec.flat_size();
    if size > cap {
        return Err(netforge_core::Error::Refused { size, cap }.into());
    }
    if size == 0 {
        return Err(Error::Usage("empty action space".into()));
    }
    let chunk = size.div_ceil((threads.max(1) as u128).min(size));
    let workers = size.div_ceil(chunk);
    let parts: Vec<Result<SearchResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let range = w * chunk..((w + 1) * chunk).min(size);
                s.spawn(move || brute_force_range(instance, spec, range).map_err(Error::from))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Internal("search worker panicked".into()))))
            .collect()
    });
    let mut out: Option<SearchResult> = None;
    for p in parts {
        let p = p?;
        out = Some(match out {
            None => p,
            Some(acc) => acc.merge(p),
        });
    }
    Ok(out.expect("at least one worker"))
}
