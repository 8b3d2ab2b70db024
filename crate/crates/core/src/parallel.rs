//! Deterministic parallel summation.
//!
//! Per frequency, paths are cut into contiguous chunks of a fixed size. Each
//! chunk is summed sequentially, possibly on different workers, and the chunk
//! partials are then added in ascending chunk order. The result therefore
//! depends on the chunk size but never on the number of workers.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Paths per chunk unless configured otherwise.
pub const DEFAULT_CHUNK_SIZE: usize = 512;

/// Environment variable read when no worker count is given explicitly.
pub const WORKERS_ENV: &str = "DEISM_WORKERS";

/// Sums `term(item)` over `items` with the chunked reduction described in the
/// module docs. Also returns the summed operation counts reported by `term`.
pub fn chunked_sum<T, F>(items: &[T], chunk_size: usize, term: F) -> Result<(Complex64, u64)>
where
    T: Sync,
    F: Fn(&T) -> Result<(Complex64, u64)> + Sync,
{
    let chunk_size = chunk_size.max(1);
    let partials: Vec<Result<(Complex64, u64)>> = items
        .par_chunks(chunk_size)
        .map(|chunk| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut ops = 0;
            for item in chunk {
                let (v, o) = term(item)?;
                acc += v;
                ops += o;
            }
            Ok((acc, ops))
        })
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    let mut ops = 0;
    for p in partials {
        let (v, o) = p?;
        total += v;
        ops += o;
    }
    Ok((total, ops))
}

/// Worker count from an explicit value, then `DEISM_WORKERS`, else `None`
/// (all hardware threads).
pub fn resolve_workers(explicit: Option<usize>) -> Result<Option<usize>> {
    if let Some(n) = explicit {
        return if n == 0 {
            Err(Error::config("worker count must be at least 1"))
        } else {
            Ok(Some(n))
        };
    }
    match std::env::var(WORKERS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(Error::config(format!("{WORKERS_ENV}='{s}' is not a positive integer"))),
            Ok(n) => Ok(Some(n)),
        },
        Err(_) => Ok(None),
    }
}

/// Runs `f` inside a dedicated pool of `workers` threads, or the global pool
/// when `workers` is `None`.
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Resource(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_is_worker_independent() {
        let items: Vec<f64> = (0..1000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let run = |w| {
            with_workers(Some(w), || {
                chunked_sum(&items, 37, |x| Ok((Complex64::new(*x, -x * x), 1))).unwrap()
            })
            .unwrap()
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.0.re.to_bits(), b.0.re.to_bits());
        assert_eq!(a.0.im.to_bits(), b.0.im.to_bits());
        assert_eq!(a.1, 1000);
    }

    #[test]
    fn errors_propagate() {
        let items = [1, 2, 3];
        let r = chunked_sum(&items, 2, |&i| {
            if i == 3 {
                Err(Error::singular("boom"))
            } else {
                Ok((Complex64::new(1.0, 0.0), 0))
            }
        });
        assert!(r.is_err());
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(resolve_workers(Some(0)).is_err());
        assert_eq!(resolve_workers(Some(2)).unwrap(), Some(2));
    }
}
