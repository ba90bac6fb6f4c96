//! Data-parallel helpers. With the `parallel` feature these run on rayon;
//! without it they fall back to plain iterators. Results are always returned
//! in index order, so output does not depend on the worker count.

/// Evaluates `f(0..n)` and returns the results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Splits `0..total` into at most `chunks` contiguous ranges.
pub fn ranges(total: u64, chunks: usize) -> Vec<std::ops::Range<u64>> {
    let chunks = (chunks.max(1) as u64).min(total.max(1));
    let step = total.div_ceil(chunks);
    (0..chunks)
        .map(|c| (c * step).min(total)..((c + 1) * step).min(total))
        .filter(|r| !r.is_empty())
        .collect()
}

/// Runs `f` with a dedicated pool of `workers` threads (0 = default).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if workers == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}

pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

/// Threads available to `map_indexed` in the current context.
pub fn current_workers() -> usize {
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
    fn ranges_cover() {
        let r = ranges(10, 3);
        assert_eq!(r, vec![0..4, 4..8, 8..10]);
        assert_eq!(ranges(0, 4), Vec::<std::ops::Range<u64>>::new());
        assert_eq!(map_indexed(5, |i| i * i), vec![0, 1, 4, 9, 16]);
    }
}
