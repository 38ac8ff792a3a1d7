//! Order-preserving map helpers. With the `parallel` feature the work is
//! spread over the rayon pool when the caller asks for it; otherwise, or
//! without the feature, it runs on the calling thread. Results always come
//! back in input order so reductions stay deterministic.

/// Whether callers should request parallel execution by default.
pub const DEFAULT_PARALLEL: bool = cfg!(feature = "parallel");

pub fn map_range<R, F>(n: usize, parallel: bool, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..n).map(f).collect()
}

pub fn map_slice<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

/// Splits `lo..=hi` into consecutive blocks of at most `block` elements.
pub fn blocks(lo: u64, hi: u64, block: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    if lo > hi {
        return out;
    }
    let mut a = lo;
    loop {
        let b = a.saturating_add(block - 1).min(hi);
        out.push((a, b));
        if b == hi {
            break;
        }
        a = b + 1;
    }
    out
}
