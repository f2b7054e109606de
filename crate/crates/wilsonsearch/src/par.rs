//! Thin fork-join shims so every call site compiles with or without the
//! `parallel` feature. All helpers preserve input order, which is what makes
//! output byte-identical across thread counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub fn map_vec<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Map over chunks of two adjacent items (the last chunk may be a single
/// item). Used to build tree levels.
pub fn map_pairs<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&[T]) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_chunks(2).map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.chunks(2).map(f).collect()
    }
}

pub fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Fallible ordered map; the first error wins deterministically because
/// results are collected in input order before inspection.
pub fn try_map_vec<T, U, F>(items: &[T], f: F) -> crate::Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> crate::Result<U> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    let results: Vec<crate::Result<U>> = items.par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<crate::Result<U>> = items.iter().map(f).collect();
    results.into_iter().collect()
}
