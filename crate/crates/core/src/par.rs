//! Execution strategy for the data-parallel loops.
//!
//! Every parallel loop in the crate goes through these helpers so that the
//! sequential and rayon paths share one body and produce identical output.
//! Work items never share mutable state; reductions happen afterwards in
//! index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

/// Fills `data` in rows of `row_len`, calling `f(row_index, row)`.
pub fn try_fill_rows<E, F>(exec: Execution, data: &mut [f64], row_len: usize, f: F) -> Result<(), E>
where
    E: Send,
    F: Fn(usize, &mut [f64]) -> Result<(), E> + Sync + Send,
{
    if row_len == 0 {
        return Ok(());
    }
    match exec {
        Execution::Sequential => data
            .chunks_mut(row_len)
            .enumerate()
            .try_for_each(|(i, row)| f(i, row)),
        #[cfg(feature = "parallel")]
        Execution::Parallel => data
            .par_chunks_mut(row_len)
            .enumerate()
            .try_for_each(|(i, row)| f(i, row)),
    }
}

/// `(0..n).map(f).collect()`, optionally in parallel. Output order is the
/// index order in both modes.
pub fn map_indices<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}
