//! Execution facade: data-parallel maps with a sequential fallback.
//!
//! Every kernel in this crate that fans out over independent work items goes
//! through one of these helpers. With the `parallel` feature (default) they
//! dispatch to rayon; without it they run plain loops. Outputs are written by
//! index, never accumulated through unordered reductions, so results are
//! bitwise identical regardless of feature set or thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, collecting results in index order.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
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

/// Applies `f` to each `cols`-long row of `data` along with its row index.
pub(crate) fn for_each_row<F>(data: &mut [f64], cols: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    debug_assert_eq!(data.len() % cols.max(1), 0);
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(cols)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(cols).enumerate().for_each(|(i, row)| f(i, row));
    }
}
