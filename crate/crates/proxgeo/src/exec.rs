//! Execution strategy for the data-parallel sweeps (axiom verification,
//! nonexpansiveness audits, modulus audits).
//!
//! With the `parallel` feature (on by default) the sweeps fan out over a
//! rayon pool; reductions are order-independent, so sequential and parallel
//! runs of the same seed produce byte-identical reports. Without the feature
//! every sweep runs sequentially and `Parallelism::Parallel` degrades to the
//! sequential path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a sweep distributes its independent samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// Rayon work-stealing pool; falls back to sequential when the
    /// `parallel` feature is disabled.
    Parallel,
}

impl Default for Parallelism {
    fn default() -> Self {
        Parallelism::Parallel
    }
}

/// Largest (value, index, witness) over the items. Ties on value resolve to
/// the smallest index so the result does not depend on scheduling. NaN values
/// are treated as +inf so degenerate samples surface instead of vanishing.
pub(crate) fn fold_max<T, W, F>(par: Parallelism, items: &[T], eval: F) -> Option<(f64, usize, W)>
where
    T: Sync,
    W: Send,
    F: Fn(usize, &T) -> (f64, W) + Sync + Send,
{
    let pick = |a: (f64, usize, W), b: (f64, usize, W)| {
        let va = if a.0.is_nan() { f64::INFINITY } else { a.0 };
        let vb = if b.0.is_nan() { f64::INFINITY } else { b.0 };
        if vb > va || (vb == va && b.1 < a.1) {
            b
        } else {
            a
        }
    };
    #[cfg(feature = "parallel")]
    if par == Parallelism::Parallel {
        return items
            .par_iter()
            .enumerate()
            .map(|(i, t)| {
                let (v, w) = eval(i, t);
                (v, i, w)
            })
            .reduce_with(pick);
    }
    let _ = par;
    items
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let (v, w) = eval(i, t);
            (v, i, w)
        })
        .reduce(pick)
}

/// Map every item, preserving input order in the output.
pub(crate) fn map_collect<T, R, F>(par: Parallelism, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par == Parallelism::Parallel {
        return items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let _ = par;
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}
