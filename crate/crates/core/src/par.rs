//! Data-parallel helpers with a sequential fallback.
//!
//! Everything batch-shaped in this crate (multi-seed training sweeps, oracle
//! grids, evaluation episode batches) funnels through [`par_map`] so the
//! whole workspace switches between rayon and plain iteration with the
//! `parallel` feature. Results are collected in input order either way, so
//! output is deterministic regardless of the backend.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, in parallel when the `parallel` feature is enabled.
///
/// Output order always matches input order.
#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_par_iter().map(f).collect()
}

/// Sequential fallback used when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_iter().map(f).collect()
}

/// Always-sequential map, kept as the benchmark baseline for [`par_map`].
pub fn seq_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_preserves_input_order() {
        let out = par_map((0..1000).collect::<Vec<i64>>(), |x| x * x);
        let expected: Vec<i64> = (0..1000).map(|x| x * x).collect();
        assert_eq!(out, expected);
    }

    #[test]
    fn par_and_seq_agree() {
        let items: Vec<u32> = (0..257).collect();
        assert_eq!(
            par_map(items.clone(), |x| x.wrapping_mul(2654435761)),
            seq_map(items, |x| x.wrapping_mul(2654435761))
        );
    }

    #[test]
    fn empty_input_yields_empty_output() {
        let out: Vec<i32> = par_map(Vec::<i32>::new(), |x| x);
        assert!(out.is_empty());
    }
}
