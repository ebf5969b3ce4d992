//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the indexed maps fan out over rayon; without it
//! they run in index order. Results are always collected into index-ordered
//! vectors and floating-point reductions go through [`tree_sum`], so outputs
//! are bit-identical across thread counts and across the two modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
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

/// Sequential version of [`map_indexed`], kept callable under either feature
/// so benchmarks can compare the two paths directly.
pub fn map_indexed_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Apply `f` to every element of `out`, passing the element index.
pub fn for_each_mut<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut().enumerate().for_each(|(i, v)| f(i, v));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.iter_mut().enumerate().for_each(|(i, v)| f(i, v));
    }
}

/// Fixed pairwise-tree sum. The reduction order depends only on `xs.len()`,
/// never on thread scheduling.
pub fn tree_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            tree_sum(&xs[..mid]) + tree_sum(&xs[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_indexed_is_index_ordered() {
        let v = map_indexed(1000, |i| i * i);
        assert_eq!(v, map_indexed_seq(1000, |i| i * i));
    }

    #[test]
    fn tree_sum_matches_exact_small() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(tree_sum(&xs), 15.0);
        assert_eq!(tree_sum(&[]), 0.0);
    }
}
