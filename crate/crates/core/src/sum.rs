//! Deterministic reductions.
//!
//! Every floating-point reduction in the crate goes through [`pairwise_sum`] so
//! that results do not depend on the rayon thread count: parallel loops only
//! ever produce per-index partials, which are then combined in a fixed tree.

use rayon::prelude::*;

const BLOCK: usize = 32;

/// Fixed-order pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= BLOCK {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Evaluates `term(k)` for `k in 0..len` in parallel and sums the results in
/// a fixed pairwise order.
pub fn par_sum<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let partials: Vec<f64> = (0..len).into_par_iter().map(term).collect();
    pairwise_sum(&partials)
}

/// Like [`par_sum`] but for `width` simultaneous accumulators per index.
pub fn par_sum_vec<F>(len: usize, width: usize, term: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let mut partials = vec![0.0; len * width];
    partials
        .par_chunks_mut(width.max(1))
        .enumerate()
        .for_each(|(k, out)| term(k, out));
    (0..width)
        .map(|c| {
            let column: Vec<f64> = (0..len).map(|k| partials[k * width + c]).collect();
            pairwise_sum(&column)
        })
        .collect()
}
