//! Deterministic floating-point reductions.
//!
//! Every functional and norm in this crate is reduced through a pairwise tree
//! whose shape depends only on the index range, with Neumaier-compensated
//! leaves. The tree is split identically whether a subrange is evaluated
//! sequentially or handed to rayon, so results are bit-identical for any
//! thread count.

/// Below this length a range is summed sequentially with compensation.
const LEAF: usize = 128;
/// Above this length the two halves are evaluated as rayon tasks.
const PAR_THRESHOLD: usize = 1 << 14;

/// Compensated (Neumaier) sequential sum of `f(i)` for `i` in `lo..hi`.
fn leaf_sum<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for i in lo..hi {
        let x = f(i);
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn tree_sum<F: Fn(usize) -> f64 + Sync>(lo: usize, hi: usize, f: &F) -> f64 {
    let len = hi - lo;
    if len <= LEAF {
        return leaf_sum(lo, hi, f);
    }
    let mid = lo + len / 2;
    if len >= PAR_THRESHOLD {
        let (a, b) = rayon::join(|| tree_sum(lo, mid, f), || tree_sum(mid, hi, f));
        a + b
    } else {
        tree_sum(lo, mid, f) + tree_sum(mid, hi, f)
    }
}

/// Deterministic sum of `f(i)` over `0..n`. Bit-identical for any thread count.
pub fn pairwise_map_sum<F: Fn(usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    tree_sum(0, n, &f)
}

/// Deterministic sum of a slice.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    tree_sum(0, v.len(), &|i| v[i])
}

/// Deterministic maximum of `f(i)` over `0..n`; `f64::NEG_INFINITY` when empty.
/// Max is order-insensitive, so a plain parallel reduce would also do; this
/// keeps the same traversal for symmetry with the sums.
pub fn map_max<F: Fn(usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for i in 0..n {
        let x = f(i);
        if x > m {
            m = x;
        }
    }
    m
}
