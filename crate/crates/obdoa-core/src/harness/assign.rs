//! Matching estimated directions to ground truth.
//!
//! Root-MUSIC returns directions in sorted order but with no source labels,
//! so the squared error of a trial is defined under the best one-to-one
//! pairing of estimates to truths. Small problems enumerate permutations;
//! larger ones use the Hungarian algorithm.

use ndarray::Array2;

/// Sum of squared errors under the optimal estimate-to-truth pairing.
///
/// Panics if the slices differ in length (estimators return exactly `k`
/// directions by contract).
pub fn matched_sse(estimates: &[f64], truths: &[f64]) -> f64 {
    assert_eq!(
        estimates.len(),
        truths.len(),
        "estimate/truth counts differ"
    );
    let n = estimates.len();
    if n == 0 {
        return 0.0;
    }
    let mut cost = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let d = estimates[i] - truths[j];
            cost[[i, j]] = d * d;
        }
    }
    if n <= 6 {
        brute_force_min(&cost)
    } else {
        hungarian_min(&cost)
    }
}

fn brute_force_min(cost: &Array2<f64>) -> f64 {
    let n = cost.nrows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    // Heap's algorithm, iterative form.
    let mut stack = vec![0usize; n];
    let eval = |p: &[usize]| -> f64 { p.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum() };
    best = best.min(eval(&perm));
    let mut i = 1;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(stack[i], i);
            }
            best = best.min(eval(&perm));
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    best
}

/// Minimum-cost perfect matching on a square cost matrix via the
/// potential-based Hungarian algorithm (O(n^3)).
fn hungarian_min(cost: &Array2<f64>) -> f64 {
    let n = cost.nrows();
    // 1-based arrays; p[j] is the row matched to column j (0 = free).
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut total = 0.0;
    for j in 1..=n {
        total += cost[[p[j] - 1, j - 1]];
    }
    total
}
