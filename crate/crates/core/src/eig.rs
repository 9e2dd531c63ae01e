//! Dense eigenvalues of general complex matrices, and multiset comparison.

use crate::{CMatrix, Error, Result, C64};

/// All eigenvalues of a square complex matrix, in no particular order.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::dims(format!("eigenvalues need a square matrix, got {}x{}", n, a.ncols())));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    faer::Mat::<C64>::from_fn(n, n, |i, j| a[(i, j)]).eigenvalues().map_err(|_| Error::EigenNoConvergence(n))
}

/// Minimum-cost assignment between two equally sized point sets (Hungarian
/// algorithm on `|a_i − b_j|`); returns `perm` with `a[i]` matched to
/// `b[perm[i]]`.
pub fn optimal_matching(a: &[C64], b: &[C64]) -> Result<Vec<usize>> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::dims(format!("multisets have sizes {n} and {}", b.len())));
    }
    // 1-based potentials formulation
    let cost = |i: usize, j: usize| (a[i - 1] - b[j - 1]).norm();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
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
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    Ok(perm)
}

/// Largest pairwise distance after optimally matching the two multisets.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> Result<f64> {
    let perm = optimal_matching(a, b)?;
    Ok(perm.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).norm()).fold(0.0, f64::max))
}
