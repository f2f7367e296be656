//! Minimum-cost assignment via shortest augmenting paths with potentials.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Returns the permutation `perm` (row -> column) minimizing the total cost
/// of a square matrix. O(n^3).
pub fn hungarian<T: Scalar>(cost: &Matrix<T>) -> Result<Vec<usize>> {
    if cost.rows() != cost.cols() {
        return Err(Error::Shape(format!(
            "assignment needs a square matrix, got {}x{}",
            cost.rows(),
            cost.cols()
        )));
    }
    if !cost.all_finite() {
        return Err(Error::NonFinite("assignment costs".into()));
    }
    let n = cost.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    // 1-indexed arrays; column 0 is the virtual unmatched column.
    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut matched_row = vec![0usize; n + 1]; // matched_row[j] = row matched to column j
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_v = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // augment along the found path
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[matched_row[j] - 1] = j - 1;
    }
    Ok(perm)
}

/// Total cost of a permutation under a cost matrix.
pub fn permutation_cost<T: Scalar>(cost: &Matrix<T>, perm: &[usize]) -> T {
    perm.iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, &j)| acc + cost.get(i, j))
}
