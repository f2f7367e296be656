//! Lloyd's algorithm with seeded k-means++ initialization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::scalar::Scalar;

use super::HardClustering;

pub const KMEANS_MAX_ITER: usize = 300;
pub const KMEANS_TOL: f64 = 1e-6;

/// Centroid initialization.
#[derive(Debug, Clone)]
pub enum KmeansInit<T> {
    /// Seeded k-means++ sampling.
    Seeded,
    /// Caller-supplied `s x e` centroids.
    Centroids(Matrix<T>),
}

#[derive(Debug, Clone)]
pub struct KmeansOutcome<T> {
    pub clustering: HardClustering,
    pub centroids: Matrix<T>,
    /// Sum of squared distances to the assigned centroid, after convergence.
    pub inertia: T,
    /// Inertia after each assignment step, for monotonicity checks.
    pub inertia_trace: Vec<T>,
    pub iterations: usize,
}

/// Lloyd iterations until the largest centroid shift drops below `tol` or
/// `max_iter` is reached. Inertia is non-increasing across iterations (checked
/// in debug builds); ties go to the lowest index. Deterministic per seed.
pub fn kmeans<T: Scalar>(
    x: &Matrix<T>,
    s: usize,
    init: &KmeansInit<T>,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<KmeansOutcome<T>> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::Empty("k-means input".into()));
    }
    if s == 0 || s > n {
        return Err(Error::Config(format!(
            "cluster count {} must be in 1..={}",
            s, n
        )));
    }
    let mut centroids = match init {
        KmeansInit::Seeded => plus_plus_init(x, s, seed),
        KmeansInit::Centroids(c) => {
            if c.rows() != s || c.cols() != x.cols() {
                return Err(Error::Shape(format!(
                    "given centroids are {}x{}, expected {}x{}",
                    c.rows(),
                    c.cols(),
                    s,
                    x.cols()
                )));
            }
            c.clone()
        }
    };

    let tol = T::from_f64_lossy(tol);
    let mut assignment = vec![0usize; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        assign(x, &centroids, &mut assignment);
        fix_empty_clusters(x, &mut centroids, &mut assignment, s);
        let inertia = total_inertia(x, &centroids, &assignment);
        if let Some(&prev) = trace.last() {
            // Lloyd cannot increase inertia in exact arithmetic; seeing it
            // rise means the input magnitudes broke floating point.
            if !inertia.is_finite() || inertia > prev * (T::one() + T::from_f64_lossy(1e-12)) {
                return Err(Error::NonFinite(format!(
                    "inertia rose from {prev} to {inertia}; input is numerically degenerate"
                )));
            }
        }
        trace.push(inertia);

        let new_centroids = means(x, &assignment, s, &centroids);
        let mut max_shift = T::zero();
        for j in 0..s {
            let shift = squared_distance(centroids.row(j), new_centroids.row(j)).sqrt();
            max_shift = max_shift.max(shift);
        }
        centroids = new_centroids;
        if max_shift < tol {
            break;
        }
    }
    // Final assignment against the final centroids.
    assign(x, &centroids, &mut assignment);
    fix_empty_clusters(x, &mut centroids, &mut assignment, s);
    let inertia = total_inertia(x, &centroids, &assignment);
    trace.push(inertia);
    Ok(KmeansOutcome {
        clustering: HardClustering::new(assignment, s)?,
        centroids,
        inertia,
        inertia_trace: trace,
        iterations,
    })
}

fn assign<T: Scalar>(x: &Matrix<T>, centroids: &Matrix<T>, assignment: &mut [usize]) {
    for i in 0..x.rows() {
        assignment[i] = nearest(x.row(i), centroids);
    }
}

/// Index of the nearest centroid by squared Euclidean distance, lowest index
/// on ties.
pub(crate) fn nearest<T: Scalar>(point: &[T], centroids: &Matrix<T>) -> usize {
    let mut best = 0;
    let mut best_d = squared_distance(point, centroids.row(0));
    for j in 1..centroids.rows() {
        let d = squared_distance(point, centroids.row(j));
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn total_inertia<T: Scalar>(x: &Matrix<T>, centroids: &Matrix<T>, assignment: &[usize]) -> T {
    let mut total = T::zero();
    for i in 0..x.rows() {
        total += squared_distance(x.row(i), centroids.row(assignment[i]));
    }
    total
}

fn means<T: Scalar>(
    x: &Matrix<T>,
    assignment: &[usize],
    s: usize,
    fallback: &Matrix<T>,
) -> Matrix<T> {
    let mut sums = Matrix::zeros(s, x.cols());
    let mut counts = vec![0usize; s];
    for i in 0..x.rows() {
        let c = assignment[i];
        counts[c] += 1;
        for (acc, &v) in sums.row_mut(c).iter_mut().zip(x.row(i)) {
            *acc += v;
        }
    }
    for j in 0..s {
        if counts[j] == 0 {
            sums.row_mut(j).copy_from_slice(fallback.row(j));
        } else {
            let inv = T::one() / T::from_usize(counts[j]).expect("count");
            for v in sums.row_mut(j) {
                *v *= inv;
            }
        }
    }
    sums
}

/// Re-seeds each empty cluster at the point farthest from its assigned
/// centroid and claims that point, so no cluster stays empty.
fn fix_empty_clusters<T: Scalar>(
    x: &Matrix<T>,
    centroids: &mut Matrix<T>,
    assignment: &mut [usize],
    s: usize,
) {
    let mut counts = vec![0usize; s];
    for &c in assignment.iter() {
        counts[c] += 1;
    }
    for j in 0..s {
        if counts[j] > 0 {
            continue;
        }
        let mut far_i = 0;
        let mut far_d = T::neg_infinity();
        for i in 0..x.rows() {
            if counts[assignment[i]] <= 1 {
                continue; // do not empty another cluster
            }
            let d = squared_distance(x.row(i), centroids.row(assignment[i]));
            if d > far_d {
                far_d = d;
                far_i = i;
            }
        }
        counts[assignment[far_i]] -= 1;
        assignment[far_i] = j;
        counts[j] = 1;
        let point = x.row(far_i).to_vec();
        centroids.row_mut(j).copy_from_slice(&point);
    }
}

/// k-means++: first centroid uniform, the rest sampled proportional to the
/// squared distance from the nearest chosen centroid. When every remaining
/// point duplicates a chosen centroid, the lowest unchosen index is taken.
fn plus_plus_init<T: Scalar>(x: &Matrix<T>, s: usize, seed: u64) -> Matrix<T> {
    let n = x.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = Vec::with_capacity(s);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<T> = (0..n)
        .map(|i| squared_distance(x.row(i), x.row(chosen[0])))
        .collect();
    while chosen.len() < s {
        let total = d2.iter().fold(T::zero(), |acc, &v| acc + v);
        let next = if total > T::zero() {
            let u = T::from_f64_lossy(rng.random::<f64>()) * total;
            let mut acc = T::zero();
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            (0..n)
                .find(|i| !chosen.contains(i))
                .unwrap_or(chosen.len() % n)
        };
        chosen.push(next);
        for i in 0..n {
            let d = squared_distance(x.row(i), x.row(next));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    x.select_rows(&chosen)
}
