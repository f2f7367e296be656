//! Bottom-up agglomerative clustering with Lance-Williams updates.

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::scalar::Scalar;

use super::HardClustering;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    /// Mean of pairwise squared distances between members.
    Average,
    /// Ward's criterion: merge cost proportional to the within-cluster
    /// sum-of-squares increase.
    Ward,
}

/// Merges singletons until `s` clusters remain.
///
/// Cluster dissimilarities start as squared Euclidean distances and are
/// updated with the Lance-Williams recurrences. A merged cluster keeps the
/// lower of the two ids; equal merge distances resolve to the
/// lexicographically smallest id pair. Output clusters are numbered by
/// ascending surviving id. Deterministic. O(n^3) time, O(n^2) memory.
pub fn hca<T: Scalar>(x: &Matrix<T>, s: usize, linkage: Linkage) -> Result<HardClustering> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::Empty("agglomerative clustering input".into()));
    }
    if s == 0 || s > n {
        return Err(Error::Config(format!(
            "cluster count {} must be in 1..={}",
            s, n
        )));
    }
    let mut dist = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = squared_distance(x.row(i), x.row(j));
            dist.set(i, j, d);
            dist.set(j, i, d);
        }
    }
    let mut active: Vec<bool> = vec![true; n];
    let mut sizes: Vec<usize> = vec![1; n];
    let mut member_of: Vec<usize> = (0..n).collect();

    let mut remaining = n;
    while remaining > s {
        // lowest-index pair among the minima
        let (mut best_i, mut best_j) = (usize::MAX, usize::MAX);
        let mut best_d = T::infinity();
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in i + 1..n {
                if !active[j] {
                    continue;
                }
                let d = dist.get(i, j);
                if d < best_d {
                    best_d = d;
                    best_i = i;
                    best_j = j;
                }
            }
        }
        let (a, b) = (best_i, best_j); // a < b; b merges into a
        for k in 0..n {
            if !active[k] || k == a || k == b {
                continue;
            }
            let updated = match linkage {
                Linkage::Average => {
                    let (na, nb) = (
                        T::from_usize(sizes[a]).expect("size"),
                        T::from_usize(sizes[b]).expect("size"),
                    );
                    (na * dist.get(a, k) + nb * dist.get(b, k)) / (na + nb)
                }
                Linkage::Ward => {
                    let (na, nb, nk) = (
                        T::from_usize(sizes[a]).expect("size"),
                        T::from_usize(sizes[b]).expect("size"),
                        T::from_usize(sizes[k]).expect("size"),
                    );
                    let total = na + nb + nk;
                    ((na + nk) * dist.get(a, k) + (nb + nk) * dist.get(b, k)
                        - nk * dist.get(a, b))
                        / total
                }
            };
            dist.set(a, k, updated);
            dist.set(k, a, updated);
        }
        sizes[a] += sizes[b];
        active[b] = false;
        for m in member_of.iter_mut() {
            if *m == b {
                *m = a;
            }
        }
        remaining -= 1;
    }

    // surviving ids, ascending, become cluster indices
    let mut label_of = vec![usize::MAX; n];
    let mut next = 0;
    for (id, &alive) in active.iter().enumerate() {
        if alive {
            label_of[id] = next;
            next += 1;
        }
    }
    let assignment: Vec<usize> = member_of.iter().map(|&m| label_of[m]).collect();
    HardClustering::new(assignment, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn no_merges_when_s_equals_n() {
        let x = Matrix::from_rows(&[vec![0.0], vec![5.0], vec![9.0]]).unwrap();
        let h = hca(&x, 3, Linkage::Average).unwrap();
        assert_eq!(h.assignment(), &[0, 1, 2]);
    }

    #[test]
    fn single_cluster_holds_everything() {
        let x = Matrix::from_rows(&[vec![0.0], vec![5.0], vec![9.0]]).unwrap();
        for linkage in [Linkage::Average, Linkage::Ward] {
            let h = hca(&x, 1, linkage).unwrap();
            assert_eq!(h.sizes(), &[3]);
        }
    }

    #[test]
    fn far_apart_pairs_merge_first() {
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![50.0, 50.0],
            vec![50.1, 50.0],
        ])
        .unwrap();
        for linkage in [Linkage::Average, Linkage::Ward] {
            let h = hca(&x, 2, linkage).unwrap();
            assert_eq!(h.cluster_of(0), h.cluster_of(1));
            assert_eq!(h.cluster_of(2), h.cluster_of(3));
            assert_ne!(h.cluster_of(0), h.cluster_of(2));
        }
    }

    // Naive reference agglomerator: recomputes every cluster-pair cost from
    // the raw points at each step, no recurrences.
    fn naive_hca(x: &Matrix<f64>, s: usize, linkage: Linkage) -> Vec<usize> {
        let n = x.rows();
        let mut clusters: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
        let cost = |a: &[usize], b: &[usize]| -> f64 {
            match linkage {
                Linkage::Average => {
                    let mut sum = 0.0;
                    for &i in a {
                        for &j in b {
                            sum += squared_distance(x.row(i), x.row(j));
                        }
                    }
                    sum / (a.len() * b.len()) as f64
                }
                Linkage::Ward => {
                    let mean = |ids: &[usize]| -> Vec<f64> {
                        let mut m = vec![0.0; x.cols()];
                        for &i in ids {
                            for (acc, &v) in m.iter_mut().zip(x.row(i)) {
                                *acc += v;
                            }
                        }
                        m.iter().map(|v| v / ids.len() as f64).collect()
                    };
                    let (ma, mb) = (mean(a), mean(b));
                    let (na, nb) = (a.len() as f64, b.len() as f64);
                    na * nb / (na + nb) * squared_distance(&ma, &mb)
                }
            }
        };
        let mut remaining = n;
        while remaining > s {
            let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
            for i in 0..n {
                let Some(a) = &clusters[i] else { continue };
                for j in i + 1..n {
                    let Some(b) = &clusters[j] else { continue };
                    let c = cost(a, b);
                    if c < best.2 {
                        best = (i, j, c);
                    }
                }
            }
            let merged = clusters[best.1].take().unwrap();
            clusters[best.0].as_mut().unwrap().extend(merged);
            remaining -= 1;
        }
        let mut assignment = vec![0usize; n];
        for (label, cluster) in clusters.iter().flatten().enumerate() {
            for &i in cluster {
                assignment[i] = label;
            }
        }
        assignment
    }

    #[test]
    fn matches_the_naive_agglomerator_on_small_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(555);
        for trial in 0..40 {
            let n = 3 + (trial % 6); // 3..=8
            let data: Vec<f64> = (0..n * 2).map(|_| rng.random::<f64>() * 4.0).collect();
            let x = Matrix::from_vec(n, 2, data).unwrap();
            for linkage in [Linkage::Average, Linkage::Ward] {
                for s in 1..=n.min(4) {
                    let got = hca(&x, s, linkage).unwrap();
                    let want = naive_hca(&x, s, linkage);
                    assert_eq!(
                        got.assignment(),
                        &want[..],
                        "n={n} s={s} linkage={linkage:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_too_many_clusters() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(hca(&x, 3, Linkage::Ward).is_err());
    }
}
