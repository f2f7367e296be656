//! Synthetic data generators for tests, experiments, and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::Dataset;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// `s` cluster centers placed at `separation * e_i` on the first `s`
/// coordinate axes; pairwise distance `separation * sqrt(2)`.
pub fn axis_centers<T: Scalar>(s: usize, dim: usize, separation: f64) -> Matrix<T> {
    assert!(s <= dim, "need at least one axis per center");
    let mut centers = Matrix::zeros(s, dim);
    for j in 0..s {
        centers.set(j, j, T::from_f64_lossy(separation));
    }
    centers
}

/// Isotropic Gaussian blobs: `per_cluster` points around each center with the
/// given per-coordinate deviation. Labels are the blob indices.
pub fn gaussian_blobs<T: Scalar>(
    centers: &Matrix<T>,
    per_cluster: usize,
    sigma: f64,
    seed: u64,
) -> Dataset<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = centers.rows();
    let dim = centers.cols();
    let mut x = Matrix::zeros(s * per_cluster, dim);
    let mut labels = Vec::with_capacity(s * per_cluster);
    let mut row = 0;
    for c in 0..s {
        for _ in 0..per_cluster {
            for k in 0..dim {
                let noise: f64 = StandardNormal.sample(&mut rng);
                x.set(row, k, centers.get(c, k) + T::from_f64_lossy(noise * sigma));
            }
            labels.push(c);
            row += 1;
        }
    }
    Dataset::labeled(x, labels).expect("generated labels match row count")
}

/// Flips the given fraction of labels to a different class, uniformly.
pub fn with_label_noise(labels: &[usize], fraction: f64, classes: usize, seed: u64) -> Vec<usize> {
    assert!(classes >= 2, "label noise needs at least two classes");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noisy = labels.to_vec();
    for y in noisy.iter_mut() {
        if rng.random::<f64>() < fraction {
            let offset = rng.random_range(1..classes);
            *y = (*y + offset) % classes;
        }
    }
    noisy
}

/// Seeded shuffle-split into train and test partitions.
pub fn train_test_split<T: Scalar>(
    ds: &Dataset<T>,
    test_fraction: f64,
    seed: u64,
) -> (Dataset<T>, Dataset<T>) {
    use rand::seq::SliceRandom;
    let n = ds.n();
    let n_test = ((n as f64) * test_fraction).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let (test_ids, train_ids) = order.split_at(n_test);
    let mut sorted_test = test_ids.to_vec();
    let mut sorted_train = train_ids.to_vec();
    sorted_test.sort_unstable();
    sorted_train.sort_unstable();
    let pick = |ids: &[usize]| {
        let x = ds.x.select_rows(ids);
        match &ds.labels {
            Some(l) => Dataset::labeled(x, ids.iter().map(|&i| l[i]).collect())
                .expect("selected labels match"),
            None => Dataset::unlabeled(x),
        }
    };
    (pick(&sorted_train), pick(&sorted_test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::euclidean_distance;

    #[test]
    fn centers_are_far_apart() {
        let c = axis_centers::<f64>(4, 20, 10.0);
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(euclidean_distance(c.row(i), c.row(j)) >= 10.0);
            }
        }
    }

    #[test]
    fn blobs_have_balanced_labels() {
        let c = axis_centers::<f64>(3, 5, 8.0);
        let ds = gaussian_blobs(&c, 10, 1.0, 1);
        assert_eq!(ds.n(), 30);
        let labels = ds.labels.as_ref().unwrap();
        for k in 0..3 {
            assert_eq!(labels.iter().filter(|&&l| l == k).count(), 10);
        }
    }

    #[test]
    fn label_noise_flips_roughly_the_requested_fraction() {
        let labels = vec![0usize; 1000];
        let noisy = with_label_noise(&labels, 0.1, 4, 3);
        let flipped = noisy.iter().filter(|&&l| l != 0).count();
        assert!((50..150).contains(&flipped), "{flipped} flips");
    }

    #[test]
    fn split_partitions_the_data() {
        let c = axis_centers::<f64>(2, 3, 5.0);
        let ds = gaussian_blobs(&c, 20, 1.0, 9);
        let (train, test) = train_test_split(&ds, 0.25, 4);
        assert_eq!(train.n(), 30);
        assert_eq!(test.n(), 10);
    }
}
