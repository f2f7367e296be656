//! K-nearest-neighbor classification by exhaustive scan.

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::scalar::Scalar;

fn check_inputs<T: Scalar>(
    train_x: &Matrix<T>,
    train_y: &[usize],
    test_x: &Matrix<T>,
    k: usize,
) -> Result<()> {
    if train_x.rows() == 0 {
        return Err(Error::Empty("KNN training set".into()));
    }
    if train_y.len() != train_x.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} training instances",
            train_y.len(),
            train_x.rows()
        )));
    }
    if k == 0 || k > train_x.rows() {
        return Err(Error::Config(format!(
            "k = {} must be in 1..={}",
            k,
            train_x.rows()
        )));
    }
    if test_x.cols() != train_x.cols() {
        return Err(Error::Shape(format!(
            "test width {} vs train width {}",
            test_x.cols(),
            train_x.cols()
        )));
    }
    Ok(())
}

fn k_nearest<T: Scalar>(train_x: &Matrix<T>, point: &[T], k: usize) -> Vec<usize> {
    let mut dist_idx: Vec<(T, usize)> = (0..train_x.rows())
        .map(|i| (squared_distance(point, train_x.row(i)), i))
        .collect();
    // distance ties resolve to the lowest training index
    dist_idx.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    dist_idx.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Per-class vote fractions among the k nearest training instances.
pub fn knn_scores<T: Scalar>(
    train_x: &Matrix<T>,
    train_y: &[usize],
    test_x: &Matrix<T>,
    k: usize,
    num_classes: usize,
) -> Result<Matrix<T>> {
    check_inputs(train_x, train_y, test_x, k)?;
    if let Some(&bad) = train_y.iter().find(|&&y| y >= num_classes) {
        return Err(Error::Config(format!(
            "label {bad} out of {num_classes} classes"
        )));
    }
    let mut scores = Matrix::zeros(test_x.rows(), num_classes);
    let share = T::one() / T::from_usize(k).expect("k");
    for i in 0..test_x.rows() {
        for j in k_nearest(train_x, test_x.row(i), k) {
            let y = train_y[j];
            scores.set(i, y, scores.get(i, y) + share);
        }
    }
    Ok(scores)
}

/// Majority label among the k nearest training instances; vote ties go to
/// the lowest class index.
pub fn knn_predict<T: Scalar>(
    train_x: &Matrix<T>,
    train_y: &[usize],
    test_x: &Matrix<T>,
    k: usize,
) -> Result<Vec<usize>> {
    check_inputs(train_x, train_y, test_x, k)?;
    let num_classes = train_y.iter().copied().max().expect("non-empty") + 1;
    let scores = knn_scores(train_x, train_y, test_x, k, num_classes)?;
    Ok((0..test_x.rows())
        .map(|i| {
            let row = scores.row(i);
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect())
}
