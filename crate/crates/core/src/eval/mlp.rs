//! Multi-layer perceptron classifier on the shared network substrate, with a
//! softmax head and cross-entropy loss.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{Activation, AdamConfig, AdamState, Network};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct MlpOptions<T> {
    pub hidden_dims: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig<T>,
}

impl<T: Scalar> Default for MlpOptions<T> {
    fn default() -> Self {
        MlpOptions {
            hidden_dims: vec![64],
            epochs: 100,
            batch_size: 256,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MlpOutcome<T> {
    pub labels: Vec<usize>,
    /// Softmax scores, one row per test instance; rows sum to 1.
    pub scores: Matrix<T>,
}

/// Row-wise softmax with the usual max-shift for stability.
fn softmax<T: Scalar>(logits: &Matrix<T>) -> Matrix<T> {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Trains a softmax classifier and scores the test set.
///
/// The class count is taken from the training labels (`max + 1`).
/// Deterministic per seed; `epochs == 0` scores with the seeded init.
pub fn mlp_classify<T: Scalar>(
    train_x: &Matrix<T>,
    train_y: &[usize],
    test_x: &Matrix<T>,
    opts: &MlpOptions<T>,
    seed: u64,
) -> Result<MlpOutcome<T>> {
    if train_x.rows() == 0 {
        return Err(Error::Empty("MLP training set".into()));
    }
    if train_y.len() != train_x.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} training instances",
            train_y.len(),
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
    if opts.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let classes = train_y.iter().copied().max().expect("non-empty") + 1;
    let mut dims = vec![train_x.cols()];
    dims.extend_from_slice(&opts.hidden_dims);
    dims.push(classes);
    let mut activations = vec![Activation::Relu; dims.len() - 1];
    *activations.last_mut().expect("at least one layer") = Activation::Linear;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::seeded_with_rng(&dims, activations, &mut rng)?;
    let mut adam = AdamState::for_network(opts.adam, &net);

    let n = train_x.rows();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(opts.batch_size.min(n)) {
            let batch = train_x.select_rows(chunk);
            let fwd = net.forward(&batch)?;
            let probs = softmax(fwd.output());
            // d(cross-entropy)/d(logits) = (softmax - onehot) / batch
            let inv = T::one() / T::from_usize(chunk.len()).expect("batch");
            let mut grad = probs;
            for (row, &i) in chunk.iter().enumerate() {
                let y = train_y[i];
                grad.set(row, y, grad.get(row, y) - T::one());
            }
            let grad = grad.scale(inv);
            let grads = net.backward(&fwd, &grad)?;
            adam.step_network(&mut net, &grads)?;
            if !net.all_finite() {
                return Err(Error::NonFinite(format!(
                    "classifier diverged in epoch {epoch}"
                )));
            }
        }
    }

    let scores = if test_x.rows() == 0 {
        Matrix::zeros(0, classes)
    } else {
        softmax(net.forward(test_x)?.output())
    };
    let labels = (0..scores.rows())
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
        .collect();
    Ok(MlpOutcome { labels, scores })
}
