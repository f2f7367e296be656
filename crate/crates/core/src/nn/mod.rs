//! Dense feed-forward networks with exact backpropagation.
//!
//! A [`Network`] is a chain of affine layers with per-layer activations in
//! the row-vector convention: the batch is `n x in`, weights are `in x out`,
//! and `A_{l+1} = act(A_l W_l + b_l)`. Gradients are computed analytically;
//! the test suites check them against central finite differences.

mod adam;
mod autoencoder;

pub use adam::{AdamConfig, AdamState};
pub use autoencoder::{
    reconstruction_loss, train_autoencoder, Autoencoder, TrainLog, TrainOptions,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Per-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
}

impl Activation {
    fn apply<T: Scalar>(&self, m: &mut Matrix<T>) {
        if let Activation::Relu = self {
            for v in m.data_mut() {
                if *v < T::zero() {
                    *v = T::zero();
                }
            }
        }
    }
}

/// All layer activations from one forward pass; `layers[0]` is the input and
/// `layers[i + 1]` the output of layer `i`.
#[derive(Debug, Clone)]
pub struct Forward<T> {
    layers: Vec<Matrix<T>>,
}

impl<T: Scalar> Forward<T> {
    pub fn layer(&self, i: usize) -> &Matrix<T> {
        &self.layers[i]
    }

    pub fn output(&self) -> &Matrix<T> {
        self.layers.last().expect("forward pass has layers")
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn into_output(mut self) -> Matrix<T> {
        self.layers.pop().expect("forward pass has layers")
    }
}

/// Parameter gradients mirroring a network's weights and biases.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub weights: Vec<Matrix<T>>,
    pub biases: Vec<Vec<T>>,
}

/// A dense feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    dims: Vec<usize>,
    weights: Vec<Matrix<T>>,
    biases: Vec<Vec<T>>,
    activations: Vec<Activation>,
}

impl<T: Scalar> Network<T> {
    /// Fan-in scaled uniform init, drawing from the caller's generator so a
    /// whole training run shares one seeded stream.
    pub fn seeded_with_rng(
        dims: &[usize],
        activations: Vec<Activation>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        Self::validate_dims(dims, &activations)?;
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            let mut data = Vec::with_capacity(fan_in * fan_out);
            for _ in 0..fan_in * fan_out {
                let u: f64 = rng.random::<f64>() * 2.0 - 1.0;
                data.push(T::from_f64_lossy(u * limit));
            }
            weights.push(Matrix::from_vec(fan_in, fan_out, data)?);
            biases.push(vec![T::zero(); fan_out]);
        }
        Ok(Network {
            dims: dims.to_vec(),
            weights,
            biases,
            activations,
        })
    }

    /// All-zero parameters; useful as a base for hand-built networks.
    pub fn zeros(dims: &[usize], activations: Vec<Activation>) -> Result<Self> {
        Self::validate_dims(dims, &activations)?;
        let weights = (0..dims.len() - 1)
            .map(|l| Matrix::zeros(dims[l], dims[l + 1]))
            .collect();
        let biases = (0..dims.len() - 1).map(|l| vec![T::zero(); dims[l + 1]]).collect();
        Ok(Network {
            dims: dims.to_vec(),
            weights,
            biases,
            activations,
        })
    }

    pub fn from_parts(
        dims: Vec<usize>,
        weights: Vec<Matrix<T>>,
        biases: Vec<Vec<T>>,
        activations: Vec<Activation>,
    ) -> Result<Self> {
        Self::validate_dims(&dims, &activations)?;
        if weights.len() != dims.len() - 1 || biases.len() != dims.len() - 1 {
            return Err(Error::Shape("one weight matrix and bias per layer".into()));
        }
        for l in 0..weights.len() {
            if weights[l].rows() != dims[l] || weights[l].cols() != dims[l + 1] {
                return Err(Error::Shape(format!(
                    "layer {} weights are {}x{}, expected {}x{}",
                    l,
                    weights[l].rows(),
                    weights[l].cols(),
                    dims[l],
                    dims[l + 1]
                )));
            }
            if biases[l].len() != dims[l + 1] {
                return Err(Error::Shape(format!(
                    "layer {} bias has {} entries, expected {}",
                    l,
                    biases[l].len(),
                    dims[l + 1]
                )));
            }
        }
        Ok(Network {
            dims,
            weights,
            biases,
            activations,
        })
    }

    fn validate_dims(dims: &[usize], activations: &[Activation]) -> Result<()> {
        if dims.len() < 2 {
            return Err(Error::Config("a network needs at least one layer".into()));
        }
        if dims.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if activations.len() != dims.len() - 1 {
            return Err(Error::Config(format!(
                "{} activations for {} layers",
                activations.len(),
                dims.len() - 1
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("network has layers")
    }

    pub fn weights(&self) -> &[Matrix<T>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<T>] {
        &self.biases
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn weight_mut(&mut self, l: usize) -> &mut Matrix<T> {
        &mut self.weights[l]
    }

    pub fn bias_mut(&mut self, l: usize) -> &mut Vec<T> {
        &mut self.biases[l]
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(Matrix::all_finite)
            && self
                .biases
                .iter()
                .all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Runs the first `upto` layers and keeps every intermediate activation.
    pub fn forward_layers(&self, batch: &Matrix<T>, upto: usize) -> Result<Forward<T>> {
        if batch.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "batch has {} columns, network expects {}",
                batch.cols(),
                self.input_dim()
            )));
        }
        debug_assert!(upto <= self.num_layers());
        let mut layers = Vec::with_capacity(upto + 1);
        layers.push(batch.clone());
        for l in 0..upto {
            let mut z = layers[l].matmul(&self.weights[l])?;
            z = z.add_row_vector(&self.biases[l])?;
            self.activations[l].apply(&mut z);
            layers.push(z);
        }
        Ok(Forward { layers })
    }

    /// Full forward pass.
    pub fn forward(&self, batch: &Matrix<T>) -> Result<Forward<T>> {
        self.forward_layers(batch, self.num_layers())
    }

    /// Backpropagates a loss gradient w.r.t. the network output through every
    /// layer of the recorded forward pass.
    ///
    /// The ReLU derivative is taken as zero at exactly zero. Returns the
    /// parameter gradients; the gradient w.r.t. the input is available via
    /// [`Network::backward_with_input_grad`].
    pub fn backward(&self, fwd: &Forward<T>, output_grad: &Matrix<T>) -> Result<Gradients<T>> {
        Ok(self.backward_with_input_grad(fwd, output_grad)?.0)
    }

    pub fn backward_with_input_grad(
        &self,
        fwd: &Forward<T>,
        output_grad: &Matrix<T>,
    ) -> Result<(Gradients<T>, Matrix<T>)> {
        let l_count = fwd.len() - 1;
        debug_assert!(l_count <= self.num_layers());
        if output_grad.rows() != fwd.output().rows() || output_grad.cols() != fwd.output().cols() {
            return Err(Error::Shape(format!(
                "output gradient is {}x{}, activations are {}x{}",
                output_grad.rows(),
                output_grad.cols(),
                fwd.output().rows(),
                fwd.output().cols()
            )));
        }
        let mut grad_w = Vec::with_capacity(l_count);
        let mut grad_b = Vec::with_capacity(l_count);
        let mut g = output_grad.clone();
        for l in (0..l_count).rev() {
            if self.activations[l] == Activation::Relu {
                g = g.zip(fwd.layer(l + 1), |gi, a| {
                    if a > T::zero() {
                        gi
                    } else {
                        T::zero()
                    }
                })?;
            }
            grad_w.push(fwd.layer(l).transposed_matmul(&g)?);
            grad_b.push(g.column_sums());
            g = g.matmul_transposed(&self.weights[l])?;
        }
        grad_w.reverse();
        grad_b.reverse();
        Ok((
            Gradients {
                weights: grad_w,
                biases: grad_b,
            },
            g,
        ))
    }
}

/// Convenience seeded constructor used by tests and the training loop.
pub fn seeded_network<T: Scalar>(
    dims: &[usize],
    activations: Vec<Activation>,
    seed: u64,
) -> Result<Network<T>> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Network::seeded_with_rng(dims, activations, &mut rng)
}
