//! Symmetric autoencoders and their training loop.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

use super::{Activation, AdamConfig, AdamState, Forward, Gradients, Network};

/// A mirrored encoder/decoder network `d, hidden..., e, ...hidden, d`.
///
/// Hidden layers are rectified; the layer producing the bottleneck and the
/// output layer are linear, keeping the latent space unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder<T> {
    net: Network<T>,
    /// Index into `dims` of the bottleneck width `e`; the encoder is the
    /// first `bottleneck` layers.
    bottleneck: usize,
}

impl<T: Scalar> Autoencoder<T> {
    /// Seeded construction from the full symmetric dimension chain.
    pub fn seeded(layer_dims: &[usize], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::seeded_with_rng(layer_dims, &mut rng)
    }

    pub fn seeded_with_rng(layer_dims: &[usize], rng: &mut ChaCha8Rng) -> Result<Self> {
        let bottleneck = Self::validate_dims(layer_dims)?;
        let activations = Self::default_activations(layer_dims.len() - 1, bottleneck);
        let net = Network::seeded_with_rng(layer_dims, activations, rng)?;
        Ok(Autoencoder { net, bottleneck })
    }

    /// Wraps an existing network; the dimension chain must be mirrored.
    pub fn from_network(net: Network<T>) -> Result<Self> {
        let bottleneck = Self::validate_dims(net.dims())?;
        Ok(Autoencoder { net, bottleneck })
    }

    fn validate_dims(dims: &[usize]) -> Result<usize> {
        if dims.len() < 2 {
            return Err(Error::Config("autoencoder needs at least one layer".into()));
        }
        if dims.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        for i in 0..dims.len() / 2 {
            if dims[i] != dims[dims.len() - 1 - i] {
                return Err(Error::Config(format!(
                    "decoder must mirror encoder: dims[{}]={} vs dims[{}]={}",
                    i,
                    dims[i],
                    dims.len() - 1 - i,
                    dims[dims.len() - 1 - i]
                )));
            }
        }
        Ok(dims.len() / 2)
    }

    fn default_activations(num_layers: usize, bottleneck: usize) -> Vec<Activation> {
        (0..num_layers)
            .map(|l| {
                if l + 1 == bottleneck || l + 1 == num_layers {
                    Activation::Linear
                } else {
                    Activation::Relu
                }
            })
            .collect()
    }

    /// Builds the full chain `d, hidden..., e, ...hidden, d` from the encoder
    /// interior (`hidden..., e`).
    pub fn full_dims(input_dim: usize, encoder_interior: &[usize]) -> Vec<usize> {
        let mut dims = Vec::with_capacity(encoder_interior.len() * 2 + 1);
        dims.push(input_dim);
        dims.extend_from_slice(encoder_interior);
        dims.extend(encoder_interior.iter().rev().skip(1));
        dims.push(input_dim);
        dims
    }

    pub fn network(&self) -> &Network<T> {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network<T> {
        &mut self.net
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.net.dims()[self.bottleneck]
    }

    /// All layer activations of the full encode/decode pass.
    pub fn forward(&self, batch: &Matrix<T>) -> Result<Forward<T>> {
        self.net.forward(batch)
    }

    /// Bottleneck activations: `n x d` in, `n x e` out.
    pub fn encode(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        Ok(self.net.forward_layers(x, self.bottleneck)?.into_output())
    }

    /// A standalone copy of the encoder layers.
    pub fn encoder_network(&self) -> Network<T> {
        let dims = self.net.dims()[..=self.bottleneck].to_vec();
        let weights = self.net.weights()[..self.bottleneck].to_vec();
        let biases = self.net.biases()[..self.bottleneck].to_vec();
        let activations = self.net.activations()[..self.bottleneck].to_vec();
        Network::from_parts(dims, weights, biases, activations)
            .expect("encoder half of a valid autoencoder is valid")
    }

    /// Reconstruction loss and its exact parameter gradients for one batch.
    pub fn reconstruction_gradients(&self, batch: &Matrix<T>) -> Result<(T, Gradients<T>)> {
        let fwd = self.net.forward(batch)?;
        let loss = reconstruction_loss(batch, fwd.output())?;
        let scale = T::from_f64_lossy(2.0) / T::from_usize(batch.rows()).expect("batch size");
        let output_grad = fwd.output().sub(batch)?.scale(scale);
        let grads = self.net.backward(&fwd, &output_grad)?;
        Ok((loss, grads))
    }
}

/// Mean over instances of the squared Euclidean reconstruction error.
pub fn reconstruction_loss<T: Scalar>(x: &Matrix<T>, x_hat: &Matrix<T>) -> Result<T> {
    if x.rows() != x_hat.rows() || x.cols() != x_hat.cols() {
        return Err(Error::Shape(format!(
            "reconstruction of {}x{} against {}x{}",
            x_hat.rows(),
            x_hat.cols(),
            x.rows(),
            x.cols()
        )));
    }
    if x.rows() == 0 {
        return Err(Error::Empty("reconstruction loss of zero instances".into()));
    }
    let mut total = T::zero();
    for i in 0..x.rows() {
        total += crate::matrix::squared_distance(x.row(i), x_hat.row(i));
    }
    Ok(total / T::from_usize(x.rows()).expect("row count"))
}

/// Knobs for [`train_autoencoder`].
#[derive(Debug, Clone)]
pub struct TrainOptions<T> {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig<T>,
}

impl<T: Scalar> Default for TrainOptions<T> {
    fn default() -> Self {
        TrainOptions {
            epochs: 50,
            batch_size: 256,
            adam: AdamConfig::default(),
        }
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone)]
pub struct TrainLog<T> {
    /// Mean reconstruction loss per epoch, weighted over batches.
    pub epoch_losses: Vec<T>,
    pub wall: Duration,
    pub seed: u64,
}

/// Trains a fresh autoencoder on `data` with mini-batch Adam.
///
/// Deterministic for a fixed seed: the parameter init and the per-epoch
/// shuffles come from one seeded stream. With `epochs == 0` the seeded
/// initialization is returned untouched. The last partial batch of an epoch
/// is used as-is.
pub fn train_autoencoder<T: Scalar>(
    data: &Matrix<T>,
    layer_dims: &[usize],
    opts: &TrainOptions<T>,
    seed: u64,
) -> Result<(Autoencoder<T>, TrainLog<T>)> {
    if data.rows() == 0 {
        return Err(Error::Empty("autoencoder training data".into()));
    }
    if !data.all_finite() {
        return Err(Error::NonFinite("autoencoder training data".into()));
    }
    if opts.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ae = Autoencoder::seeded_with_rng(layer_dims, &mut rng)?;
    let mut adam = AdamState::for_network(opts.adam, ae.network());
    let mut log = TrainLog {
        epoch_losses: Vec::with_capacity(opts.epochs),
        wall: Duration::ZERO,
        seed,
    };
    let n = data.rows();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = T::zero();
        for chunk in order.chunks(opts.batch_size.min(n)) {
            let batch = data.select_rows(chunk);
            let (loss, grads) = ae.reconstruction_gradients(&batch)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "reconstruction loss diverged in epoch {}",
                    epoch
                )));
            }
            loss_sum += loss * T::from_usize(chunk.len()).expect("chunk len");
            adam.step_network(ae.network_mut(), &grads)?;
        }
        if !ae.network().all_finite() {
            return Err(Error::NonFinite(format!(
                "parameters diverged in epoch {}",
                epoch
            )));
        }
        log.epoch_losses
            .push(loss_sum / T::from_usize(n).expect("instance count"));
    }
    log.wall = start.elapsed();
    Ok((ae, log))
}
