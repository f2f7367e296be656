//! Adam optimizer over flat parameter slices.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

use super::{Gradients, Network};

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> Default for AdamConfig<T> {
    fn default() -> Self {
        AdamConfig {
            learning_rate: T::from_f64_lossy(1e-3),
            beta1: T::from_f64_lossy(0.9),
            beta2: T::from_f64_lossy(0.999),
            epsilon: T::from_f64_lossy(1e-8),
        }
    }
}

impl<T: Scalar> AdamConfig<T> {
    pub fn with_learning_rate(learning_rate: T) -> Self {
        AdamConfig {
            learning_rate,
            ..Default::default()
        }
    }
}

/// First/second moment accumulators, one slot per parameter tensor, sharing a
/// single step counter.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    cfg: AdamConfig<T>,
    step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(cfg: AdamConfig<T>, slot_lens: &[usize]) -> Self {
        AdamState {
            cfg,
            step: 0,
            m: slot_lens.iter().map(|&l| vec![T::zero(); l]).collect(),
            v: slot_lens.iter().map(|&l| vec![T::zero(); l]).collect(),
        }
    }

    /// Moment slots shaped after a network: `[w0, b0, w1, b1, ...]`.
    pub fn for_network(cfg: AdamConfig<T>, net: &Network<T>) -> Self {
        let mut lens = Vec::with_capacity(net.num_layers() * 2);
        for l in 0..net.num_layers() {
            lens.push(net.weights()[l].data().len());
            lens.push(net.biases()[l].len());
        }
        AdamState::new(cfg, &lens)
    }

    pub fn for_matrix(cfg: AdamConfig<T>, m: &Matrix<T>) -> Self {
        AdamState::new(cfg, &[m.data().len()])
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One Adam update over a set of parameter slices. Slices must match the
    /// slot layout the state was built with.
    pub fn step_slices(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "{} parameter slots, {} params, {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for i in 0..params.len() {
            if params[i].len() != self.m[i].len() || grads[i].len() != self.m[i].len() {
                return Err(Error::Shape(format!(
                    "slot {} expects {} values",
                    i,
                    self.m[i].len()
                )));
            }
        }
        self.step += 1;
        let (c1, c2) = self.bias_corrections();
        for i in 0..params.len() {
            Self::update_slot(
                &self.cfg,
                c1,
                c2,
                &mut self.m[i],
                &mut self.v[i],
                params[i],
                grads[i],
            );
        }
        Ok(())
    }

    /// One Adam update over a full network.
    pub fn step_network(&mut self, net: &mut Network<T>, grads: &Gradients<T>) -> Result<()> {
        if grads.weights.len() != net.num_layers() || self.m.len() != net.num_layers() * 2 {
            return Err(Error::Shape("gradient layout does not match network".into()));
        }
        self.step += 1;
        let (c1, c2) = self.bias_corrections();
        for l in 0..grads.weights.len() {
            Self::update_slot(
                &self.cfg,
                c1,
                c2,
                &mut self.m[2 * l],
                &mut self.v[2 * l],
                net.weight_mut(l).data_mut(),
                grads.weights[l].data(),
            );
            Self::update_slot(
                &self.cfg,
                c1,
                c2,
                &mut self.m[2 * l + 1],
                &mut self.v[2 * l + 1],
                net.bias_mut(l).as_mut_slice(),
                &grads.biases[l],
            );
        }
        Ok(())
    }

    /// One Adam update over a single matrix (cluster centroids).
    pub fn step_matrix(&mut self, params: &mut Matrix<T>, grads: &Matrix<T>) -> Result<()> {
        self.step_slices(&mut [params.data_mut()], &[grads.data()])
    }

    fn bias_corrections(&self) -> (T, T) {
        let t = self.step as i32;
        (
            T::one() - self.cfg.beta1.powi(t),
            T::one() - self.cfg.beta2.powi(t),
        )
    }

    fn update_slot(
        cfg: &AdamConfig<T>,
        c1: T,
        c2: T,
        m: &mut [T],
        v: &mut [T],
        p: &mut [T],
        g: &[T],
    ) {
        let one = T::one();
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (one - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (one - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradients_leave_parameters_untouched() {
        let mut state: AdamState<f64> = AdamState::new(AdamConfig::default(), &[3]);
        let mut p = [1.0, -2.0, 0.5];
        let g = [0.0; 3];
        state.step_slices(&mut [&mut p], &[&g]).unwrap();
        assert_eq!(p, [1.0, -2.0, 0.5]);
        assert_eq!(state.step_count(), 1);
    }

    // Hand-evaluated Adam recurrence, written independently of the optimizer.
    fn hand_adam(grads: &[f64], lr: f64) -> f64 {
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        let (mut m, mut v, mut theta) = (0.0, 0.0, 0.0);
        for (t, &g) in grads.iter().enumerate() {
            let t = (t + 1) as i32;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let m_hat = m / (1.0 - b1.powi(t));
            let v_hat = v / (1.0 - b2.powi(t));
            theta -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        theta
    }

    #[test]
    fn first_step_is_a_bias_corrected_unit_step() {
        let cfg = AdamConfig::with_learning_rate(0.01);
        let mut state: AdamState<f64> = AdamState::new(cfg, &[1]);
        let mut p = [0.0];
        state.step_slices(&mut [&mut p[..]], &[&[2.0]]).unwrap();
        let expected = hand_adam(&[2.0], 0.01);
        assert!((p[0] - expected).abs() < 1e-15);
        assert!((p[0] + 0.01).abs() < 1e-8, "step ~= -lr, got {}", p[0]);
    }

    #[test]
    fn two_steps_match_the_hand_recurrence() {
        let cfg = AdamConfig::with_learning_rate(0.01);
        let mut state: AdamState<f64> = AdamState::new(cfg, &[1]);
        let mut p = [0.0];
        state.step_slices(&mut [&mut p[..]], &[&[2.0]]).unwrap();
        state.step_slices(&mut [&mut p[..]], &[&[-2.0]]).unwrap();
        let expected = hand_adam(&[2.0, -2.0], 0.01);
        assert!((p[0] - expected).abs() < 1e-10);
        assert_eq!(state.step_count(), 2);
    }

    #[test]
    fn slot_layout_is_enforced() {
        let mut state: AdamState<f64> = AdamState::new(AdamConfig::default(), &[2]);
        let mut p = [0.0; 3];
        assert!(state.step_slices(&mut [&mut p[..]], &[&[0.0; 3]]).is_err());
    }
}
