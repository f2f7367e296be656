//! Deep embedded clustering, phase two.
//!
//! After autoencoder pretraining, instances are softly assigned to centroids
//! with a Student's-t kernel (`soft_assign`), sharpened into an auxiliary
//! target distribution (`target_distribution`), and the KL divergence between
//! the two is minimized jointly over the encoder weights and the centroids
//! (`dec_fit`). The gradients are analytic and checked against finite
//! differences in the test suites.

use crate::cluster::{kmeans, HardClustering, KmeansInit, KMEANS_MAX_ITER, KMEANS_TOL};
use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::nn::{AdamConfig, AdamState, Autoencoder, Network};
use crate::scalar::Scalar;

/// Row-stochastic soft assignment `q_ij` of instances to clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment<T> {
    q: Matrix<T>,
}

impl<T: Scalar> SoftAssignment<T> {
    /// Validates row-stochasticity (1e-9) and the entry range.
    pub fn from_matrix(q: Matrix<T>) -> Result<Self> {
        validate_row_stochastic(&q, "soft assignment")?;
        Ok(SoftAssignment { q })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.q
    }

    pub fn n(&self) -> usize {
        self.q.rows()
    }

    pub fn s(&self) -> usize {
        self.q.cols()
    }

    /// Row-wise argmax, ties to the lowest cluster index.
    pub fn hard(&self) -> Result<HardClustering> {
        let assignment = (0..self.q.rows())
            .map(|i| {
                let row = self.q.row(i);
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect();
        HardClustering::new(assignment, self.q.cols())
    }
}

/// Row-stochastic auxiliary target `p_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDistribution<T> {
    p: Matrix<T>,
}

impl<T: Scalar> TargetDistribution<T> {
    pub fn from_matrix(p: Matrix<T>) -> Result<Self> {
        validate_row_stochastic(&p, "target distribution")?;
        Ok(TargetDistribution { p })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.p
    }
}

fn validate_row_stochastic<T: Scalar>(m: &Matrix<T>, what: &str) -> Result<()> {
    let tol = T::from_f64_lossy(1e-9);
    for i in 0..m.rows() {
        let mut sum = T::zero();
        for &v in m.row(i) {
            if !(T::zero()..=T::one() + tol).contains(&v) {
                return Err(Error::NonFinite(format!(
                    "{what} entry {v} out of [0, 1] in row {i}"
                )));
            }
            sum += v;
        }
        if (sum - T::one()).abs() > tol {
            return Err(Error::NonFinite(format!(
                "{what} row {i} sums to {sum}, expected 1"
            )));
        }
    }
    Ok(())
}

/// Student's-t similarity between embedded points and centroids:
/// `q_ij = (1 + ||z_i - mu_j||^2 / alpha)^(-(alpha+1)/2)`, normalized per row.
pub fn soft_assign<T: Scalar>(
    z: &Matrix<T>,
    centroids: &Matrix<T>,
    alpha: T,
) -> Result<SoftAssignment<T>> {
    if centroids.rows() == 0 {
        return Err(Error::Empty("soft assignment needs centroids".into()));
    }
    if z.cols() != centroids.cols() {
        return Err(Error::Shape(format!(
            "latent dim {} vs centroid dim {}",
            z.cols(),
            centroids.cols()
        )));
    }
    if alpha <= T::zero() {
        return Err(Error::Config("alpha must be positive".into()));
    }
    let exponent = -(alpha + T::one()) / T::from_f64_lossy(2.0);
    let mut q = Matrix::zeros(z.rows(), centroids.rows());
    for i in 0..z.rows() {
        let mut sum = T::zero();
        for j in 0..centroids.rows() {
            let d2 = squared_distance(z.row(i), centroids.row(j));
            let kernel = (T::one() + d2 / alpha).powf(exponent);
            q.set(i, j, kernel);
            sum += kernel;
        }
        if sum <= T::zero() || !sum.is_finite() {
            return Err(Error::DegenerateCluster(format!(
                "instance {i} has zero similarity to every centroid"
            )));
        }
        for j in 0..centroids.rows() {
            q.set(i, j, q.get(i, j) / sum);
        }
    }
    SoftAssignment::from_matrix(q)
}

/// Sharpened target: `p_ij = (q_ij^2 / f_j) / sum_j'(q_ij'^2 / f_j')` with
/// soft cluster frequencies `f_j = sum_i q_ij`.
pub fn target_distribution<T: Scalar>(q: &SoftAssignment<T>) -> Result<TargetDistribution<T>> {
    let qm = q.matrix();
    let freq = qm.column_sums();
    for (j, &f) in freq.iter().enumerate() {
        if f <= T::zero() {
            return Err(Error::DegenerateCluster(format!(
                "cluster {j} has zero soft frequency"
            )));
        }
    }
    let mut p = Matrix::zeros(qm.rows(), qm.cols());
    for i in 0..qm.rows() {
        let mut sum = T::zero();
        for j in 0..qm.cols() {
            let v = qm.get(i, j) * qm.get(i, j) / freq[j];
            p.set(i, j, v);
            sum += v;
        }
        for j in 0..qm.cols() {
            p.set(i, j, p.get(i, j) / sum);
        }
    }
    TargetDistribution::from_matrix(p)
}

/// `KL(P || Q) = sum_ij p_ij ln(p_ij / q_ij)` with `0 ln 0 = 0`.
pub fn kl_divergence<T: Scalar>(p: &TargetDistribution<T>, q: &SoftAssignment<T>) -> Result<T> {
    let (pm, qm) = (p.matrix(), q.matrix());
    if pm.rows() != qm.rows() || pm.cols() != qm.cols() {
        return Err(Error::Shape(format!(
            "KL of {}x{} against {}x{}",
            pm.rows(),
            pm.cols(),
            qm.rows(),
            qm.cols()
        )));
    }
    let mut total = T::zero();
    for (pv, qv) in pm.data().iter().zip(qm.data()) {
        if *pv > T::zero() {
            if *qv <= T::zero() {
                return Err(Error::NonFinite(
                    "KL divergence with zero soft assignment mass".into(),
                ));
            }
            total += *pv * (*pv / *qv).ln();
        }
    }
    // Gibbs: non-negative up to rounding.
    Ok(total.max(T::zero()))
}

/// Analytic gradients of `KL(P || Q)` through the Student's-t kernel, with
/// `P` held constant:
///
/// `dL/dz_i  =  (a+1)/a * sum_j (1 + ||z_i-mu_j||^2/a)^-1 (p_ij - q_ij)(z_i - mu_j)`
/// `dL/dmu_j = -(a+1)/a * sum_i (1 + ||z_i-mu_j||^2/a)^-1 (p_ij - q_ij)(z_i - mu_j)`
pub fn kl_gradients<T: Scalar>(
    z: &Matrix<T>,
    centroids: &Matrix<T>,
    p: &TargetDistribution<T>,
    q: &SoftAssignment<T>,
    alpha: T,
) -> Result<(Matrix<T>, Matrix<T>)> {
    let (n, e, s) = (z.rows(), z.cols(), centroids.rows());
    let (pm, qm) = (p.matrix(), q.matrix());
    if centroids.cols() != e || pm.rows() != n || pm.cols() != s || qm.rows() != n || qm.cols() != s
    {
        return Err(Error::Shape("KL gradient shapes disagree".into()));
    }
    let factor = (alpha + T::one()) / alpha;
    let mut dz = Matrix::zeros(n, e);
    let mut dmu = Matrix::zeros(s, e);
    for i in 0..n {
        for j in 0..s {
            let d2 = squared_distance(z.row(i), centroids.row(j));
            let coeff = factor * (pm.get(i, j) - qm.get(i, j)) / (T::one() + d2 / alpha);
            for k in 0..e {
                let diff = z.get(i, k) - centroids.get(j, k);
                dz.set(i, k, dz.get(i, k) + coeff * diff);
                dmu.set(j, k, dmu.get(j, k) - coeff * diff);
            }
        }
    }
    Ok((dz, dmu))
}

/// Seeded k-means restarts for the centroid initialization.
const KMEANS_RESTARTS: usize = 10;

/// Refinement knobs.
#[derive(Debug, Clone, Copy)]
pub struct DecConfig<T> {
    /// Student's-t degrees of freedom.
    pub alpha: T,
    /// Stop when the fraction of instances changing hard assignment between
    /// consecutive target refreshes falls below this.
    pub tol: T,
    pub max_iter: usize,
    /// Full-batch gradient iterations between target refreshes.
    pub update_interval: usize,
    pub learning_rate: T,
}

impl<T: Scalar> Default for DecConfig<T> {
    fn default() -> Self {
        DecConfig {
            alpha: T::one(),
            tol: T::from_f64_lossy(1e-3),
            max_iter: 100,
            update_interval: 1,
            learning_rate: T::from_f64_lossy(1e-3),
        }
    }
}

impl<T: Scalar> DecConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.alpha <= T::zero() {
            return Err(Error::Config("alpha must be positive".into()));
        }
        if !(self.tol > T::zero() && self.tol < T::one()) {
            return Err(Error::Config("tol must lie in (0, 1)".into()));
        }
        if self.update_interval == 0 {
            return Err(Error::Config("update interval must be at least 1".into()));
        }
        Ok(())
    }
}

/// The result of a refinement run: the refined encoder, the cluster centroids
/// in its latent space, and the final hard memberships.
#[derive(Debug, Clone)]
pub struct ClusterModel<T> {
    pub encoder: Network<T>,
    pub centroids: Matrix<T>,
    pub hard: HardClustering,
    /// Hard clustering at the k-means initialization, before any refinement.
    pub kmeans_init: HardClustering,
    /// Whether the assignment-change fraction dropped below `tol`.
    pub converged: bool,
}

impl<T: Scalar> ClusterModel<T> {
    pub fn s(&self) -> usize {
        self.centroids.rows()
    }

    pub fn latent_dim(&self) -> usize {
        self.centroids.cols()
    }

    pub fn sizes(&self) -> &[usize] {
        self.hard.sizes()
    }

    /// Latent representation of new instances under the refined encoder.
    pub fn encode(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        Ok(self.encoder.forward(x)?.into_output())
    }

    /// Nearest centroid by squared Euclidean distance, lowest index on ties.
    pub fn nearest_cluster(&self, z_row: &[T]) -> Result<usize> {
        if z_row.len() != self.centroids.cols() {
            return Err(Error::Shape(format!(
                "latent point of dim {} vs centroids of dim {}",
                z_row.len(),
                self.centroids.cols()
            )));
        }
        Ok(crate::cluster::nearest_centroid(z_row, &self.centroids))
    }
}

/// Joint refinement of encoder weights and centroids.
///
/// Initial centroids come from seeded k-means on the encoded data. Each
/// iteration takes one full-batch Adam step on both parameter groups; the
/// target distribution refreshes every `update_interval` iterations and the
/// loop stops when assignments stabilize (fraction changing < `tol`) or at
/// `max_iter`. Deterministic for a fixed seed. With `max_iter == 0` the
/// returned hard clustering is exactly the k-means initialization.
pub fn dec_fit<T: Scalar>(
    ae: &Autoencoder<T>,
    x: &Matrix<T>,
    s: usize,
    cfg: &DecConfig<T>,
    seed: u64,
) -> Result<ClusterModel<T>> {
    cfg.validate()?;
    if x.rows() < s {
        return Err(Error::Config(format!(
            "{} instances cannot form {} clusters",
            x.rows(),
            s
        )));
    }
    let mut encoder = ae.encoder_network();
    let z0 = encoder.forward(x)?.into_output();
    // Several seeded k-means restarts, keeping the lowest inertia.
    let mut km = None;
    for restart in 0..KMEANS_RESTARTS {
        let candidate = kmeans(
            &z0,
            s,
            &KmeansInit::Seeded,
            KMEANS_MAX_ITER,
            KMEANS_TOL,
            crate::derive_seed(seed, 0x300 + restart as u64),
        )?;
        km = match km {
            None => Some(candidate),
            Some(best) if candidate.inertia < best.inertia => Some(candidate),
            Some(best) => Some(best),
        };
    }
    let km = km.expect("at least one restart");
    let kmeans_init = km.clustering.clone();
    let mut centroids = km.centroids;

    let adam_cfg = AdamConfig::with_learning_rate(cfg.learning_rate);
    let mut adam_enc = AdamState::for_network(adam_cfg, &encoder);
    let mut adam_cen = AdamState::for_matrix(adam_cfg, &centroids);

    let mut target: Option<TargetDistribution<T>> = None;
    let mut last_refresh_hard: Option<HardClustering> = None;
    let mut converged = false;

    for iter in 0..cfg.max_iter {
        let fwd = encoder.forward(x)?;
        let q = soft_assign(fwd.output(), &centroids, cfg.alpha)
            .map_err(|e| degenerate_at(e, iter))?;
        if iter % cfg.update_interval == 0 {
            let hard = q.hard()?;
            if let Some(prev) = &last_refresh_hard {
                let changed = T::from_f64_lossy(prev.changed_fraction(&hard));
                if changed < cfg.tol {
                    converged = true;
                    break;
                }
            }
            last_refresh_hard = Some(hard);
            target = Some(target_distribution(&q).map_err(|e| degenerate_at(e, iter))?);
        }
        let p = target.as_ref().expect("target refreshed on iteration 0");
        let (dz, dmu) = kl_gradients(fwd.output(), &centroids, p, &q, cfg.alpha)?;
        let grads = encoder.backward(&fwd, &dz)?;
        adam_enc.step_network(&mut encoder, &grads)?;
        adam_cen.step_matrix(&mut centroids, &dmu)?;
        if !encoder.all_finite() || !centroids.all_finite() {
            return Err(Error::NonFinite(format!(
                "refinement diverged at iteration {iter}"
            )));
        }
    }

    let z = encoder.forward(x)?.into_output();
    let q = soft_assign(&z, &centroids, cfg.alpha)?;
    let hard = q.hard()?;
    Ok(ClusterModel {
        encoder,
        centroids,
        hard,
        kmeans_init,
        converged,
    })
}

fn degenerate_at(e: Error, iter: usize) -> Error {
    match e {
        Error::DegenerateCluster(msg) => {
            Error::DegenerateCluster(format!("{msg} (refinement iteration {iter})"))
        }
        other => other,
    }
}
