//! 2-D projection export: top-2 principal components of a latent matrix.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Centers `z`, projects it onto its top two principal components (power
/// iteration with deflation; deterministic start), and writes `x,y,cluster`
/// rows. With a 1-D latent space the second coordinate is zero.
pub fn export_projection<T: Scalar>(
    z: &Matrix<T>,
    assignments: &[usize],
    path: &Path,
) -> Result<()> {
    if assignments.len() != z.rows() {
        return Err(Error::Shape(format!(
            "{} assignments for {} latent rows",
            assignments.len(),
            z.rows()
        )));
    }
    if z.cols() == 0 || z.rows() == 0 {
        return Err(Error::Empty("projection input".into()));
    }
    let coords = project_2d(z);
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "x,y,cluster")?;
    for i in 0..z.rows() {
        writeln!(
            out,
            "{},{},{}",
            coords.get(i, 0),
            coords.get(i, 1),
            assignments[i]
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Top-2 PCA coordinates of the centered rows.
pub fn project_2d<T: Scalar>(z: &Matrix<T>) -> Matrix<T> {
    let (n, e) = (z.rows(), z.cols());
    let n_t = T::from_usize(n).expect("rows");
    let means: Vec<T> = z.column_sums().into_iter().map(|s| s / n_t).collect();
    let mut centered = z.clone();
    for i in 0..n {
        for (j, v) in centered.row_mut(i).iter_mut().enumerate() {
            *v -= means[j];
        }
    }
    // covariance (e x e)
    let cov = centered
        .transposed_matmul(&centered)
        .expect("shape by construction")
        .scale(T::one() / n_t);

    let mut components: Vec<Vec<T>> = Vec::with_capacity(2);
    let mut deflated = cov;
    for _ in 0..2.min(e) {
        let v = power_iteration(&deflated);
        // deflate: C - lambda v v^T
        let lambda = rayleigh(&deflated, &v);
        for i in 0..e {
            for j in 0..e {
                let d = deflated.get(i, j) - lambda * v[i] * v[j];
                deflated.set(i, j, d);
            }
        }
        components.push(v);
    }
    let mut coords = Matrix::zeros(n, 2);
    for i in 0..n {
        for (c, comp) in components.iter().enumerate() {
            let mut acc = T::zero();
            for (k, &w) in comp.iter().enumerate() {
                acc += centered.get(i, k) * w;
            }
            coords.set(i, c, acc);
        }
    }
    coords
}

fn rayleigh<T: Scalar>(m: &Matrix<T>, v: &[T]) -> T {
    let mut mv = vec![T::zero(); v.len()];
    for i in 0..v.len() {
        for (j, &vj) in v.iter().enumerate() {
            mv[i] += m.get(i, j) * vj;
        }
    }
    v.iter().zip(&mv).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

/// Power iteration from a deterministic start: the basis vector of the
/// largest diagonal entry. A zero matrix yields that basis vector unchanged,
/// which projects centered zero data to the origin.
fn power_iteration<T: Scalar>(m: &Matrix<T>) -> Vec<T> {
    let e = m.rows();
    let mut start = 0;
    for i in 1..e {
        if m.get(i, i) > m.get(start, start) {
            start = i;
        }
    }
    let mut v = vec![T::zero(); e];
    v[start] = T::one();
    for _ in 0..200 {
        let mut next = vec![T::zero(); e];
        for i in 0..e {
            for (j, &vj) in v.iter().enumerate() {
                next[i] += m.get(i, j) * vj;
            }
        }
        let norm = next
            .iter()
            .fold(T::zero(), |acc, &x| acc + x * x)
            .sqrt();
        if norm <= T::epsilon() {
            return v; // zero matrix: keep the start vector
        }
        let mut moved = T::zero();
        for (nv, old) in next.iter_mut().zip(&v) {
            *nv /= norm;
            moved = moved.max((*nv - *old).abs());
        }
        let converged = moved < T::from_f64_lossy(1e-13);
        v = next;
        if converged {
            break;
        }
    }
    v
}
