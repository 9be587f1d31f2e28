//! Symmetric eigendecomposition, covariance, row normalization and whitening.
//!
//! The eigensolver is a cyclic Jacobi sweep with a deterministic rotation
//! order, so identical inputs always produce identical output down to the
//! last bit.

use crate::error::{Error, Result};
use crate::matrix::{norm, Matrix};

/// Off-diagonal tolerance for the Jacobi sweep, relative to the Frobenius
/// norm of the input.
const JACOBI_TOL: f64 = 1e-12;
/// Maximum number of full Jacobi sweeps.
const JACOBI_MAX_SWEEPS: usize = 100;
/// Relative asymmetry allowed in a "symmetric" input.
const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalues below this fraction of the largest count as numerically zero.
pub const RANK_EPS: f64 = 1e-10;

/// Full spectrum of a symmetric matrix.
///
/// Eigenvalues are sorted in descending order; `eigenvectors` holds one
/// orthonormal column per eigenvalue, in matching order.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

/// Symmetric eigendecomposition via cyclic Jacobi rotations.
///
/// The input must be square and symmetric within `1e-12` relative to its
/// largest entry. Returns the full spectrum, eigenvalues descending, with
/// ties kept in sweep order.
pub fn sym_eigendecompose(m: &Matrix) -> Result<EigenResult> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if let Some(pos) = m.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("matrix entry at flat index {pos}"),
        });
    }
    let scale = m.max_abs().max(1.0);
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asym = max_asym.max((m.get(i, j) - m.get(j, i)).abs());
        }
    }
    if max_asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric {
            max_asymmetry: max_asym,
        });
    }

    let mut a = m.clone();
    // Work on an exactly symmetric copy so rotations stay consistent.
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, s);
            a.set(j, i, s);
        }
    }
    let mut v = Matrix::identity(n);
    let threshold = JACOBI_TOL * m.frobenius_norm();

    let mut converged = n == 1;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).abs());
            }
        }
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= threshold {
                    continue;
                }
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).abs());
            }
        }
        if off > threshold {
            return Err(Error::NonConvergence {
                iterations: JACOBI_MAX_SWEEPS,
                delta: off,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps sweep order among equal eigenvalues.
    order.sort_by(|&i, &j| a.get(j, j).partial_cmp(&a.get(i, i)).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        eigenvectors.set_column(new_col, &v.column(old_col));
    }
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
    })
}

/// One Jacobi rotation annihilating `a[p][q]`, accumulated into `v`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let n = a.rows();
    let apq = a.get(p, q);
    let app = a.get(p, p);
    let aqq = a.get(q, q);
    let theta = (aqq - app) / (2.0 * apq);
    // Smaller-angle root of t^2 + 2t*theta - 1 = 0 for stability.
    let t = if theta >= 0.0 {
        1.0 / (theta + (1.0 + theta * theta).sqrt())
    } else {
        1.0 / (theta - (1.0 + theta * theta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    a.set(p, p, app - t * apq);
    a.set(q, q, aqq + t * apq);
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);
    for k in 0..n {
        if k != p && k != q {
            let akp = a.get(k, p);
            let akq = a.get(k, q);
            let new_kp = akp - s * (akq + tau * akp);
            let new_kq = akq + s * (akp - tau * akq);
            a.set(k, p, new_kp);
            a.set(p, k, new_kp);
            a.set(k, q, new_kq);
            a.set(q, k, new_kq);
        }
    }
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, vkp - s * (vkq + tau * vkp));
        v.set(k, q, vkq + s * (vkp - tau * vkq));
    }
}

/// Sample covariance of the rows of `a`: `(A - mean)^T (A - mean) / (d - 1)`.
///
/// Requires at least two rows. The result is symmetric positive
/// semidefinite with shape `cols x cols`.
pub fn covariance(a: &Matrix) -> Result<Matrix> {
    let d = a.rows();
    if d < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            got: d,
        });
    }
    let centered = center_columns(a);
    Ok(centered.gram().scaled(1.0 / (d as f64 - 1.0)))
}

/// Subtracts the column mean from every entry.
pub fn center_columns(a: &Matrix) -> Matrix {
    let means = a.col_means();
    Matrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j) - means[j])
}

/// Rescales every row of `a` to unit Euclidean norm.
///
/// Fails on the first row whose norm is at or below `1e-12`, reporting its
/// index.
pub fn l2_normalize_rows(a: &Matrix) -> Result<Matrix> {
    let mut out = a.clone();
    for i in 0..a.rows() {
        let n = norm(a.row(i));
        if n <= 1e-12 {
            return Err(Error::ZeroRow { row: i });
        }
        for j in 0..a.cols() {
            out.set(i, j, a.get(i, j) / n);
        }
    }
    Ok(out)
}

/// PCA whitening of `x` (samples x vars) down to `keep` components.
///
/// Returns the whitened data (samples x keep) and the transform
/// (vars x keep) that maps centered rows into the whitened space. The
/// whitened data has identity covariance. Fails when `keep` exceeds the
/// numerical rank of the covariance (eigenvalue below `1e-10` of the
/// largest).
pub fn whiten(x: &Matrix, keep: usize) -> Result<(Matrix, Matrix)> {
    if keep == 0 || keep > x.cols() {
        return Err(Error::TooManyComponents {
            requested: keep,
            limit: x.cols(),
        });
    }
    let cov = covariance(x)?;
    let eig = sym_eigendecompose(&cov)?;
    let lambda_max = eig.eigenvalues[0].max(0.0);
    let rank = eig
        .eigenvalues
        .iter()
        .filter(|&&l| l > RANK_EPS * lambda_max && l > 0.0)
        .count();
    if keep > rank {
        return Err(Error::RankDeficient {
            requested: keep,
            rank,
        });
    }
    let transform = Matrix::from_fn(x.cols(), keep, |v, j| {
        eig.eigenvectors.get(v, j) / eig.eigenvalues[j].sqrt()
    });
    let whitened = center_columns(x).matmul(&transform)?;
    Ok((whitened, transform))
}

/// Residual `max_i ||M v_i - lambda_i v_i||_2` of an eigendecomposition.
pub fn eigen_residual(m: &Matrix, eig: &EigenResult) -> f64 {
    let mut worst = 0.0f64;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        let mv = m.mul_vec(&v).expect("shape checked");
        let mut acc = 0.0;
        for k in 0..v.len() {
            let r = mv[k] - lambda * v[k];
            acc += r * r;
        }
        worst = worst.max(acc.sqrt());
    }
    worst
}
