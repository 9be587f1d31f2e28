//! Semantic direction discovery from generator weights.
//!
//! Four routes produce a [`DirectionSet`]:
//!
//! - [`sefa`]: top eigenvectors of `A^T A` for the (optionally
//!   row-normalized) first dense-layer weights `A`;
//! - [`pca_weights`]: top eigenvectors of the covariance of `A`;
//! - [`ganspace_sample`]: PCA over sampled first-layer features, mapped back
//!   into latent space;
//! - [`ica_orthogonal`]: orthogonality-constrained FastICA on the weight
//!   rows.
//!
//! [`match_directions`] aligns two sets by optimal assignment on absolute
//! cosines, which is how the equivalence claims between the routes are
//! checked.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{sample_latent, Generator};
use crate::linalg::{covariance, l2_normalize_rows, sym_eigendecompose};
use crate::matrix::{dot, norm, Matrix};
use crate::npy;

mod assign;
mod ica;

pub use ica::{ica_orthogonal, IcaConfig, IcaNonlinearity};

/// Relative eigengap below which neighboring components count as degenerate.
pub const DEGENERATE_GAP: f64 = 1e-6;

/// A set of `k` unit-norm latent directions with importance scores.
#[derive(Debug, Clone)]
pub struct DirectionSet {
    /// `latent_dim x k`; each column is one direction of unit length.
    pub directions: Matrix,
    /// Descending importance scores, one per column.
    pub scores: Vec<f64>,
    /// Which discovery route produced the set.
    pub method: String,
    /// Route-specific configuration snapshot for the JSON sidecar.
    pub config: serde_json::Value,
}

impl DirectionSet {
    pub fn new(
        directions: Matrix,
        scores: Vec<f64>,
        method: impl Into<String>,
        config: serde_json::Value,
    ) -> Result<Self> {
        if scores.len() != directions.cols() {
            return Err(Error::LengthMismatch {
                expected: directions.cols(),
                got: scores.len(),
            });
        }
        for j in 0..directions.cols() {
            let n = norm(&directions.column(j));
            if (n - 1.0).abs() > 1e-8 {
                return Err(Error::NotUnitNorm { norm: n });
            }
        }
        for pair in scores.windows(2) {
            if pair[1] > pair[0] {
                return Err(Error::InvalidParam {
                    name: "scores",
                    message: "scores must be descending".into(),
                });
            }
        }
        Ok(Self {
            directions,
            scores,
            method: method.into(),
            config,
        })
    }

    pub fn k(&self) -> usize {
        self.directions.cols()
    }

    pub fn latent_dim(&self) -> usize {
        self.directions.rows()
    }

    /// Column `j` as a vector.
    pub fn direction(&self, j: usize) -> Vec<f64> {
        self.directions.column(j)
    }

    /// Groups of neighboring components whose relative eigengap is below
    /// `rel_gap`; singleton groups are well separated.
    pub fn degenerate_groups(&self, rel_gap: f64) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.scores.len() {
            let joined = if i == 0 {
                false
            } else {
                let prev = self.scores[i - 1];
                let gap = (prev - self.scores[i]).abs();
                gap <= rel_gap * prev.abs().max(self.scores[i].abs()).max(f64::MIN_POSITIVE)
            };
            if joined {
                groups.last_mut().unwrap().push(i);
            } else {
                groups.push(vec![i]);
            }
        }
        groups
    }

    /// Indices of components separated from both neighbors by more than
    /// `rel_gap` relative.
    pub fn separated_components(&self, rel_gap: f64) -> Vec<usize> {
        self.degenerate_groups(rel_gap)
            .into_iter()
            .filter(|g| g.len() == 1)
            .map(|g| g[0])
            .collect()
    }

    /// Writes the direction matrix as NPY plus a JSON sidecar with the
    /// method tag, scores and config snapshot.
    pub fn save(&self, npy_path: &Path, json_path: &Path) -> Result<()> {
        npy::save_matrix(npy_path, &self.directions)?;
        let sidecar = Sidecar {
            method: self.method.clone(),
            scores: self.scores.clone(),
            config: self.config.clone(),
        };
        std::fs::write(json_path, serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn load(npy_path: &Path, json_path: &Path) -> Result<Self> {
        let directions = npy::load_matrix(npy_path)?;
        let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(json_path)?)?;
        Self::new(directions, sidecar.scores, sidecar.method, sidecar.config)
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    method: String,
    scores: Vec<f64>,
    config: serde_json::Value,
}

/// Closed-form directions: top-`k` eigenvectors of `A^T A`.
///
/// With `normalize_rows` set (the default used in practice) the rows of `A`
/// are rescaled to unit norm first, so every hidden unit contributes
/// equally. Scores are the eigenvalues.
pub fn sefa(weights: &Matrix, k: usize, normalize_rows: bool) -> Result<DirectionSet> {
    if k == 0 || k > weights.cols() {
        return Err(Error::TooManyComponents {
            requested: k,
            limit: weights.cols(),
        });
    }
    let prepared = if normalize_rows {
        l2_normalize_rows(weights)?
    } else {
        weights.clone()
    };
    let gram = prepared.gram();
    let eig = sym_eigendecompose(&gram)?;
    let directions = top_k_columns(&eig.eigenvectors, k);
    DirectionSet::new(
        directions,
        eig.eigenvalues[..k].to_vec(),
        "sefa",
        serde_json::json!({ "k": k, "normalize_rows": normalize_rows }),
    )
}

/// Weight PCA: top-`k` eigenvectors of the covariance of `A`.
pub fn pca_weights(weights: &Matrix, k: usize) -> Result<DirectionSet> {
    if k == 0 || k > weights.cols() {
        return Err(Error::TooManyComponents {
            requested: k,
            limit: weights.cols(),
        });
    }
    let cov = covariance(weights)?;
    let eig = sym_eigendecompose(&cov)?;
    let directions = top_k_columns(&eig.eigenvectors, k);
    DirectionSet::new(
        directions,
        eig.eigenvalues[..k].to_vec(),
        "pca",
        serde_json::json!({ "k": k }),
    )
}

/// `N (N^T N)^{-1/2}`: the closest orthonormal frame to the given columns.
pub(crate) fn orthonormalize_columns(m: &Matrix) -> Result<Matrix> {
    let gram = m.gram();
    let eig = sym_eigendecompose(&gram)?;
    let k = gram.rows();
    let lambda_max = eig.eigenvalues[0].max(0.0);
    let threshold = 1e-12 * lambda_max.max(1.0);
    let rank = eig.eigenvalues.iter().filter(|&&l| l > threshold).count();
    if rank < k {
        return Err(Error::RankDeficient { requested: k, rank });
    }
    let inv_sqrt = Matrix::from_fn(k, k, |i, j| {
        let mut acc = 0.0;
        for t in 0..k {
            acc +=
                eig.eigenvectors.get(i, t) * eig.eigenvectors.get(j, t) / eig.eigenvalues[t].sqrt();
        }
        acc
    });
    m.matmul(&inv_sqrt)
}

/// Sampled feature PCA: draws latents, runs PCA on the first-layer features
/// `A z`, and maps each feature component `u` back to latent space as
/// `A^T u / ||A^T u||`. The back-mapped frame is symmetrically
/// orthonormalized (finite sampling leaves it a hair short of orthogonal).
/// Scores are the feature-space eigenvalues.
pub fn ganspace_sample<R: Rng + ?Sized>(
    generator: &Generator,
    num_samples: usize,
    k: usize,
    rng: &mut R,
) -> Result<DirectionSet> {
    let weights = generator.latent_weights();
    let (hidden_dim, latent_dim) = (weights.rows(), weights.cols());
    if k == 0 || k > latent_dim.min(hidden_dim) {
        return Err(Error::TooManyComponents {
            requested: k,
            limit: latent_dim.min(hidden_dim),
        });
    }
    if num_samples < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            got: num_samples,
        });
    }
    let mut features = Matrix::zeros(num_samples, hidden_dim);
    for i in 0..num_samples {
        let z = sample_latent(rng, latent_dim)?;
        let f = weights.mul_vec(&z.values)?;
        for (j, v) in f.iter().enumerate() {
            features.set(i, j, *v);
        }
    }
    let cov = covariance(&features)?;
    let eig = sym_eigendecompose(&cov)?;
    let mut directions = Matrix::zeros(latent_dim, k);
    for j in 0..k {
        let u = eig.eigenvectors.column(j);
        let back = weights.tr_mul_vec(&u)?;
        let n = norm(&back);
        if n <= 1e-12 {
            return Err(Error::DegenerateDirection { index: j });
        }
        let unit: Vec<f64> = back.iter().map(|v| v / n).collect();
        directions.set_column(j, &unit);
    }
    let directions = orthonormalize_columns(&directions)?;
    DirectionSet::new(
        directions,
        eig.eigenvalues[..k].to_vec(),
        "ganspace",
        serde_json::json!({ "k": k, "num_samples": num_samples }),
    )
}

/// Default GANSpace sample count.
pub const GANSPACE_DEFAULT_SAMPLES: usize = 10_000;

fn top_k_columns(m: &Matrix, k: usize) -> Matrix {
    Matrix::from_fn(m.rows(), k, |i, j| m.get(i, j))
}

/// Result of aligning two direction sets.
#[derive(Debug, Clone)]
pub struct DirectionMatch {
    /// `permutation[i]` is the column of the second set paired with column
    /// `i` of the first.
    pub permutation: Vec<usize>,
    /// Sign making each matched cosine positive.
    pub signs: Vec<f64>,
    /// Absolute cosine of each matched pair, in first-set column order.
    pub scores: Vec<f64>,
}

impl DirectionMatch {
    pub fn min_score(&self) -> f64 {
        self.scores.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_score(&self) -> f64 {
        self.scores.iter().sum::<f64>() / self.scores.len() as f64
    }
}

/// Pairs the columns of two equally sized direction sets by maximizing the
/// total absolute cosine (optimal assignment), recording the sign per pair.
pub fn match_directions(first: &DirectionSet, second: &DirectionSet) -> Result<DirectionMatch> {
    if first.latent_dim() != second.latent_dim() {
        return Err(Error::LengthMismatch {
            expected: first.latent_dim(),
            got: second.latent_dim(),
        });
    }
    if first.k() != second.k() {
        return Err(Error::LengthMismatch {
            expected: first.k(),
            got: second.k(),
        });
    }
    let k = first.k();
    let mut cosines = Matrix::zeros(k, k);
    for i in 0..k {
        let a = first.direction(i);
        for j in 0..k {
            let b = second.direction(j);
            cosines.set(i, j, dot(&a, &b));
        }
    }
    // Assignment minimizes cost, so feed it negated absolute cosines.
    let cost = Matrix::from_fn(k, k, |i, j| -cosines.get(i, j).abs());
    let permutation = assign::min_cost_assignment(&cost);
    let mut signs = Vec::with_capacity(k);
    let mut scores = Vec::with_capacity(k);
    for i in 0..k {
        let c = cosines.get(i, permutation[i]);
        signs.push(if c < 0.0 { -1.0 } else { 1.0 });
        scores.push(c.abs().min(1.0));
    }
    Ok(DirectionMatch {
        permutation,
        signs,
        scores,
    })
}

/// Permutation/scale-invariant recovery score in [0, 1]; zero means the
/// matrix is a signed permutation (perfect source recovery).
pub fn amari_index(p: &Matrix) -> Result<f64> {
    let k = p.rows();
    if k != p.cols() {
        return Err(Error::NotSquare {
            rows: p.rows(),
            cols: p.cols(),
        });
    }
    let mut row_max = vec![0.0f64; k];
    let mut col_max = vec![0.0f64; k];
    for i in 0..k {
        for j in 0..k {
            let v = p.get(i, j).abs();
            row_max[i] = row_max[i].max(v);
            col_max[j] = col_max[j].max(v);
        }
    }
    for (i, &m) in row_max.iter().enumerate() {
        if m == 0.0 {
            return Err(Error::ZeroRowOrColumn {
                index: i,
                axis: "row",
            });
        }
    }
    for (j, &m) in col_max.iter().enumerate() {
        if m == 0.0 {
            return Err(Error::ZeroRowOrColumn {
                index: j,
                axis: "column",
            });
        }
    }
    if k == 1 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut acc = 0.0;
        for j in 0..k {
            acc += p.get(i, j).abs() / row_max[i];
        }
        total += acc - 1.0;
    }
    for j in 0..k {
        let mut acc = 0.0;
        for i in 0..k {
            acc += p.get(i, j).abs() / col_max[j];
        }
        total += acc - 1.0;
    }
    Ok(total / (2.0 * k as f64 * (k as f64 - 1.0)))
}
