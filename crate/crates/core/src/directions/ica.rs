//! Orthogonality-constrained FastICA on generator weights.
//!
//! The weight matrix is read as `d` mixed signals of length `l` (one per
//! hidden unit). Rows are centered, whitened across the `d` channels down to
//! the requested component count, and unmixed with symmetric-decorrelation
//! FastICA, so the unmixing stays orthogonal in whitened space. The
//! recovered sources live in latent space; with ambient orthonormalization
//! (the default) the returned direction matrix additionally satisfies
//! `N^T N = I`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::DirectionSet;
use crate::error::{Error, Result};
use crate::linalg::whiten;
use crate::matrix::{dot, norm, Matrix};

/// Contrast function for the FastICA update and the negentropy proxy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcaNonlinearity {
    Logcosh,
    Cube,
}

impl IcaNonlinearity {
    /// `E[G(v)]` for standard normal `v`, used by the negentropy proxy.
    fn gaussian_expectation(self) -> f64 {
        match self {
            // E[log cosh(v)], v ~ N(0,1).
            IcaNonlinearity::Logcosh => 0.374_567_207_491_438,
            // E[v^4 / 4].
            IcaNonlinearity::Cube => 0.75,
        }
    }

    fn contrast(self, u: f64) -> f64 {
        match self {
            IcaNonlinearity::Logcosh => u.cosh().ln(),
            IcaNonlinearity::Cube => u.powi(4) / 4.0,
        }
    }

    fn g(self, u: f64) -> f64 {
        match self {
            IcaNonlinearity::Logcosh => u.tanh(),
            IcaNonlinearity::Cube => u.powi(3),
        }
    }

    fn g_prime(self, u: f64) -> f64 {
        match self {
            IcaNonlinearity::Logcosh => {
                let t = u.tanh();
                1.0 - t * t
            }
            IcaNonlinearity::Cube => 3.0 * u * u,
        }
    }
}

/// FastICA configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IcaConfig {
    /// Number of components to extract.
    pub components: usize,
    pub nonlinearity: IcaNonlinearity,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    /// Symmetrically orthonormalize the latent-space directions so
    /// `N^T N = I` exactly, not only in whitened space.
    pub ambient_orthonormalize: bool,
}

impl IcaConfig {
    pub fn new(components: usize) -> Self {
        Self {
            components,
            nonlinearity: IcaNonlinearity::Logcosh,
            max_iter: 200,
            tol: 1e-6,
            seed: 0,
            ambient_orthonormalize: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.components == 0 {
            return Err(Error::InvalidParam {
                name: "components",
                message: "must be at least 1".into(),
            });
        }
        if self.tol <= 0.0 || self.tol.is_nan() {
            return Err(Error::InvalidParam {
                name: "tol",
                message: "must be positive".into(),
            });
        }
        Ok(())
    }
}

/// `(W W^T)^{-1/2} W`: symmetric decorrelation of the unmixing rows.
fn symmetric_decorrelate(w: &Matrix) -> Result<Matrix> {
    Ok(super::orthonormalize_columns(&w.transpose())?.transpose())
}

/// Decomposes the weight rows into independent sources and returns the
/// unit-norm latent directions with negentropy-proxy scores, descending.
///
/// Fails with `NonConvergence` (reporting the final delta) when the
/// symmetric FastICA iteration has not settled after `max_iter` rounds, and
/// with `RankDeficient` when `components` exceeds the numerical rank of the
/// channel covariance.
pub fn ica_orthogonal(weights: &Matrix, cfg: &IcaConfig) -> Result<DirectionSet> {
    cfg.validate()?;
    let k = cfg.components;
    if k > weights.rows() {
        return Err(Error::TooManyComponents {
            requested: k,
            limit: weights.rows(),
        });
    }

    // Whiten across channels: rows of `weights` are the mixed signals.
    let (whitened, _) = whiten(&weights.transpose(), k)?;
    let samples = whitened.rows();
    let channels = k;
    // K holds the whitened channels as rows.
    let kmat = whitened.transpose();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init = Matrix::from_fn(channels, channels, |_, _| {
        let v: f64 = StandardNormal.sample(&mut rng);
        v
    });
    let mut w = symmetric_decorrelate(&init)?;

    let mut converged = false;
    let mut last_delta = f64::INFINITY;
    for _ in 0..cfg.max_iter {
        let mut w_new = Matrix::zeros(channels, channels);
        for i in 0..channels {
            let wi = w.row(i);
            let mut g_mean = 0.0;
            let mut accum = vec![0.0; channels];
            for s in 0..samples {
                let mut y = 0.0;
                for c in 0..channels {
                    y += wi[c] * kmat.get(c, s);
                }
                let g = cfg.nonlinearity.g(y);
                g_mean += cfg.nonlinearity.g_prime(y);
                for c in 0..channels {
                    accum[c] += kmat.get(c, s) * g;
                }
            }
            g_mean /= samples as f64;
            for c in 0..channels {
                w_new.set(i, c, accum[c] / samples as f64 - g_mean * wi[c]);
            }
        }
        let w_next = symmetric_decorrelate(&w_new)?;
        let mut delta = 0.0f64;
        for i in 0..channels {
            let d = (1.0 - dot(w_next.row(i), w.row(i)).abs()).abs();
            delta = delta.max(d);
        }
        w = w_next;
        last_delta = delta;
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: cfg.max_iter,
            delta: last_delta,
        });
    }

    // Recovered sources: rows of W K, each a latent-space signal.
    let sources = w.matmul(&kmat)?;
    let latent_dim = sources.cols();
    let mut scores = Vec::with_capacity(channels);
    for i in 0..channels {
        let row = sources.row(i);
        let mut mean_contrast = 0.0;
        for &v in row {
            mean_contrast += cfg.nonlinearity.contrast(v);
        }
        mean_contrast /= row.len() as f64;
        let centered = mean_contrast - cfg.nonlinearity.gaussian_expectation();
        scores.push(centered * centered);
    }

    let mut order: Vec<usize> = (0..channels).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut directions = Matrix::zeros(latent_dim, channels);
    for (col, &src) in order.iter().enumerate() {
        let row = sources.row(src);
        let n = norm(row);
        if n <= 1e-12 {
            return Err(Error::DegenerateDirection { index: src });
        }
        let unit: Vec<f64> = row.iter().map(|v| v / n).collect();
        directions.set_column(col, &unit);
    }
    let sorted_scores: Vec<f64> = order.iter().map(|&i| scores[i]).collect();

    let directions = if cfg.ambient_orthonormalize {
        super::orthonormalize_columns(&directions)?
    } else {
        directions
    };

    DirectionSet::new(
        directions,
        sorted_scores,
        "ica",
        serde_json::to_value(cfg).expect("config serializes"),
    )
}
