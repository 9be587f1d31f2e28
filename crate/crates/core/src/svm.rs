//! Linear SVM trained by dual coordinate descent.
//!
//! L2-regularized hinge loss, solved in the dual with a deterministic cyclic
//! pass order (no shuffling), so training is exactly reproducible. The bias
//! enters as an augmented constant feature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::QualityLabel;
use crate::matrix::dot;

/// Solver settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Hinge-loss weight.
    pub c: f64,
    /// Convergence tolerance on the projected-gradient spread.
    pub tol: f64,
    pub max_epochs: usize,
    /// Recorded in the training metadata; the cyclic solver draws no
    /// randomness.
    pub seed: u64,
    /// Scale of the augmented bias feature.
    pub bias_scale: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-6,
            max_epochs: 1000,
            seed: 0,
            bias_scale: 1.0,
        }
    }
}

/// Training bookkeeping stored alongside the model.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainMeta {
    pub epochs: usize,
    pub seed: u64,
}

/// A linear decision boundary; the decision value is `<w, x> + b`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub meta: TrainMeta,
}

impl SvmModel {
    pub fn decision_value(&self, feature: &[f64]) -> Result<f64> {
        if feature.len() != self.weights.len() {
            return Err(Error::LengthMismatch {
                expected: self.weights.len(),
                got: feature.len(),
            });
        }
        Ok(dot(&self.weights, feature) + self.bias)
    }

    pub fn weight_norm(&self) -> f64 {
        dot(&self.weights, &self.weights).sqrt()
    }
}

fn label_sign(label: QualityLabel) -> f64 {
    match label {
        QualityLabel::Good => 1.0,
        QualityLabel::Bad => -1.0,
    }
}

/// Trains the hinge-loss model; both classes must be present and all
/// features finite and equally sized.
pub fn svm_train(
    features: &[Vec<f64>],
    labels: &[QualityLabel],
    cfg: &SvmConfig,
) -> Result<SvmModel> {
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: features.len(),
            got: labels.len(),
        });
    }
    if features.is_empty() {
        return Err(Error::TooFewSamples {
            required: 2,
            got: 0,
        });
    }
    let dim = features[0].len();
    for (i, f) in features.iter().enumerate() {
        if f.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                got: f.len(),
            });
        }
        if let Some(pos) = f.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("feature {i} entry {pos}"),
            });
        }
    }
    let has_good = labels.contains(&QualityLabel::Good);
    let has_bad = labels.contains(&QualityLabel::Bad);
    if !has_good || !has_bad {
        let present = if has_good { "good" } else { "bad" };
        return Err(Error::SingleClass {
            label: present.into(),
        });
    }
    if cfg.c <= 0.0 || cfg.c.is_nan() {
        return Err(Error::InvalidParam {
            name: "c",
            message: "must be positive".into(),
        });
    }

    let n = features.len();
    let y: Vec<f64> = labels.iter().map(|&l| label_sign(l)).collect();
    // Diagonal of Q for the augmented features [x; bias_scale].
    let bias_sq = cfg.bias_scale * cfg.bias_scale;
    let q_diag: Vec<f64> = features.iter().map(|f| dot(f, f) + bias_sq).collect();

    let mut alpha = vec![0.0f64; n];
    let mut w = vec![0.0f64; dim + 1];
    let mut epochs = 0;
    for epoch in 0..cfg.max_epochs {
        epochs = epoch + 1;
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for i in 0..n {
            let xi = &features[i];
            let wx = dot(&w[..dim], xi) + w[dim] * cfg.bias_scale;
            let g = y[i] * wx - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= cfg.c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let new_alpha = (alpha[i] - g / q_diag[i]).clamp(0.0, cfg.c);
                let delta = (new_alpha - alpha[i]) * y[i];
                if delta != 0.0 {
                    for (wj, xj) in w[..dim].iter_mut().zip(xi) {
                        *wj += delta * xj;
                    }
                    w[dim] += delta * cfg.bias_scale;
                }
                alpha[i] = new_alpha;
            }
        }
        if pg_max - pg_min < cfg.tol {
            break;
        }
    }

    let bias = w[dim] * cfg.bias_scale;
    let weights = w[..dim].to_vec();
    Ok(SvmModel {
        weights,
        bias,
        c: cfg.c,
        meta: TrainMeta {
            epochs,
            seed: cfg.seed,
        },
    })
}

/// Classifies a feature and reports its signed distance to the boundary.
///
/// Positive decision values are good; a value of exactly zero classifies as
/// bad (the conservative choice for gating). The distance is the decision
/// value divided by the weight norm.
pub fn svm_predict(model: &SvmModel, feature: &[f64]) -> Result<(QualityLabel, f64)> {
    let value = model.decision_value(feature)?;
    let norm = model.weight_norm();
    let distance = if norm > 0.0 { value / norm } else { 0.0 };
    let label = if value > 0.0 {
        QualityLabel::Good
    } else {
        QualityLabel::Bad
    };
    Ok((label, distance))
}

/// Smallest margin `y * (<w, x> + b) / ||w||` over a labeled set.
pub fn geometric_margin(
    model: &SvmModel,
    features: &[Vec<f64>],
    labels: &[QualityLabel],
) -> Result<f64> {
    let norm = model.weight_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let mut worst = f64::INFINITY;
    for (f, &l) in features.iter().zip(labels) {
        let value = model.decision_value(f)?;
        worst = worst.min(label_sign(l) * value / norm);
    }
    Ok(worst)
}
