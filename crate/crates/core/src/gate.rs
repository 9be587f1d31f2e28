//! Good/bad quality gate: dataset manifests, pluggable feature extraction,
//! stratified splitting, evaluation, and 2-D PCA embedding.
//!
//! The gate itself is the linear SVM from [`crate::svm`]; this module wires
//! it to datasets. Features come from raw pixels, PCA-reduced pixels, raw
//! latents, or externally computed vectors stored as NPY files, so deep
//! features from a real network can be dropped in without code changes.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageTensor;
use crate::linalg::{center_columns, sym_eigendecompose, RANK_EPS};
use crate::matrix::{dot, Matrix};
use crate::npy;
use crate::svm::{svm_predict, SvmModel};

/// Binary quality class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityLabel {
    Good,
    Bad,
}

impl std::fmt::Display for QualityLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QualityLabel::Good => f.write_str("good"),
            QualityLabel::Bad => f.write_str("bad"),
        }
    }
}

/// One dataset entry: an image or feature file plus its label, optionally
/// with the latent that generated it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestItem {
    pub path: String,
    pub label: QualityLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latent: Option<String>,
}

/// Labeled dataset manifest; the JSON file is the single source of truth
/// for labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub seed: u64,
    pub items: Vec<ManifestItem>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn count(&self, label: QualityLabel) -> usize {
        self.items.iter().filter(|i| i.label == label).count()
    }
}

/// Fitted projection onto the top principal components of flattened pixels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PixelPca {
    pub mean: Vec<f64>,
    /// `pixel_count x target_dim`, orthonormal columns.
    pub components: Vec<Vec<f64>>,
}

impl PixelPca {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn target_dim(&self) -> usize {
        self.components.first().map_or(0, |_| self.components.len())
    }

    /// Projects flattened pixels into the component space.
    pub fn project(&self, pixels: &[f64]) -> Result<Vec<f64>> {
        if pixels.len() != self.mean.len() {
            return Err(Error::LengthMismatch {
                expected: self.mean.len(),
                got: pixels.len(),
            });
        }
        let centered: Vec<f64> = pixels.iter().zip(&self.mean).map(|(p, m)| p - m).collect();
        Ok(self.components.iter().map(|c| dot(c, &centered)).collect())
    }

    /// Maps component coordinates back to pixel space (adds the mean).
    pub fn reconstruct(&self, coords: &[f64]) -> Result<Vec<f64>> {
        if coords.len() != self.components.len() {
            return Err(Error::LengthMismatch {
                expected: self.components.len(),
                got: coords.len(),
            });
        }
        let mut out = self.mean.clone();
        for (c, &w) in self.components.iter().zip(coords) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += w * v;
            }
        }
        Ok(out)
    }
}

/// Principal components of the rows of `data`.
///
/// Returns the `vars x k` component matrix, the top-`k` covariance
/// eigenvalues, and the numerical rank. Uses the Gram-matrix route when
/// there are fewer samples than variables.
fn principal_components(data: &Matrix, k: usize) -> Result<(Matrix, Vec<f64>, usize)> {
    let n = data.rows();
    let p = data.cols();
    if n < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            got: n,
        });
    }
    let centered = center_columns(data);
    let denom = (n - 1) as f64;
    if p <= n {
        let cov = centered.gram().scaled(1.0 / denom);
        let eig = sym_eigendecompose(&cov)?;
        let lambda_max = eig.eigenvalues[0].max(0.0);
        let rank = eig
            .eigenvalues
            .iter()
            .filter(|&&l| l > RANK_EPS * lambda_max && l > 0.0)
            .count();
        if k > rank {
            return Err(Error::RankDeficient { requested: k, rank });
        }
        let comps = Matrix::from_fn(p, k, |i, j| eig.eigenvectors.get(i, j));
        Ok((comps, eig.eigenvalues[..k].to_vec(), rank))
    } else {
        // Gram trick: eigenvectors of B B^T lift to components B^T u / s.
        let gram = centered.matmul(&centered.transpose())?;
        let eig = sym_eigendecompose(&gram)?;
        let lambda_max = eig.eigenvalues[0].max(0.0);
        let rank = eig
            .eigenvalues
            .iter()
            .filter(|&&l| l > RANK_EPS * lambda_max && l > 0.0)
            .count();
        if k > rank {
            return Err(Error::RankDeficient { requested: k, rank });
        }
        let mut comps = Matrix::zeros(p, k);
        let mut eigenvalues = Vec::with_capacity(k);
        for j in 0..k {
            let u = eig.eigenvectors.column(j);
            let lifted = centered.tr_mul_vec(&u)?;
            let scale = eig.eigenvalues[j].sqrt();
            let col: Vec<f64> = lifted.iter().map(|v| v / scale).collect();
            comps.set_column(j, &col);
            eigenvalues.push(eig.eigenvalues[j] / denom);
        }
        Ok((comps, eigenvalues, rank))
    }
}

/// Fits a pixel-space PCA with `target_dim` components.
///
/// Needs at least two images and `target_dim <= min(n - 1, pixel_count)`;
/// fails with a rank error when the images do not span `target_dim`
/// dimensions.
pub fn fit_pixel_pca(images: &[ImageTensor], target_dim: usize) -> Result<PixelPca> {
    if images.len() < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            got: images.len(),
        });
    }
    let pixel_count = images[0].pixels().len();
    for img in images {
        if img.pixels().len() != pixel_count {
            return Err(Error::LengthMismatch {
                expected: pixel_count,
                got: img.pixels().len(),
            });
        }
    }
    let limit = pixel_count.min(images.len() - 1);
    if target_dim == 0 || target_dim > limit {
        return Err(Error::TooManyComponents {
            requested: target_dim,
            limit,
        });
    }
    let data = Matrix::from_fn(images.len(), pixel_count, |i, j| images[i].pixels()[j]);
    let (comps, _, _) = principal_components(&data, target_dim)?;
    let mean = data.col_means();
    let components: Vec<Vec<f64>> = (0..target_dim).map(|j| comps.column(j)).collect();
    Ok(PixelPca { mean, components })
}

/// Default dimensionality for PCA-reduced pixel features.
pub const PCA_PIXELS_DEFAULT_DIM: usize = 128;

/// How to turn a manifest item into a feature vector.
#[derive(Debug, Clone)]
pub enum FeatureExtractor {
    /// Flattened pixels of a PGM image.
    RawPixels,
    /// Pixels projected through a fitted [`PixelPca`].
    PcaPixels(PixelPca),
    /// The latent vector referenced by the item.
    RawLatent,
    /// A precomputed feature vector stored as a 1-D NPY file.
    ExternalFile,
}

impl FeatureExtractor {
    pub fn kind_name(&self) -> &'static str {
        match self {
            FeatureExtractor::RawPixels => "raw-pixels",
            FeatureExtractor::PcaPixels(_) => "pca-pixels",
            FeatureExtractor::RawLatent => "raw-latent",
            FeatureExtractor::ExternalFile => "external-file",
        }
    }
}

fn is_npy(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("npy"))
}

/// Extracts the feature vector for one manifest item; `base` resolves
/// relative paths.
pub fn extract_features(
    extractor: &FeatureExtractor,
    item: &ManifestItem,
    base: &Path,
) -> Result<Vec<f64>> {
    let path = base.join(&item.path);
    match extractor {
        FeatureExtractor::RawPixels => {
            if is_npy(&path) {
                return Err(Error::InvalidParam {
                    name: "features",
                    message: format!("raw-pixels needs a PGM image, got {}", item.path),
                });
            }
            Ok(ImageTensor::load_pgm(&path)?.pixels().to_vec())
        }
        FeatureExtractor::PcaPixels(pca) => {
            if is_npy(&path) {
                return Err(Error::InvalidParam {
                    name: "features",
                    message: format!("pca-pixels needs a PGM image, got {}", item.path),
                });
            }
            let img = ImageTensor::load_pgm(&path)?;
            pca.project(img.pixels())
        }
        FeatureExtractor::RawLatent => {
            let latent = item.latent.as_ref().ok_or_else(|| Error::Format {
                message: format!("item {} has no latent path", item.path),
            })?;
            npy::load_vector(&base.join(latent))
        }
        FeatureExtractor::ExternalFile => {
            if !is_npy(&path) {
                return Err(Error::InvalidParam {
                    name: "features",
                    message: format!("external-file needs an NPY file, got {}", item.path),
                });
            }
            npy::load_vector(&path)
        }
    }
}

/// Stratified split into train and test manifests.
///
/// Each class is shuffled with the seed and split to `ratio` (rounded to
/// nearest, at least one training item per class); `ratio = 1` puts
/// everything in the training set. The two outputs are disjoint and cover
/// the input.
pub fn split_dataset(
    manifest: &DatasetManifest,
    ratio: f64,
    seed: u64,
) -> Result<(DatasetManifest, DatasetManifest)> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidParam {
            name: "ratio",
            message: format!("must be in (0, 1], got {ratio}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_indices = Vec::new();
    let mut test_indices = Vec::new();
    for label in [QualityLabel::Good, QualityLabel::Bad] {
        let mut indices: Vec<usize> = manifest
            .items
            .iter()
            .enumerate()
            .filter(|(_, item)| item.label == label)
            .map(|(i, _)| i)
            .collect();
        if indices.is_empty() {
            return Err(Error::EmptyClass {
                label: label.to_string(),
            });
        }
        indices.shuffle(&mut rng);
        let n = indices.len();
        let n_train = ((ratio * n as f64).round() as usize).clamp(1, n);
        train_indices.extend_from_slice(&indices[..n_train]);
        test_indices.extend_from_slice(&indices[n_train..]);
    }
    train_indices.sort_unstable();
    test_indices.sort_unstable();
    let pick = |indices: &[usize], suffix: &str| DatasetManifest {
        name: format!("{}-{suffix}", manifest.name),
        seed,
        items: indices.iter().map(|&i| manifest.items[i].clone()).collect(),
    };
    Ok((pick(&train_indices, "train"), pick(&test_indices, "test")))
}

/// Confusion counts with good as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Accuracy plus confusion counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub confusion: Confusion,
}

/// Evaluates a model on extracted features with known labels.
pub fn evaluate(model: &SvmModel, items: &[(Vec<f64>, QualityLabel)]) -> Result<EvalReport> {
    if items.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut confusion = Confusion {
        tp: 0,
        tn: 0,
        fp: 0,
        fn_: 0,
    };
    for (feature, actual) in items {
        let (predicted, _) = svm_predict(model, feature)?;
        match (predicted, *actual) {
            (QualityLabel::Good, QualityLabel::Good) => confusion.tp += 1,
            (QualityLabel::Bad, QualityLabel::Bad) => confusion.tn += 1,
            (QualityLabel::Good, QualityLabel::Bad) => confusion.fp += 1,
            (QualityLabel::Bad, QualityLabel::Good) => confusion.fn_ += 1,
        }
    }
    Ok(EvalReport {
        accuracy: (confusion.tp + confusion.tn) as f64 / items.len() as f64,
        confusion,
    })
}

/// One row of a decision-distance ranking.
#[derive(Debug, Clone)]
pub struct RankEntry {
    pub path: String,
    pub distance: f64,
    pub predicted: QualityLabel,
    pub actual: QualityLabel,
}

/// Ranks items by signed distance to the boundary, descending; ties keep
/// input order.
pub fn rank_items(
    model: &SvmModel,
    items: &[(String, Vec<f64>, QualityLabel)],
) -> Result<Vec<RankEntry>> {
    let mut entries = Vec::with_capacity(items.len());
    for (path, feature, actual) in items {
        let (predicted, distance) = svm_predict(model, feature)?;
        entries.push(RankEntry {
            path: path.clone(),
            distance,
            predicted,
            actual: *actual,
        });
    }
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| {
        entries[b]
            .distance
            .partial_cmp(&entries[a].distance)
            .unwrap()
            .then(a.cmp(&b))
    });
    Ok(order.into_iter().map(|i| entries[i].clone()).collect())
}

/// 2-D PCA embedding of a feature set.
#[derive(Debug, Clone)]
pub struct Embedding2d {
    pub coords: Vec<[f64; 2]>,
    /// 2 for a full embedding; 1 when the data has rank one and the second
    /// coordinate is zero.
    pub rank: usize,
    /// Covariance eigenvalues of the projected axes.
    pub variances: [f64; 2],
}

/// Projects features onto their top two principal components, centered.
///
/// Rank-one data comes back with a zero second coordinate and `rank = 1`.
pub fn pca_embed_2d(features: &[Vec<f64>]) -> Result<Embedding2d> {
    if features.len() < 3 {
        return Err(Error::TooFewSamples {
            required: 3,
            got: features.len(),
        });
    }
    let dim = features[0].len();
    for f in features {
        if f.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                got: f.len(),
            });
        }
    }
    let data = Matrix::from_fn(features.len(), dim, |i, j| features[i][j]);
    let centered = center_columns(&data);
    let ask = 2.min(dim);
    let (comps, eigenvalues, rank) = match principal_components(&data, ask) {
        Ok(r) => r,
        Err(Error::RankDeficient { rank, .. }) if rank >= 1 => {
            principal_components(&data, 1).map(|(c, e, _)| (c, e, rank))?
        }
        Err(e) => return Err(e),
    };
    let k = comps.cols();
    let mut coords = Vec::with_capacity(features.len());
    for i in 0..features.len() {
        let row = centered.row(i);
        let x = dot(row, &comps.column(0));
        let y = if k > 1 {
            dot(row, &comps.column(1))
        } else {
            0.0
        };
        coords.push([x, y]);
    }
    Ok(Embedding2d {
        coords,
        rank: rank.min(2),
        variances: [eigenvalues[0], if k > 1 { eigenvalues[1] } else { 0.0 }],
    })
}
