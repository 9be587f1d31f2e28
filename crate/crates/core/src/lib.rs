//! Latent-space analysis toolkit for conditional image generators.
//!
//! The crate bundles the numerical machinery needed to study the latent
//! space of a conditional generator at desk scale:
//!
//! - deterministic dense linear algebra (Jacobi eigendecomposition,
//!   covariance, whitening) in [`linalg`],
//! - a seeded toy generator with exact gradients in [`generator`],
//! - image distance metrics and discontinuity detection in [`perceptual`],
//! - semantic direction discovery (weight eigendecomposition, weight PCA,
//!   sampled feature PCA, orthogonality-constrained FastICA) in
//!   [`directions`],
//! - latent editing and linear/triangular interpolation in [`editing`],
//! - a good/bad quality gate built on a linear SVM in [`gate`] and [`svm`],
//! - background-flattening direction refinement in [`flatten`].
//!
//! Everything is deterministic given explicit seeds; file formats are NPY
//! (`<f8`, C order), JSON sidecars and manifests, CSV reports, and binary
//! PGM images.

// Index loops mirror the matrix arithmetic they implement.
#![allow(clippy::needless_range_loop)]

pub mod directions;
pub mod editing;
pub mod error;
pub mod flatten;
pub mod gate;
pub mod generator;
pub mod image;
pub mod linalg;
pub mod matrix;
pub mod npy;
pub mod optim;
pub mod perceptual;
pub mod svm;

pub use error::{Error, Result};
pub use image::ImageTensor;
pub use matrix::Matrix;
