//! Quality-gate pipeline checks: solver vs brute-force margin oracle, the
//! full extract/train/evaluate flow, and pixel PCA vs an SVD oracle.

#![allow(clippy::needless_range_loop)]

mod support;

use latentkit::gate::{
    evaluate, extract_features, fit_pixel_pca, split_dataset, DatasetManifest, FeatureExtractor,
    ManifestItem, QualityLabel,
};
use latentkit::image::ImageTensor;
use latentkit::npy;
use latentkit::svm::{geometric_margin, svm_train, SvmConfig};
use latentkit::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Two separable 2-D blobs, 100 points each, centers mirrored about the
/// origin.
fn blobs(seed: u64) -> (Vec<Vec<f64>>, Vec<QualityLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for i in 0..200 {
        let x: f64 = StandardNormal.sample(&mut rng);
        let y: f64 = StandardNormal.sample(&mut rng);
        if i % 2 == 0 {
            features.push(vec![4.0 + 0.8 * x, 0.8 * y]);
            labels.push(QualityLabel::Good);
        } else {
            features.push(vec![-4.0 + 0.8 * x, 0.8 * y]);
            labels.push(QualityLabel::Bad);
        }
    }
    (features, labels)
}

#[test]
fn separable_blobs_reach_perfect_accuracy_and_oracle_margin() {
    let (features, labels) = blobs(1);
    let cfg = SvmConfig {
        c: 1e5,
        tol: 1e-10,
        max_epochs: 200_000,
        ..SvmConfig::default()
    };
    let model = svm_train(&features, &labels, &cfg).unwrap();

    let items: Vec<(Vec<f64>, QualityLabel)> = features
        .iter()
        .cloned()
        .zip(labels.iter().copied())
        .collect();
    let report = evaluate(&model, &items).unwrap();
    assert_eq!(report.accuracy, 1.0);

    let margin = geometric_margin(&model, &features, &labels).unwrap();
    let points: Vec<[f64; 2]> = features.iter().map(|f| [f[0], f[1]]).collect();
    let positive: Vec<bool> = labels.iter().map(|&l| l == QualityLabel::Good).collect();
    let oracle = support::grid_search_margin_2d(&points, &positive);
    assert!(
        (margin - oracle).abs() <= 1e-2,
        "margin {margin} vs oracle {oracle}"
    );
}

#[test]
fn high_c_enforces_functional_margins_on_separable_data() {
    let (features, labels) = blobs(6);
    let cfg = SvmConfig {
        c: 1e4,
        tol: 1e-10,
        max_epochs: 200_000,
        ..SvmConfig::default()
    };
    let model = svm_train(&features, &labels, &cfg).unwrap();
    for (f, &l) in features.iter().zip(&labels) {
        let y = if l == QualityLabel::Good { 1.0 } else { -1.0 };
        let value = model.decision_value(f).unwrap();
        assert!(y * value >= 1.0 - 1e-3, "functional margin {}", y * value);
    }
}

#[test]
fn full_pipeline_on_well_separated_clusters_is_perfect() {
    // 6-sigma separated clusters in 32-D (noise truncated at 2.9 sigma so
    // the separation is structural), stored as external feature files and
    // driven through manifests end to end.
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut truncated_normal = || loop {
        let v: f64 = StandardNormal.sample(&mut rng);
        if v.abs() <= 2.9 {
            return v;
        }
    };
    let dim = 32;
    let mut items = Vec::new();
    for i in 0..400 {
        let good = i % 2 == 0;
        let center = if good { 3.0 } else { -3.0 };
        let feature: Vec<f64> = (0..dim)
            .map(|d| {
                let noise = truncated_normal();
                if d == 0 {
                    center + noise
                } else {
                    noise
                }
            })
            .collect();
        let name = format!("feature_{i:03}.npy");
        npy::save_vector(&dir.path().join(&name), &feature).unwrap();
        items.push(ManifestItem {
            path: name,
            label: if good {
                QualityLabel::Good
            } else {
                QualityLabel::Bad
            },
            latent: None,
        });
    }
    let manifest = DatasetManifest {
        name: "clusters".into(),
        seed: 41,
        items,
    };
    let (train, test) = split_dataset(&manifest, 0.8, 41).unwrap();
    assert_eq!(train.items.len(), 320);
    assert_eq!(test.items.len(), 80);

    let extractor = FeatureExtractor::ExternalFile;
    let load = |manifest: &DatasetManifest| -> (Vec<Vec<f64>>, Vec<QualityLabel>) {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for item in &manifest.items {
            features.push(extract_features(&extractor, item, dir.path()).unwrap());
            labels.push(item.label);
        }
        (features, labels)
    };
    let (train_features, train_labels) = load(&train);
    let (test_features, test_labels) = load(&test);

    let model = svm_train(&train_features, &train_labels, &SvmConfig::default()).unwrap();
    let test_items: Vec<(Vec<f64>, QualityLabel)> =
        test_features.into_iter().zip(test_labels).collect();
    let report = evaluate(&model, &test_items).unwrap();
    assert_eq!(report.accuracy, 1.0, "confusion {:?}", report.confusion);
}

#[test]
fn pixel_pca_components_match_svd_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let images: Vec<ImageTensor> = (0..12)
        .map(|_| {
            let pixels: Vec<f64> = (0..64)
                .map(|_| {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    (v * 0.3).clamp(-1.0, 1.0)
                })
                .collect();
            ImageTensor::new(8, 8, pixels).unwrap()
        })
        .collect();
    let pca = fit_pixel_pca(&images, 4).unwrap();

    let data = Matrix::from_fn(12, 64, |i, j| images[i].pixels()[j]);
    let centered = latentkit::linalg::center_columns(&data);
    let (_, vectors) = support::one_sided_jacobi_svd(&centered);
    for j in 0..4 {
        let ours = &pca.components[j];
        let theirs = vectors.column(j);
        let cos: f64 = ours.iter().zip(&theirs).map(|(a, b)| a * b).sum();
        assert!(
            cos.abs() >= 1.0 - 1e-7,
            "component {j}: |cos| {}",
            cos.abs()
        );
    }
}
