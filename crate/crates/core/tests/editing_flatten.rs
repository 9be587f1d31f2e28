//! End-to-end editing and refinement runs on the toy generator, including
//! the planted-border background-removal construction.

use latentkit::directions::DirectionSet;
use latentkit::editing::{interp_latent, interp_text, interp_triangular};
use latentkit::flatten::{background_removal, flatten_direction, FlattenConfig};
use latentkit::generator::{sample_latent, Generator, GeneratorSpec, LatentCode, TextEmbedding};
use latentkit::image::ImageTensor;
use latentkit::perceptual::{sequence_distances, MetricKind};
use latentkit::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toy() -> Generator {
    Generator::from_spec(GeneratorSpec::default()).unwrap()
}

#[test]
fn latent_path_stays_smooth_at_toy_scale() {
    let generator = toy();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let z0 = sample_latent(&mut rng, 16).unwrap();
    let z1 = sample_latent(&mut rng, 16).unwrap();
    let t = TextEmbedding::zeros(generator.spec());
    let images = interp_latent(&generator, &z0, &z1, &t, 10).unwrap();
    let seq = sequence_distances(MetricKind::L2Mean, &images).unwrap();
    assert_eq!(seq.len(), 9);
    let mut sorted = seq.values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[4];
    let max = sorted[8];
    assert!(
        max / median <= 5.0,
        "smoothness regression: max {max} median {median}"
    );
}

#[test]
fn interpolation_sample_counts() {
    let generator = toy();
    let z = LatentCode::zeros(16);
    let t0 = TextEmbedding::zeros(generator.spec());
    let t1 = TextEmbedding::new(vec![0.5; 8], vec![0.5; 8]).unwrap();
    let t2 = TextEmbedding::new(vec![-0.5; 8], vec![0.2; 8]).unwrap();
    for steps in [2usize, 3, 7, 10] {
        let line = interp_text(&generator, &z, &t0, &t1, steps).unwrap();
        assert_eq!(line.len(), steps);
        let grid = interp_triangular(&generator, &z, &t0, &t1, &t2, steps).unwrap();
        assert_eq!(grid.samples.len(), steps * (steps + 1) / 2);
    }
}

#[test]
fn flatten_direction_default_settings_descend() {
    let generator = toy();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let z = sample_latent(&mut rng, 16).unwrap();
    let raw = sample_latent(&mut rng, 16).unwrap();
    let norm: f64 = raw.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let n0: Vec<f64> = raw.values.iter().map(|v| v / norm).collect();
    let t = TextEmbedding::zeros(generator.spec());
    let cfg = FlattenConfig::default();
    let trace = flatten_direction(&generator, &z, &t, &n0, &cfg).unwrap();
    assert_eq!(trace.losses.len(), 201);
    assert!(trace.final_loss <= trace.initial_loss());
    for p in &trace.preserved_components {
        assert!((p - 1.0).abs() <= 1e-12);
    }
}

/// Generator with a planted border channel: latent dim 2 saturates the
/// border pixels, latent dim 0 mostly edits the interior.
fn planted_border_generator() -> (Generator, Vec<usize>) {
    let spec = GeneratorSpec {
        latent_dim: 4,
        word_dim: 2,
        sentence_dim: 2,
        hidden_dim: 4,
        image_height: 8,
        image_width: 8,
        seed: 0,
    };
    // Hidden 0: weak from z0, strong from z2 (the border channel).
    // Hidden 1: driven by z0 (the interior edit). Hidden 2: driven by z1
    // (the reference direction). Hidden 3: driven by z3.
    let latent_weights = Matrix::from_rows(&[
        &[0.15, 0.0, 1.5, 0.0],
        &[1.2, 0.0, 0.0, 0.0],
        &[0.0, 1.2, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ]);
    let border: Vec<usize> = (0..64)
        .filter(|p| {
            let (i, j) = (p / 8, p % 8);
            i == 0 || i == 7 || j == 0 || j == 7
        })
        .collect();
    let image_head = Matrix::from_fn(64, 4, |p, h| {
        let (i, j) = (p / 8, p % 8);
        let is_border = i == 0 || i == 7 || j == 0 || j == 7;
        match (is_border, h) {
            (true, 0) => 1.8,
            (true, _) => 0.0,
            (false, 1) => 0.6 * ((i * 3 + j) as f64 * 0.7).sin(),
            (false, 2) => 0.6 * ((i + j * 2) as f64 * 0.9).cos(),
            (false, 3) => 0.2,
            (false, _) => 0.0,
        }
    });
    let generator = Generator::from_parts(
        spec,
        latent_weights,
        Matrix::zeros(4, 2),
        Matrix::zeros(4, 2),
        image_head,
    )
    .unwrap();
    (generator, border)
}

fn mean_border_delta(border: &[usize], a: &ImageTensor, b: &ImageTensor) -> f64 {
    border
        .iter()
        .map(|&p| (a.pixels()[p] - b.pixels()[p]).abs())
        .sum::<f64>()
        / border.len() as f64
}

#[test]
fn background_removal_moves_border_toward_target() {
    let (generator, border) = planted_border_generator();
    let z = LatentCode::new(vec![0.1, 0.0, 0.0, 0.0]).unwrap();
    let t = TextEmbedding::new(vec![0.0; 2], vec![0.0; 2]).unwrap();
    let directions = DirectionSet::new(
        Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0], &[0.0, 0.0]]),
        vec![2.0, 1.0],
        "planted",
        serde_json::json!({}),
    )
    .unwrap();
    let cfg = FlattenConfig {
        steps: 80,
        learning_rate: 0.05,
        ..FlattenConfig::default()
    };
    let trace = background_removal(&generator, &z, &t, &directions, &cfg).unwrap();
    assert_eq!(trace.losses.len(), 81);
    let boundary = trace.phase_boundary.unwrap();
    for w in trace.losses[..boundary].windows(2) {
        assert!(w[1] >= w[0]);
    }
    for w in trace.losses[boundary..].windows(2) {
        assert!(w[1] <= w[0]);
    }

    // Reconstruct the phase-1 target: the strongest accepted ascent edit.
    // The final direction's edit should have moved its border pixels toward
    // that target, cutting the initial deviation at least in half.
    let alpha = cfg.intensity;
    let edit_image = |direction: &[f64]| {
        let norm: f64 = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        let values: Vec<f64> = z
            .values
            .iter()
            .zip(direction)
            .map(|(zv, nv)| zv + alpha * nv / norm)
            .collect();
        generator
            .generate(&LatentCode::new(values).unwrap(), &t)
            .unwrap()
    };
    // Phase 2 minimizes against the phase-1 target; recompute it by
    // replaying the descent objective at v = final direction (prenorm) and
    // v = initial direction and comparing border deltas against the edit
    // whose loss phase 2 reports.
    let initial_edit = edit_image(&trace.initial_direction);
    let final_edit = edit_image(&trace.final_direction);
    // The target is the image the phase-2 losses are measured against; the
    // closest observable proxy is the extreme border edit along z2, which
    // the construction makes the unique ascent optimum.
    let mut extreme = trace.initial_direction.clone();
    extreme[2] = 1.0;
    let norm: f64 = extreme.iter().map(|v| v * v).sum::<f64>().sqrt();
    let extreme: Vec<f64> = extreme.iter().map(|v| v / norm).collect();
    let target = edit_image(&extreme);

    let before = mean_border_delta(&border, &initial_edit, &target);
    let after = mean_border_delta(&border, &final_edit, &target);
    assert!(
        after <= 0.5 * before,
        "border delta before {before}, after {after}"
    );
}
