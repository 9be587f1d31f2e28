//! Toy-generator gradient and sampling checks.

use latentkit::generator::{sample_latent, Generator, GeneratorSpec, LatentCode, TextEmbedding};
use latentkit::image::ImageTensor;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Directional derivative of `sum(cotangent * generate(z))` by central
/// finite differences along coordinate `idx`.
fn finite_difference(
    generator: &Generator,
    z: &LatentCode,
    t: &TextEmbedding,
    cotangent: &ImageTensor,
    idx: usize,
    step: f64,
) -> f64 {
    let eval = |values: Vec<f64>| -> f64 {
        let img = generator
            .generate(&LatentCode::new(values).unwrap(), t)
            .unwrap();
        img.pixels()
            .iter()
            .zip(cotangent.pixels())
            .map(|(p, c)| p * c)
            .sum()
    };
    let mut plus = z.values.clone();
    plus[idx] += step;
    let mut minus = z.values.clone();
    minus[idx] -= step;
    (eval(plus) - eval(minus)) / (2.0 * step)
}

#[test]
fn vjp_matches_central_differences_at_20_points() {
    let generator = Generator::from_spec(GeneratorSpec::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let t = TextEmbedding::zeros(generator.spec());
    for point in 0..20 {
        let z = sample_latent(&mut rng, 16).unwrap();
        let cotangent = ImageTensor::new(
            16,
            16,
            (0..256).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect(),
        )
        .unwrap();
        let grad = generator.generate_vjp(&z, &t, &cotangent).unwrap();
        let idx = point % 16;
        let fd = finite_difference(&generator, &z, &t, &cotangent, idx, 1e-5);
        let rel = (grad[idx] - fd).abs() / fd.abs().max(1e-8);
        assert!(
            rel <= 1e-5,
            "point {point} coord {idx}: {} vs {fd}",
            grad[idx]
        );
    }
}

#[test]
fn latent_sampling_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let draws = 10_000;
    let l = 16;
    let mut sums = vec![0.0f64; l];
    let mut squares = vec![0.0f64; l];
    for _ in 0..draws {
        let z = sample_latent(&mut rng, l).unwrap();
        for (j, v) in z.values.iter().enumerate() {
            sums[j] += v;
            squares[j] += v * v;
        }
    }
    for j in 0..l {
        let mean = sums[j] / draws as f64;
        let var = squares[j] / draws as f64 - mean * mean;
        assert!(mean.abs() <= 0.05, "coordinate {j} mean {mean}");
        assert!((var - 1.0).abs() <= 0.05, "coordinate {j} variance {var}");
    }
}

#[test]
fn images_stay_strictly_inside_unit_range() {
    let generator = Generator::from_spec(GeneratorSpec::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let t = TextEmbedding::zeros(generator.spec());
    for _ in 0..10 {
        let z = sample_latent(&mut rng, 16).unwrap();
        let img = generator.generate(&z, &t).unwrap();
        for &p in img.pixels() {
            assert!(p > -1.0 && p < 1.0);
        }
    }
}
