//! Latent editing and interpolation.
//!
//! Editing moves a latent code along a unit direction, `z + scale * n`.
//! Interpolation comes in three flavors: pairwise over latents, pairwise
//! over text embeddings, and triangular (barycentric) over three text
//! embeddings. All lattices use inclusive endpoints with denominator
//! `steps - 1`, so 10 steps produce 9 consecutive comparisons, and the
//! endpoint images are bit-identical to direct generation.

use crate::error::{Error, Result};
use crate::generator::{Generator, LatentCode, TextEmbedding};
use crate::image::ImageTensor;
use crate::matrix::norm;

/// A unit direction with a manipulation intensity and step count.
#[derive(Debug, Clone)]
pub struct EditParams {
    direction: Vec<f64>,
    intensity: f64,
    steps: usize,
}

/// Default manipulation intensity.
pub const DEFAULT_INTENSITY: f64 = 3.0;
/// Default interpolation/sweep step count.
pub const DEFAULT_STEPS: usize = 10;

impl EditParams {
    /// Validates that the direction has unit norm (within 1e-10) and applies
    /// the default intensity (3) and step count (10).
    pub fn new(direction: Vec<f64>) -> Result<Self> {
        let n = norm(&direction);
        if !n.is_finite() || (n - 1.0).abs() > 1e-10 {
            return Err(Error::NotUnitNorm { norm: n });
        }
        Ok(Self {
            direction,
            intensity: DEFAULT_INTENSITY,
            steps: DEFAULT_STEPS,
        })
    }

    pub fn with_intensity(mut self, intensity: f64) -> Result<Self> {
        if !intensity.is_finite() {
            return Err(Error::InvalidParam {
                name: "intensity",
                message: "must be finite".into(),
            });
        }
        self.intensity = intensity;
        Ok(self)
    }

    pub fn with_steps(mut self, steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidParam {
                name: "steps",
                message: "must be at least 2".into(),
            });
        }
        self.steps = steps;
        Ok(self)
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

/// `z + scale * n`; `scale` defaults to the configured intensity.
pub fn edit(z: &LatentCode, params: &EditParams, scale: Option<f64>) -> Result<LatentCode> {
    if z.len() != params.direction.len() {
        return Err(Error::LengthMismatch {
            expected: params.direction.len(),
            got: z.len(),
        });
    }
    let scale = scale.unwrap_or(params.intensity);
    let values = z
        .values
        .iter()
        .zip(&params.direction)
        .map(|(zv, nv)| zv + scale * nv)
        .collect();
    LatentCode::new(values)
}

/// `(1 - gamma) a + gamma b`, evaluated as `a + gamma (b - a)` so equal
/// endpoints interpolate to exactly themselves.
fn lerp(a: &[f64], b: &[f64], gamma: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + gamma * (y - x)).collect()
}

/// Images along the latent segment `(1-gamma) z0 + gamma z1` with the text
/// embedding held fixed; `gamma = i / (steps - 1)`.
pub fn interp_latent(
    generator: &Generator,
    z0: &LatentCode,
    z1: &LatentCode,
    t: &TextEmbedding,
    steps: usize,
) -> Result<Vec<ImageTensor>> {
    if steps < 2 {
        return Err(Error::InvalidParam {
            name: "steps",
            message: "must be at least 2".into(),
        });
    }
    if z0.len() != z1.len() {
        return Err(Error::LengthMismatch {
            expected: z0.len(),
            got: z1.len(),
        });
    }
    let mut images = Vec::with_capacity(steps);
    for i in 0..steps {
        let z = if i == 0 {
            z0.clone()
        } else if i == steps - 1 {
            z1.clone()
        } else {
            let gamma = i as f64 / (steps - 1) as f64;
            LatentCode::new(lerp(&z0.values, &z1.values, gamma))?
        };
        images.push(generator.generate(&z, t)?);
    }
    Ok(images)
}

/// Images along the text segment with the latent held fixed: both word and
/// sentence embeddings are interpolated with the same `gamma`.
pub fn interp_text(
    generator: &Generator,
    z: &LatentCode,
    t0: &TextEmbedding,
    t1: &TextEmbedding,
    steps: usize,
) -> Result<Vec<ImageTensor>> {
    if steps < 2 {
        return Err(Error::InvalidParam {
            name: "steps",
            message: "must be at least 2".into(),
        });
    }
    if t0.word.len() != t1.word.len() || t0.sentence.len() != t1.sentence.len() {
        return Err(Error::LengthMismatch {
            expected: t0.word.len(),
            got: t1.word.len(),
        });
    }
    let mut images = Vec::with_capacity(steps);
    for i in 0..steps {
        let t = if i == 0 {
            t0.clone()
        } else if i == steps - 1 {
            t1.clone()
        } else {
            let gamma = i as f64 / (steps - 1) as f64;
            TextEmbedding::new(
                lerp(&t0.word, &t1.word, gamma),
                lerp(&t0.sentence, &t1.sentence, gamma),
            )?
        };
        images.push(generator.generate(z, &t)?);
    }
    Ok(images)
}

/// One sample of a triangular interpolation grid.
#[derive(Debug, Clone)]
pub struct TriangularSample {
    pub gamma1: f64,
    pub gamma2: f64,
    pub image: ImageTensor,
}

/// Barycentric lattice over three text embeddings.
///
/// Samples sit on `{(i, j) / (steps - 1) : i + j <= steps - 1}`, giving
/// `steps * (steps + 1) / 2` images; the corners reproduce the pure
/// generations exactly.
#[derive(Debug, Clone)]
pub struct TriangularGrid {
    pub corners: [TextEmbedding; 3],
    pub steps: usize,
    pub samples: Vec<TriangularSample>,
}

impl TriangularGrid {
    /// The `gamma2 = 0` edge in increasing `gamma1` order.
    pub fn edge_gamma2_zero(&self) -> Vec<&TriangularSample> {
        self.samples.iter().filter(|s| s.gamma2 == 0.0).collect()
    }
}

/// `(1 - g1 - g2) w0 + g1 w1 + g2 w2`, evaluated around `w0` so the
/// `g2 = 0` edge reproduces [`lerp`] exactly.
fn simplex_combine(w0: &[f64], w1: &[f64], w2: &[f64], g1: f64, g2: f64) -> Vec<f64> {
    (0..w0.len())
        .map(|j| w0[j] + g1 * (w1[j] - w0[j]) + g2 * (w2[j] - w0[j]))
        .collect()
}

/// Triangular interpolation of three text embeddings at a fixed latent.
pub fn interp_triangular(
    generator: &Generator,
    z: &LatentCode,
    t0: &TextEmbedding,
    t1: &TextEmbedding,
    t2: &TextEmbedding,
    steps: usize,
) -> Result<TriangularGrid> {
    if steps < 2 {
        return Err(Error::InvalidParam {
            name: "steps",
            message: "must be at least 2".into(),
        });
    }
    for t in [t1, t2] {
        if t0.word.len() != t.word.len() || t0.sentence.len() != t.sentence.len() {
            return Err(Error::LengthMismatch {
                expected: t0.word.len(),
                got: t.word.len(),
            });
        }
    }
    let denom = (steps - 1) as f64;
    let mut samples = Vec::with_capacity(steps * (steps + 1) / 2);
    for i in 0..steps {
        for j in 0..steps - i {
            let gamma1 = i as f64 / denom;
            let gamma2 = j as f64 / denom;
            let t = if i == 0 && j == 0 {
                t0.clone()
            } else if i == steps - 1 && j == 0 {
                t1.clone()
            } else if i == 0 && j == steps - 1 {
                t2.clone()
            } else {
                TextEmbedding::new(
                    simplex_combine(&t0.word, &t1.word, &t2.word, gamma1, gamma2),
                    simplex_combine(&t0.sentence, &t1.sentence, &t2.sentence, gamma1, gamma2),
                )?
            };
            samples.push(TriangularSample {
                gamma1,
                gamma2,
                image: generator.generate(z, &t)?,
            });
        }
    }
    Ok(TriangularGrid {
        corners: [t0.clone(), t1.clone(), t2.clone()],
        steps,
        samples,
    })
}

/// Images at scales `linspace(-intensity, +intensity, steps)` along the
/// direction; for odd step counts the middle image is the unedited
/// generation.
pub fn sweep_direction(
    generator: &Generator,
    z: &LatentCode,
    t: &TextEmbedding,
    params: &EditParams,
) -> Result<Vec<ImageTensor>> {
    let steps = params.steps();
    let mut images = Vec::with_capacity(steps);
    for i in 0..steps {
        // alpha * (2i - (steps-1)) / (steps-1): exact at the center and ends.
        let numerator = 2 * i as i64 - (steps as i64 - 1);
        let z_edit = if numerator == 0 {
            z.clone()
        } else {
            let scale = params.intensity() * numerator as f64 / (steps as f64 - 1.0);
            edit(z, params, Some(scale))?
        };
        images.push(generator.generate(&z_edit, t)?);
    }
    Ok(images)
}

/// Sweep scale values, matching [`sweep_direction`] sample for sample.
pub fn sweep_scales(params: &EditParams) -> Vec<f64> {
    let steps = params.steps();
    (0..steps)
        .map(|i| {
            let numerator = 2 * i as i64 - (steps as i64 - 1);
            if numerator == 0 {
                0.0
            } else {
                params.intensity() * numerator as f64 / (steps as f64 - 1.0)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::GeneratorSpec;

    fn toy() -> Generator {
        Generator::from_spec(GeneratorSpec::default()).unwrap()
    }

    fn unit_axis(len: usize, axis: usize) -> Vec<f64> {
        let mut v = vec![0.0; len];
        v[axis] = 1.0;
        v
    }

    fn pixels_bits(img: &ImageTensor) -> Vec<u64> {
        img.pixels().iter().map(|p| p.to_bits()).collect()
    }

    #[test]
    fn params_reject_non_unit_direction() {
        assert!(matches!(
            EditParams::new(vec![1.0, 1.0]),
            Err(Error::NotUnitNorm { .. })
        ));
    }

    #[test]
    fn edit_zero_scale_is_identity() {
        let params = EditParams::new(unit_axis(16, 0)).unwrap();
        let z = LatentCode::new((0..16).map(|i| i as f64 / 10.0).collect()).unwrap();
        let edited = edit(&z, &params, Some(0.0)).unwrap();
        assert_eq!(edited.values, z.values);
    }

    #[test]
    fn edit_default_scale_is_intensity() {
        let params = EditParams::new(unit_axis(16, 0)).unwrap();
        let z = LatentCode::zeros(16);
        let edited = edit(&z, &params, None).unwrap();
        assert_eq!(edited.values[0], 3.0);
        assert!(edited.values[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn edit_round_trip_restores_z() {
        let params = EditParams::new(unit_axis(16, 3)).unwrap();
        let z = LatentCode::new((0..16).map(|i| (i as f64).sin()).collect()).unwrap();
        let there = edit(&z, &params, Some(2.5)).unwrap();
        let back = edit(&there, &params, Some(-2.5)).unwrap();
        for (a, b) in back.values.iter().zip(&z.values) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn latent_endpoints_are_bit_exact() {
        let g = toy();
        let z0 = LatentCode::new(vec![0.2; 16]).unwrap();
        let z1 = LatentCode::new(vec![-0.4; 16]).unwrap();
        let t = TextEmbedding::zeros(g.spec());
        let images = interp_latent(&g, &z0, &z1, &t, 10).unwrap();
        assert_eq!(images.len(), 10);
        assert_eq!(
            pixels_bits(&images[0]),
            pixels_bits(&g.generate(&z0, &t).unwrap())
        );
        assert_eq!(
            pixels_bits(&images[9]),
            pixels_bits(&g.generate(&z1, &t).unwrap())
        );
    }

    #[test]
    fn latent_midpoint_matches_independent_recomputation() {
        let g = toy();
        let z0 = LatentCode::new((0..16).map(|i| (i as f64 / 7.0).cos()).collect()).unwrap();
        let z1 = LatentCode::new((0..16).map(|i| (i as f64 / 5.0).sin()).collect()).unwrap();
        let t = TextEmbedding::zeros(g.spec());
        let images = interp_latent(&g, &z0, &z1, &t, 11).unwrap();
        let gamma = 5.0 / 10.0;
        let mid: Vec<f64> = z0
            .values
            .iter()
            .zip(&z1.values)
            .map(|(a, b)| a + gamma * (b - a))
            .collect();
        let expected = g.generate(&LatentCode::new(mid).unwrap(), &t).unwrap();
        assert_eq!(pixels_bits(&images[5]), pixels_bits(&expected));
    }

    #[test]
    fn text_interp_with_equal_endpoints_is_constant() {
        let g = toy();
        let z = LatentCode::new(vec![0.1; 16]).unwrap();
        let t = TextEmbedding::new(vec![0.3; 8], vec![-0.2; 8]).unwrap();
        let images = interp_text(&g, &z, &t, &t, 6).unwrap();
        let first = pixels_bits(&images[0]);
        for img in &images {
            assert_eq!(pixels_bits(img), first);
        }
    }

    #[test]
    fn text_preactivations_are_linear_in_gamma() {
        let g = toy();
        let z = LatentCode::new(vec![0.25; 16]).unwrap();
        let t0 = TextEmbedding::new(vec![0.5; 8], vec![0.1; 8]).unwrap();
        let t1 = TextEmbedding::new(vec![-0.3; 8], vec![0.7; 8]).unwrap();
        let p0 = g.hidden_preactivation(&z, &t0).unwrap();
        let p1 = g.hidden_preactivation(&z, &t1).unwrap();
        for i in 0..=10 {
            let gamma = i as f64 / 10.0;
            let t = TextEmbedding::new(
                lerp(&t0.word, &t1.word, gamma),
                lerp(&t0.sentence, &t1.sentence, gamma),
            )
            .unwrap();
            let p = g.hidden_preactivation(&z, &t).unwrap();
            for h in 0..p.len() {
                let expected = (1.0 - gamma) * p0[h] + gamma * p1[h];
                assert!((p[h] - expected).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn triangular_count_and_corners() {
        let g = toy();
        let z = LatentCode::new(vec![0.15; 16]).unwrap();
        let t0 = TextEmbedding::new(vec![0.5; 8], vec![0.5; 8]).unwrap();
        let t1 = TextEmbedding::new(vec![-0.5; 8], vec![0.1; 8]).unwrap();
        let t2 = TextEmbedding::new(vec![0.2; 8], vec![-0.6; 8]).unwrap();
        let grid = interp_triangular(&g, &z, &t0, &t1, &t2, 10).unwrap();
        assert_eq!(grid.samples.len(), 55);

        let find = |g1: f64, g2: f64| {
            grid.samples
                .iter()
                .find(|s| s.gamma1 == g1 && s.gamma2 == g2)
                .unwrap()
        };
        for (g1, g2, t) in [(0.0, 0.0, &t0), (1.0, 0.0, &t1), (0.0, 1.0, &t2)] {
            let expected = g.generate(&z, t).unwrap();
            assert_eq!(pixels_bits(&find(g1, g2).image), pixels_bits(&expected));
        }
    }

    #[test]
    fn triangular_centroid_matches_mean_embedding() {
        let g = toy();
        let z = LatentCode::new(vec![-0.1; 16]).unwrap();
        let t0 = TextEmbedding::new(vec![0.9; 8], vec![0.0; 8]).unwrap();
        let t1 = TextEmbedding::new(vec![-0.3; 8], vec![0.4; 8]).unwrap();
        let t2 = TextEmbedding::new(vec![0.1; 8], vec![-0.8; 8]).unwrap();
        let grid = interp_triangular(&g, &z, &t0, &t1, &t2, 10).unwrap();
        let third = 3.0 / 9.0;
        let sample = grid
            .samples
            .iter()
            .find(|s| s.gamma1 == third && s.gamma2 == third)
            .unwrap();
        let mean = TextEmbedding::new(
            (0..8)
                .map(|j| (t0.word[j] + t1.word[j] + t2.word[j]) / 3.0)
                .collect(),
            (0..8)
                .map(|j| (t0.sentence[j] + t1.sentence[j] + t2.sentence[j]) / 3.0)
                .collect(),
        )
        .unwrap();
        let expected = g.generate(&z, &mean).unwrap();
        for (a, b) in sample.image.pixels().iter().zip(expected.pixels()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn triangular_edge_equals_text_interp() {
        let g = toy();
        let z = LatentCode::new(vec![0.05; 16]).unwrap();
        let t0 = TextEmbedding::new(vec![0.6; 8], vec![0.2; 8]).unwrap();
        let t1 = TextEmbedding::new(vec![-0.1; 8], vec![0.9; 8]).unwrap();
        let t2 = TextEmbedding::new(vec![0.4; 8], vec![-0.4; 8]).unwrap();
        let grid = interp_triangular(&g, &z, &t0, &t1, &t2, 10).unwrap();
        let edge = grid.edge_gamma2_zero();
        let line = interp_text(&g, &z, &t0, &t1, 10).unwrap();
        assert_eq!(edge.len(), line.len());
        for (sample, img) in edge.iter().zip(&line) {
            assert_eq!(sample.image.pixels(), img.pixels());
        }
    }

    #[test]
    fn sweep_scales_and_center() {
        let g = toy();
        let z = LatentCode::new(vec![0.2; 16]).unwrap();
        let t = TextEmbedding::zeros(g.spec());
        let params = EditParams::new(unit_axis(16, 2))
            .unwrap()
            .with_steps(3)
            .unwrap();
        assert_eq!(sweep_scales(&params), vec![-3.0, 0.0, 3.0]);
        let images = sweep_direction(&g, &z, &t, &params).unwrap();
        assert_eq!(
            pixels_bits(&images[1]),
            pixels_bits(&g.generate(&z, &t).unwrap())
        );
    }

    #[test]
    fn sweep_negated_direction_reverses_images() {
        let g = toy();
        let z = LatentCode::new((0..16).map(|i| ((i * i) as f64).sin() * 0.3).collect()).unwrap();
        let t = TextEmbedding::zeros(g.spec());
        let n = unit_axis(16, 5);
        let neg: Vec<f64> = n.iter().map(|v| -v).collect();
        let params_pos = EditParams::new(n).unwrap().with_steps(7).unwrap();
        let params_neg = EditParams::new(neg).unwrap().with_steps(7).unwrap();
        let forward = sweep_direction(&g, &z, &t, &params_pos).unwrap();
        let mut backward = sweep_direction(&g, &z, &t, &params_neg).unwrap();
        backward.reverse();
        for (a, b) in forward.iter().zip(&backward) {
            assert_eq!(pixels_bits(a), pixels_bits(b));
        }
    }
}
