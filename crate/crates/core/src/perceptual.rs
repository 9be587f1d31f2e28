//! Image distance metrics and discontinuity detection on distance sequences.
//!
//! Besides plain L1/L2 pixel means there is a fixed-filter perceptual
//! distance: two scales (full resolution and a 2x2 mean-pooled half), eight
//! constant 3x3 filters drawn once from a fixed seed, per-position channel
//! normalization, and a mean squared feature difference summed over scales.
//! Externally computed distances (for example from a pretrained perceptual
//! metric) enter through CSV tables instead.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::image::ImageTensor;

/// Which distance to compute between two images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Mean absolute pixel difference.
    L1Mean,
    /// Root of the mean squared pixel difference.
    L2Mean,
    /// Fixed-filter multi-scale feature distance.
    PerceptualFixed,
    /// Distances come from an external table, not from pixels.
    ExternalPrecomputed,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MetricKind::L1Mean => "l1-mean",
            MetricKind::L2Mean => "l2-mean",
            MetricKind::PerceptualFixed => "perceptual-fixed",
            MetricKind::ExternalPrecomputed => "external-precomputed",
        };
        f.write_str(name)
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1-mean" => Ok(MetricKind::L1Mean),
            "l2-mean" => Ok(MetricKind::L2Mean),
            "perceptual-fixed" => Ok(MetricKind::PerceptualFixed),
            "external-precomputed" | "external" => Ok(MetricKind::ExternalPrecomputed),
            other => Err(Error::InvalidParam {
                name: "metric",
                message: format!("unknown metric {other:?}"),
            }),
        }
    }
}

/// Consecutive-pair distances along an image sequence.
#[derive(Debug, Clone)]
pub struct DistanceSequence {
    pub values: Vec<f64>,
    pub metric: MetricKind,
}

impl DistanceSequence {
    pub fn new(values: Vec<f64>, metric: MetricKind) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParam {
                    name: "distance",
                    message: format!("value {v} at index {i} must be finite and nonnegative"),
                });
            }
        }
        Ok(Self { values, metric })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Reads an `index,value` CSV table (header row optional).
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let first = fields.next().unwrap_or_default().trim();
            let second = fields.next().map(str::trim);
            if lineno == 0 && first.parse::<usize>().is_err() {
                continue; // header row
            }
            let value: f64 = second
                .ok_or_else(|| Error::Format {
                    message: format!("distance CSV line {} has no value column", lineno + 1),
                })?
                .parse()
                .map_err(|_| Error::Format {
                    message: format!("distance CSV line {} has a bad value", lineno + 1),
                })?;
            values.push(value);
        }
        Self::new(values, MetricKind::ExternalPrecomputed)
    }

    /// Writes `index,distance,flagged` rows, with a header.
    pub fn write_csv<W: std::io::Write>(
        &self,
        writer: &mut W,
        flagged: &BTreeSet<usize>,
    ) -> Result<()> {
        writeln!(writer, "index,distance,flagged")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(writer, "{i},{v},{}", flagged.contains(&i))?;
        }
        Ok(())
    }
}

/// Robust threshold policy for flagging discontinuities.
#[derive(Debug, Clone, Copy)]
pub struct DiscontinuityPolicy {
    /// Number of scaled MADs above the median that counts as a jump.
    pub mad_multiplier: f64,
}

impl Default for DiscontinuityPolicy {
    fn default() -> Self {
        Self {
            mad_multiplier: 3.0,
        }
    }
}

/// Median of a slice (mean of the central pair for even lengths).
fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Flags indices whose value exceeds `median + k * 1.4826 * MAD`.
///
/// A constant sequence has zero MAD and flags nothing. Needs at least three
/// values.
pub fn detect_discontinuity(
    seq: &DistanceSequence,
    policy: &DiscontinuityPolicy,
) -> Result<BTreeSet<usize>> {
    if seq.len() < 3 {
        return Err(Error::TooFewSamples {
            required: 3,
            got: seq.len(),
        });
    }
    let med = median(&seq.values);
    let deviations: Vec<f64> = seq.values.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&deviations) * 1.4826;
    let threshold = med + policy.mad_multiplier * mad;
    Ok(seq
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > threshold)
        .map(|(i, _)| i)
        .collect())
}

/// Threshold value the default/given policy would apply to `seq`.
pub fn discontinuity_threshold(seq: &DistanceSequence, policy: &DiscontinuityPolicy) -> f64 {
    let med = median(&seq.values);
    let deviations: Vec<f64> = seq.values.iter().map(|v| (v - med).abs()).collect();
    med + policy.mad_multiplier * median(&deviations) * 1.4826
}

const FILTER_COUNT: usize = 8;
const FILTER_SEED: u64 = 0x5eed_f11e;
const NORM_EPS: f64 = 1e-12;

struct FilterBank {
    /// `FILTER_COUNT` filters of 3x3 taps, row-major.
    taps: Vec<[f64; 9]>,
}

fn filter_bank() -> &'static FilterBank {
    static BANK: OnceLock<FilterBank> = OnceLock::new();
    BANK.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(FILTER_SEED);
        let taps = (0..FILTER_COUNT)
            .map(|_| {
                let mut f = [0.0; 9];
                for tap in f.iter_mut() {
                    *tap = StandardNormal.sample(&mut rng);
                }
                f
            })
            .collect();
        FilterBank { taps }
    })
}

/// One resolution level: raw pixel grid plus its feature maps.
struct ScaleFeatures {
    height: usize,
    width: usize,
    /// `positions x FILTER_COUNT`, valid-convolution feature vectors before
    /// normalization.
    raw: Vec<[f64; FILTER_COUNT]>,
}

fn mean_pool(pixels: &[f64], height: usize, width: usize) -> (Vec<f64>, usize, usize) {
    let ph = height / 2;
    let pw = width / 2;
    let mut out = vec![0.0; ph * pw];
    for i in 0..ph {
        for j in 0..pw {
            let mut acc = 0.0;
            for di in 0..2 {
                for dj in 0..2 {
                    acc += pixels[(2 * i + di) * width + (2 * j + dj)];
                }
            }
            out[i * pw + j] = acc * 0.25;
        }
    }
    (out, ph, pw)
}

fn convolve(pixels: &[f64], height: usize, width: usize) -> ScaleFeatures {
    let bank = filter_bank();
    let fh = height - 2;
    let fw = width - 2;
    let mut raw = vec![[0.0; FILTER_COUNT]; fh * fw];
    for i in 0..fh {
        for j in 0..fw {
            let cell = &mut raw[i * fw + j];
            for (c, taps) in bank.taps.iter().enumerate() {
                let mut acc = 0.0;
                for di in 0..3 {
                    for dj in 0..3 {
                        acc += taps[di * 3 + dj] * pixels[(i + di) * width + (j + dj)];
                    }
                }
                cell[c] = acc;
            }
        }
    }
    ScaleFeatures { height, width, raw }
}

fn normalized(v: &[f64; FILTER_COUNT]) -> ([f64; FILTER_COUNT], f64) {
    let mut sq = 0.0;
    for x in v {
        sq += x * x;
    }
    let r = sq.sqrt().max(NORM_EPS);
    let mut out = [0.0; FILTER_COUNT];
    for (o, x) in out.iter_mut().zip(v) {
        *o = x / r;
    }
    (out, r)
}

/// Scale pyramid for the perceptual metric: full resolution plus one 2x2
/// mean-pooled level when it is still at least 3x3.
fn scales_of(img: &ImageTensor) -> Result<Vec<(Vec<f64>, usize, usize)>> {
    let (h, w) = (img.height(), img.width());
    if h < 3 || w < 3 {
        return Err(Error::InvalidParam {
            name: "image",
            message: format!("perceptual-fixed needs at least 3x3 images, got {h}x{w}"),
        });
    }
    let mut scales = vec![(img.pixels().to_vec(), h, w)];
    let (pooled, ph, pw) = mean_pool(img.pixels(), h, w);
    if ph >= 3 && pw >= 3 {
        scales.push((pooled, ph, pw));
    }
    Ok(scales)
}

fn perceptual_distance(x1: &ImageTensor, x2: &ImageTensor) -> Result<f64> {
    let s1 = scales_of(x1)?;
    let s2 = scales_of(x2)?;
    let mut total = 0.0;
    for ((p1, h, w), (p2, _, _)) in s1.iter().zip(&s2) {
        let f1 = convolve(p1, *h, *w);
        let f2 = convolve(p2, *h, *w);
        let count = (f1.raw.len() * FILTER_COUNT) as f64;
        let mut acc = 0.0;
        for (v1, v2) in f1.raw.iter().zip(&f2.raw) {
            let (n1, _) = normalized(v1);
            let (n2, _) = normalized(v2);
            for c in 0..FILTER_COUNT {
                let d = n1[c] - n2[c];
                acc += d * d;
            }
        }
        total += acc / count;
    }
    Ok(total)
}

/// Distance between two equally shaped images under `kind`.
///
/// `ExternalPrecomputed` cannot be evaluated pairwise and is rejected; its
/// values come from a table via [`DistanceSequence::from_csv`].
pub fn distance(kind: MetricKind, x1: &ImageTensor, x2: &ImageTensor) -> Result<f64> {
    if !x1.same_shape(x2) {
        return Err(Error::ShapeMismatch {
            expected: (x1.height(), x1.width()),
            got: (x2.height(), x2.width()),
        });
    }
    match kind {
        MetricKind::L1Mean => {
            let mut acc = 0.0;
            for (a, b) in x1.pixels().iter().zip(x2.pixels()) {
                acc += (a - b).abs();
            }
            Ok(acc / x1.pixels().len() as f64)
        }
        MetricKind::L2Mean => {
            let mut acc = 0.0;
            for (a, b) in x1.pixels().iter().zip(x2.pixels()) {
                acc += (a - b) * (a - b);
            }
            Ok((acc / x1.pixels().len() as f64).sqrt())
        }
        MetricKind::PerceptualFixed => perceptual_distance(x1, x2),
        MetricKind::ExternalPrecomputed => Err(Error::InvalidParam {
            name: "metric",
            message: "external-precomputed requires a distance table".into(),
        }),
    }
}

/// Gradient of `distance(kind, x1, x2)` with respect to the pixels of `x2`.
///
/// The L1 term uses the sign subgradient (0 at exact ties). Only the
/// computable metrics are supported.
pub fn distance_grad_x2(kind: MetricKind, x1: &ImageTensor, x2: &ImageTensor) -> Result<Vec<f64>> {
    if !x1.same_shape(x2) {
        return Err(Error::ShapeMismatch {
            expected: (x1.height(), x1.width()),
            got: (x2.height(), x2.width()),
        });
    }
    let count = x2.pixels().len() as f64;
    match kind {
        MetricKind::L1Mean => Ok(x1
            .pixels()
            .iter()
            .zip(x2.pixels())
            .map(|(a, b)| (b - a).signum() * if b == a { 0.0 } else { 1.0 } / count)
            .collect()),
        MetricKind::L2Mean => {
            let d = distance(MetricKind::L2Mean, x1, x2)?;
            if d == 0.0 {
                return Ok(vec![0.0; x2.pixels().len()]);
            }
            Ok(x1
                .pixels()
                .iter()
                .zip(x2.pixels())
                .map(|(a, b)| (b - a) / (count * d))
                .collect())
        }
        MetricKind::PerceptualFixed => perceptual_grad_x2(x1, x2),
        MetricKind::ExternalPrecomputed => Err(Error::InvalidParam {
            name: "metric",
            message: "external-precomputed has no pixel gradient".into(),
        }),
    }
}

fn perceptual_grad_x2(x1: &ImageTensor, x2: &ImageTensor) -> Result<Vec<f64>> {
    let bank = filter_bank();
    let s1 = scales_of(x1)?;
    let s2 = scales_of(x2)?;
    let (h0, w0) = (x2.height(), x2.width());
    let mut grad_full = vec![0.0; h0 * w0];

    for (level, ((p1, h, w), (p2, _, _))) in s1.iter().zip(&s2).enumerate() {
        let f1 = convolve(p1, *h, *w);
        let f2 = convolve(p2, *h, *w);
        let fh = f1.height - 2;
        let fw = f1.width - 2;
        let count = (f1.raw.len() * FILTER_COUNT) as f64;

        // Backprop through the mean squared difference and the channel
        // normalization into the raw feature maps of x2.
        let mut grad_feat = vec![[0.0; FILTER_COUNT]; f2.raw.len()];
        for (p, (v1, v2)) in f1.raw.iter().zip(&f2.raw).enumerate() {
            let (n1, _) = normalized(v1);
            let (n2, r2) = normalized(v2);
            let mut g = [0.0; FILTER_COUNT];
            for c in 0..FILTER_COUNT {
                g[c] = 2.0 * (n2[c] - n1[c]) / count;
            }
            let raw_norm = {
                let mut sq = 0.0;
                for x in v2 {
                    sq += x * x;
                }
                sq.sqrt()
            };
            if raw_norm > NORM_EPS {
                let mut gn = 0.0;
                for c in 0..FILTER_COUNT {
                    gn += g[c] * n2[c];
                }
                for c in 0..FILTER_COUNT {
                    grad_feat[p][c] = (g[c] - n2[c] * gn) / r2;
                }
            } else {
                for c in 0..FILTER_COUNT {
                    grad_feat[p][c] = g[c] / r2;
                }
            }
        }

        // Backprop through the valid convolution into the scale pixels.
        let mut grad_scale = vec![0.0; h * w];
        for i in 0..fh {
            for j in 0..fw {
                let cell = &grad_feat[i * fw + j];
                for (c, taps) in bank.taps.iter().enumerate() {
                    let g = cell[c];
                    if g == 0.0 {
                        continue;
                    }
                    for di in 0..3 {
                        for dj in 0..3 {
                            grad_scale[(i + di) * w + (j + dj)] += taps[di * 3 + dj] * g;
                        }
                    }
                }
            }
        }

        if level == 0 {
            for (a, b) in grad_full.iter_mut().zip(&grad_scale) {
                *a += b;
            }
        } else {
            // Backprop through the 2x2 mean pooling.
            for i in 0..*h {
                for j in 0..*w {
                    let g = grad_scale[i * w + j] * 0.25;
                    for di in 0..2 {
                        for dj in 0..2 {
                            grad_full[(2 * i + di) * w0 + (2 * j + dj)] += g;
                        }
                    }
                }
            }
        }
    }
    Ok(grad_full)
}

/// Consecutive-pair distances: `values[i] = distance(images[i], images[i+1])`.
pub fn sequence_distances(kind: MetricKind, images: &[ImageTensor]) -> Result<DistanceSequence> {
    if images.len() < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            got: images.len(),
        });
    }
    let mut values = Vec::with_capacity(images.len() - 1);
    for pair in images.windows(2) {
        values.push(distance(kind, &pair[0], &pair[1])?);
    }
    DistanceSequence::new(values, kind)
}
