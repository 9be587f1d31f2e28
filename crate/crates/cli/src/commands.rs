//! Implementations behind the CLI subcommands: input loading, the calls
//! into the core library, and artifact emission.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use latentkit::directions::{
    ganspace_sample, ica_orthogonal, match_directions, pca_weights, sefa, DirectionSet, IcaConfig,
    IcaNonlinearity,
};
use latentkit::editing::{interp_latent, interp_text, interp_triangular};
use latentkit::error::{Error, Result};
use latentkit::flatten::{background_removal, flatten_direction, FlattenConfig, RefinementTrace};
use latentkit::gate::{
    evaluate, extract_features, fit_pixel_pca, rank_items, split_dataset, DatasetManifest,
    FeatureExtractor, PixelPca, QualityLabel,
};
use latentkit::generator::{sample_latent, Generator, GeneratorSpec, LatentCode, TextEmbedding};
use latentkit::image::ImageTensor;
use latentkit::npy;
use latentkit::perceptual::{
    detect_discontinuity, discontinuity_threshold, sequence_distances, DiscontinuityPolicy,
    DistanceSequence, MetricKind,
};
use latentkit::svm::{svm_train, SvmConfig, SvmModel, TrainMeta};
use latentkit::Matrix;

/// Global flags shared by every subcommand.
pub struct Ctx {
    pub seed: u64,
    pub out: PathBuf,
    pub quiet: bool,
}

impl Ctx {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

fn invalid(name: &'static str, message: impl Into<String>) -> Error {
    Error::InvalidParam {
        name,
        message: message.into(),
    }
}

fn load_generator(spec_path: &Path) -> Result<Generator> {
    let text = std::fs::read_to_string(spec_path)?;
    Generator::from_spec(GeneratorSpec::from_json(&text)?)
}

fn load_embedding(path: Option<&Path>, spec: &GeneratorSpec) -> Result<TextEmbedding> {
    match path {
        None => Ok(TextEmbedding::zeros(spec)),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let embedding: TextEmbedding = serde_json::from_str(&text)?;
            TextEmbedding::new(embedding.word, embedding.sentence)
        }
    }
}

fn load_or_sample_latent(
    path: Option<&Path>,
    rng: &mut ChaCha8Rng,
    latent_dim: usize,
) -> Result<LatentCode> {
    match path {
        Some(p) => LatentCode::new(npy::load_vector(p)?),
        None => sample_latent(rng, latent_dim),
    }
}

fn parse_metric(text: &str) -> Result<MetricKind> {
    MetricKind::from_str(text)
}

/// Quotes a CSV field when it contains a delimiter, quote or newline.
fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

// ---------------------------------------------------------------- gen

pub fn gen_spec(ctx: &Ctx, spec: GeneratorSpec) -> Result<()> {
    spec.validate()?;
    let path = ctx.out.join("spec.json");
    std::fs::write(&path, spec.to_json())?;
    ctx.say(format!("wrote {}", path.display()));
    Ok(())
}

pub fn gen_image(
    ctx: &Ctx,
    spec_path: &Path,
    z: Option<&Path>,
    embedding: Option<&Path>,
) -> Result<()> {
    let generator = load_generator(spec_path)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let sampled = z.is_none();
    let latent = load_or_sample_latent(z, &mut rng, generator.spec().latent_dim)?;
    let text = load_embedding(embedding, generator.spec())?;
    let image = generator.generate(&latent, &text)?;
    image.save_pgm(&ctx.out.join("image.pgm"))?;
    if sampled {
        npy::save_vector(&ctx.out.join("z.npy"), &latent.values)?;
    }
    ctx.say(format!("wrote {}", ctx.out.join("image.pgm").display()));
    Ok(())
}

pub fn gen_weights(ctx: &Ctx, spec_path: &Path) -> Result<()> {
    let generator = load_generator(spec_path)?;
    let path = ctx.out.join("weights.npy");
    npy::save_matrix(&path, generator.latent_weights())?;
    ctx.say(format!("wrote {}", path.display()));
    Ok(())
}

// --------------------------------------------------------- directions

fn save_direction_set(ctx: &Ctx, set: &DirectionSet) -> Result<()> {
    let npy_path = ctx.out.join("directions.npy");
    let json_path = ctx.out.join("directions.json");
    set.save(&npy_path, &json_path)?;
    ctx.say(format!(
        "wrote {} and {}",
        npy_path.display(),
        json_path.display()
    ));
    Ok(())
}

pub fn directions_sefa(ctx: &Ctx, weights: &Path, k: usize, normalize_rows: bool) -> Result<()> {
    let a = npy::load_matrix(weights)?;
    save_direction_set(ctx, &sefa(&a, k, normalize_rows)?)
}

pub fn directions_pca(ctx: &Ctx, weights: &Path, k: usize) -> Result<()> {
    let a = npy::load_matrix(weights)?;
    save_direction_set(ctx, &pca_weights(&a, k)?)
}

pub fn directions_ganspace(ctx: &Ctx, spec: &Path, k: usize, samples: usize) -> Result<()> {
    let generator = load_generator(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    save_direction_set(ctx, &ganspace_sample(&generator, samples, k, &mut rng)?)
}

#[allow(clippy::too_many_arguments)]
pub fn directions_ica(
    ctx: &Ctx,
    weights: &Path,
    k: usize,
    max_iter: usize,
    tol: f64,
    nonlinearity: &str,
    ambient_orthonormalize: bool,
) -> Result<()> {
    let a = npy::load_matrix(weights)?;
    let nonlinearity = match nonlinearity {
        "logcosh" => IcaNonlinearity::Logcosh,
        "cube" => IcaNonlinearity::Cube,
        other => return Err(invalid("nonlinearity", format!("unknown {other:?}"))),
    };
    let cfg = IcaConfig {
        components: k,
        nonlinearity,
        max_iter,
        tol,
        seed: ctx.seed,
        ambient_orthonormalize,
    };
    save_direction_set(ctx, &ica_orthogonal(&a, &cfg)?)
}

// ------------------------------------------------------------ compare

fn direction_set_from_matrix(m: Matrix) -> Result<DirectionSet> {
    // Accept any matrix of column directions: normalize defensively and
    // attach neutral scores so raw NPY files compare fine.
    let mut unit = m.clone();
    for j in 0..m.cols() {
        let col = m.column(j);
        let norm: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-12 {
            return Err(Error::DegenerateDirection { index: j });
        }
        let scaled: Vec<f64> = col.iter().map(|v| v / norm).collect();
        unit.set_column(j, &scaled);
    }
    DirectionSet::new(unit, vec![0.0; m.cols()], "file", serde_json::Value::Null)
}

pub fn compare(ctx: &Ctx, first: &Path, second: &Path) -> Result<()> {
    let a = direction_set_from_matrix(npy::load_matrix(first)?)?;
    let b = direction_set_from_matrix(npy::load_matrix(second)?)?;
    let matching = match_directions(&a, &b)?;
    let path = ctx.out.join("compare.csv");
    let mut csv = String::from("pair,first,second,abs_cos,sign\n");
    for (i, (&j, (&cos, &sign))) in matching
        .permutation
        .iter()
        .zip(matching.scores.iter().zip(&matching.signs))
        .enumerate()
    {
        csv.push_str(&format!("{i},{i},{j},{cos},{}\n", sign as i64));
    }
    std::fs::write(&path, csv)?;
    println!(
        "pairs {} min_abs_cos {} mean_abs_cos {}",
        matching.scores.len(),
        matching.min_score(),
        matching.mean_score()
    );
    Ok(())
}

// ------------------------------------------------------------- interp

struct SequenceOutputs<'a> {
    images: Vec<ImageTensor>,
    /// (index, gamma coordinates) per image for the manifest.
    coordinates: Vec<Vec<f64>>,
    coordinate_names: &'a [&'a str],
}

fn emit_sequence(
    ctx: &Ctx,
    outputs: SequenceOutputs<'_>,
    metric: MetricKind,
    distances: Option<&Path>,
) -> Result<()> {
    // Images.
    let mut files = Vec::new();
    for (i, image) in outputs.images.iter().enumerate() {
        let name = format!("img_{i:03}.pgm");
        image.save_pgm(&ctx.out.join(&name))?;
        files.push(name);
    }

    // Manifest.
    let mut manifest = String::from("index");
    for name in outputs.coordinate_names {
        manifest.push(',');
        manifest.push_str(name);
    }
    manifest.push_str(",file\n");
    for (i, coords) in outputs.coordinates.iter().enumerate() {
        manifest.push_str(&format!("{i}"));
        for c in coords {
            manifest.push_str(&format!(",{c}"));
        }
        manifest.push_str(&format!(",{}\n", files[i]));
    }
    std::fs::write(ctx.out.join("manifest.csv"), manifest)?;

    // Distances: computed or external.
    let sequence = match metric {
        MetricKind::ExternalPrecomputed => {
            let table = distances
                .ok_or_else(|| invalid("distances", "external-precomputed needs --distances"))?;
            let seq = DistanceSequence::from_csv(table)?;
            if seq.len() != outputs.images.len() - 1 {
                return Err(invalid(
                    "distances",
                    format!(
                        "table has {} rows, sequence needs {}",
                        seq.len(),
                        outputs.images.len() - 1
                    ),
                ));
            }
            seq
        }
        computable => sequence_distances(computable, &outputs.images)?,
    };
    let policy = DiscontinuityPolicy::default();
    let flagged = if sequence.len() >= 3 {
        detect_discontinuity(&sequence, &policy)?
    } else {
        BTreeSet::new()
    };
    let mut csv = Vec::new();
    sequence.write_csv(&mut csv, &flagged)?;
    std::fs::write(ctx.out.join("distances.csv"), csv)?;

    let threshold = discontinuity_threshold(&sequence, &policy);
    std::fs::write(
        ctx.out.join("plot.svg"),
        crate::svg::distance_plot(&sequence.values, threshold, &flagged),
    )?;

    ctx.say(format!(
        "wrote {} images, distances.csv, plot.svg, manifest.csv under {}",
        files.len(),
        ctx.out.display()
    ));
    if !flagged.is_empty() {
        ctx.say(format!(
            "flagged indices: {}",
            flagged
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        ));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn interp_latent_cmd(
    ctx: &Ctx,
    spec: &Path,
    z0: Option<&Path>,
    z1: Option<&Path>,
    embedding: Option<&Path>,
    steps: usize,
    metric: &str,
    distances: Option<&Path>,
) -> Result<()> {
    let generator = load_generator(spec)?;
    let metric = parse_metric(metric)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let latent_dim = generator.spec().latent_dim;
    let z0 = load_or_sample_latent(z0, &mut rng, latent_dim)?;
    let z1 = load_or_sample_latent(z1, &mut rng, latent_dim)?;
    let text = load_embedding(embedding, generator.spec())?;
    let images = interp_latent(&generator, &z0, &z1, &text, steps)?;
    let denom = (steps - 1) as f64;
    let coordinates = (0..steps).map(|i| vec![i as f64 / denom]).collect();
    emit_sequence(
        ctx,
        SequenceOutputs {
            images,
            coordinates,
            coordinate_names: &["gamma"],
        },
        metric,
        distances,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn interp_text_cmd(
    ctx: &Ctx,
    spec: &Path,
    z: Option<&Path>,
    t0: &Path,
    t1: &Path,
    steps: usize,
    metric: &str,
    distances: Option<&Path>,
) -> Result<()> {
    let generator = load_generator(spec)?;
    let metric = parse_metric(metric)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let z = load_or_sample_latent(z, &mut rng, generator.spec().latent_dim)?;
    let t0 = load_embedding(Some(t0), generator.spec())?;
    let t1 = load_embedding(Some(t1), generator.spec())?;
    let images = interp_text(&generator, &z, &t0, &t1, steps)?;
    let denom = (steps - 1) as f64;
    let coordinates = (0..steps).map(|i| vec![i as f64 / denom]).collect();
    emit_sequence(
        ctx,
        SequenceOutputs {
            images,
            coordinates,
            coordinate_names: &["gamma"],
        },
        metric,
        distances,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn interp_triangular_cmd(
    ctx: &Ctx,
    spec: &Path,
    z: Option<&Path>,
    t0: &Path,
    t1: &Path,
    t2: &Path,
    steps: usize,
    metric: &str,
    distances: Option<&Path>,
) -> Result<()> {
    let generator = load_generator(spec)?;
    let metric = parse_metric(metric)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let z = load_or_sample_latent(z, &mut rng, generator.spec().latent_dim)?;
    let t0 = load_embedding(Some(t0), generator.spec())?;
    let t1 = load_embedding(Some(t1), generator.spec())?;
    let t2 = load_embedding(Some(t2), generator.spec())?;
    let grid = interp_triangular(&generator, &z, &t0, &t1, &t2, steps)?;
    let images: Vec<ImageTensor> = grid.samples.iter().map(|s| s.image.clone()).collect();
    let coordinates: Vec<Vec<f64>> = grid
        .samples
        .iter()
        .map(|s| vec![s.gamma1, s.gamma2])
        .collect();
    emit_sequence(
        ctx,
        SequenceOutputs {
            images,
            coordinates,
            coordinate_names: &["gamma1", "gamma2"],
        },
        metric,
        distances,
    )
}

// --------------------------------------------------------------- gate

/// On-disk model description; sibling files hold the numeric payloads.
#[derive(Serialize, Deserialize)]
struct StoredModel {
    bias: f64,
    c: f64,
    meta: TrainMeta,
    extractor: String,
    weights_file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pca_components_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pca_mean_file: Option<String>,
}

fn manifest_base(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Lexical relative path from `from` to `to` (both made absolute first).
fn relative_path(from: &Path, to: &Path) -> PathBuf {
    let from = std::path::absolute(from).unwrap_or_else(|_| from.to_path_buf());
    let to = std::path::absolute(to).unwrap_or_else(|_| to.to_path_buf());
    let from_parts: Vec<_> = from.components().collect();
    let to_parts: Vec<_> = to.components().collect();
    let common = from_parts
        .iter()
        .zip(&to_parts)
        .take_while(|(a, b)| a == b)
        .count();
    let mut out = PathBuf::new();
    for _ in common..from_parts.len() {
        out.push("..");
    }
    for part in &to_parts[common..] {
        out.push(part);
    }
    if out.as_os_str().is_empty() {
        out.push(".");
    }
    out
}

/// Rewrites item paths so they stay resolvable from `new_base`.
fn rebase_manifest(manifest: &mut DatasetManifest, old_base: &Path, new_base: &Path) {
    let rebase = |p: &str| -> String {
        relative_path(new_base, &old_base.join(p))
            .to_string_lossy()
            .into_owned()
    };
    for item in &mut manifest.items {
        item.path = rebase(&item.path);
        if let Some(latent) = &item.latent {
            item.latent = Some(rebase(latent));
        }
    }
}

pub fn gate_split(ctx: &Ctx, manifest_path: &Path, ratio: f64) -> Result<()> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let (mut train, mut test) = split_dataset(&manifest, ratio, ctx.seed)?;
    let base = manifest_base(manifest_path);
    rebase_manifest(&mut train, &base, &ctx.out);
    rebase_manifest(&mut test, &base, &ctx.out);
    train.save(&ctx.out.join("train.json"))?;
    test.save(&ctx.out.join("test.json"))?;
    ctx.say(format!(
        "split {} items into {} train / {} test",
        manifest.items.len(),
        train.items.len(),
        test.items.len()
    ));
    Ok(())
}

fn build_extractor(
    kind: &str,
    target_dim: usize,
    manifest: &DatasetManifest,
    base: &Path,
) -> Result<FeatureExtractor> {
    match kind {
        "raw-pixels" => Ok(FeatureExtractor::RawPixels),
        "raw-latent" => Ok(FeatureExtractor::RawLatent),
        "external-file" => Ok(FeatureExtractor::ExternalFile),
        "pca-pixels" => {
            let images: Result<Vec<ImageTensor>> = manifest
                .items
                .iter()
                .map(|item| ImageTensor::load_pgm(&base.join(&item.path)))
                .collect();
            Ok(FeatureExtractor::PcaPixels(fit_pixel_pca(
                &images?, target_dim,
            )?))
        }
        other => Err(invalid("features", format!("unknown extractor {other:?}"))),
    }
}

fn extract_all(
    extractor: &FeatureExtractor,
    manifest: &DatasetManifest,
    base: &Path,
) -> Result<(Vec<Vec<f64>>, Vec<QualityLabel>)> {
    let mut features = Vec::with_capacity(manifest.items.len());
    let mut labels = Vec::with_capacity(manifest.items.len());
    for item in &manifest.items {
        features.push(extract_features(extractor, item, base)?);
        labels.push(item.label);
    }
    Ok((features, labels))
}

pub fn gate_train(
    ctx: &Ctx,
    manifest_path: &Path,
    features_kind: &str,
    target_dim: usize,
    c: f64,
) -> Result<()> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest_base(manifest_path);
    let extractor = build_extractor(features_kind, target_dim, &manifest, &base)?;
    let (features, labels) = extract_all(&extractor, &manifest, &base)?;
    let cfg = SvmConfig {
        c,
        seed: ctx.seed,
        ..SvmConfig::default()
    };
    let model = svm_train(&features, &labels, &cfg)?;

    npy::save_vector(&ctx.out.join("weights.npy"), &model.weights)?;
    let mut stored = StoredModel {
        bias: model.bias,
        c: model.c,
        meta: model.meta,
        extractor: extractor.kind_name().to_string(),
        weights_file: "weights.npy".into(),
        pca_components_file: None,
        pca_mean_file: None,
    };
    if let FeatureExtractor::PcaPixels(pca) = &extractor {
        let k = pca.components.len();
        let p = pca.mean.len();
        let components = Matrix::from_fn(k, p, |i, j| pca.components[i][j]);
        npy::save_matrix(&ctx.out.join("pca_components.npy"), &components)?;
        npy::save_vector(&ctx.out.join("pca_mean.npy"), &pca.mean)?;
        stored.pca_components_file = Some("pca_components.npy".into());
        stored.pca_mean_file = Some("pca_mean.npy".into());
    }
    std::fs::write(
        ctx.out.join("model.json"),
        serde_json::to_string_pretty(&stored)?,
    )?;
    ctx.say(format!(
        "trained on {} items ({} epochs); wrote {}",
        manifest.items.len(),
        model.meta.epochs,
        ctx.out.join("model.json").display()
    ));
    Ok(())
}

fn load_model(model_path: &Path) -> Result<(SvmModel, FeatureExtractor)> {
    let stored: StoredModel = serde_json::from_str(&std::fs::read_to_string(model_path)?)?;
    let base = manifest_base(model_path);
    let weights = npy::load_vector(&base.join(&stored.weights_file))?;
    let model = SvmModel {
        weights,
        bias: stored.bias,
        c: stored.c,
        meta: stored.meta,
    };
    let extractor = match stored.extractor.as_str() {
        "raw-pixels" => FeatureExtractor::RawPixels,
        "raw-latent" => FeatureExtractor::RawLatent,
        "external-file" => FeatureExtractor::ExternalFile,
        "pca-pixels" => {
            let components_file = stored.pca_components_file.ok_or_else(|| Error::Format {
                message: "pca-pixels model without components file".into(),
            })?;
            let mean_file = stored.pca_mean_file.ok_or_else(|| Error::Format {
                message: "pca-pixels model without mean file".into(),
            })?;
            let components = npy::load_matrix(&base.join(components_file))?;
            let mean = npy::load_vector(&base.join(mean_file))?;
            let rows: Vec<Vec<f64>> = (0..components.rows())
                .map(|i| components.row(i).to_vec())
                .collect();
            FeatureExtractor::PcaPixels(PixelPca {
                mean,
                components: rows,
            })
        }
        other => {
            return Err(Error::Format {
                message: format!("unknown extractor {other:?} in model"),
            })
        }
    };
    Ok((model, extractor))
}

pub fn gate_eval(ctx: &Ctx, manifest_path: &Path, model_path: &Path) -> Result<()> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest_base(manifest_path);
    let (model, extractor) = load_model(model_path)?;
    let (features, labels) = extract_all(&extractor, &manifest, &base)?;
    let items: Vec<(Vec<f64>, QualityLabel)> = features.into_iter().zip(labels).collect();
    let report = evaluate(&model, &items)?;
    std::fs::write(
        ctx.out.join("report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    println!("accuracy {}", report.accuracy);
    Ok(())
}

pub fn gate_rank(ctx: &Ctx, manifest_path: &Path, model_path: &Path) -> Result<()> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest_base(manifest_path);
    let (model, extractor) = load_model(model_path)?;
    let mut items = Vec::with_capacity(manifest.items.len());
    for item in &manifest.items {
        let feature = extract_features(&extractor, item, &base)?;
        items.push((item.path.clone(), feature, item.label));
    }
    let ranking = rank_items(&model, &items)?;
    let mut csv = String::from("path,distance,predicted,actual\n");
    for entry in &ranking {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            csv_field(&entry.path),
            entry.distance,
            entry.predicted,
            entry.actual
        ));
    }
    std::fs::write(ctx.out.join("ranking.csv"), csv)?;
    ctx.say(format!("ranked {} items", ranking.len()));
    Ok(())
}

// ------------------------------------------------------------ flatten

#[derive(Serialize)]
struct FlattenSidecar {
    method: &'static str,
    initial_loss: f64,
    final_loss: f64,
    steps: usize,
    intensity: f64,
    learning_rate: f64,
    betas: (f64, f64),
    metric: String,
}

pub fn flatten_cmd(ctx: &Ctx, args: crate::FlattenArgs) -> Result<()> {
    let generator = load_generator(&args.spec)?;
    let metric = parse_metric(&args.metric)?;
    let z = LatentCode::new(npy::load_vector(&args.z)?)?;
    let text = load_embedding(args.embedding.as_deref(), generator.spec())?;
    let cfg = FlattenConfig {
        learning_rate: args.lr,
        betas: (args.beta1, args.beta2),
        epsilon: 1e-8,
        steps: args.steps,
        intensity: args.alpha,
        metric,
    };

    let (method, trace): (&'static str, RefinementTrace) = if args.removal {
        let set_path = args
            .directions
            .as_deref()
            .ok_or_else(|| invalid("directions", "--removal needs --directions"))?;
        let set = direction_set_from_matrix(npy::load_matrix(set_path)?)?;
        (
            "background-removal",
            background_removal(&generator, &z, &text, &set, &cfg)?,
        )
    } else {
        let direction_path = args
            .direction
            .as_deref()
            .ok_or_else(|| invalid("direction", "--direction is required (or use --removal)"))?;
        let direction = npy::load_vector(direction_path)?;
        (
            "flatten",
            flatten_direction(&generator, &z, &text, &direction, &cfg)?,
        )
    };

    npy::save_vector(&ctx.out.join("refined.npy"), &trace.final_direction)?;
    let sidecar = FlattenSidecar {
        method,
        initial_loss: trace.initial_loss(),
        final_loss: trace.final_loss,
        steps: args.steps,
        intensity: args.alpha,
        learning_rate: args.lr,
        betas: (args.beta1, args.beta2),
        metric: metric.to_string(),
    };
    std::fs::write(
        ctx.out.join("refined.json"),
        serde_json::to_string_pretty(&sidecar)?,
    )?;
    std::fs::write(ctx.out.join("trace.csv"), trace.to_csv())?;
    println!(
        "initial loss {} final loss {}",
        trace.initial_loss(),
        trace.final_loss
    );
    Ok(())
}
