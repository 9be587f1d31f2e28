//! Command-line surface for the latentkit toolkit.
//!
//! Subcommands: `gen` (toy spec + single image), `directions` (sefa, pca,
//! ganspace, ica), `compare`, `interp` (latent, text, triangular), `gate`
//! (split, train, eval, rank) and `flatten`. All randomness flows from the
//! global `--seed`; identical invocations produce byte-identical artifacts.
//!
//! Exit codes: 0 success, 2 malformed input, 3 numerical failure,
//! 4 single-class training data.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use latentkit::Error;

#[derive(Parser)]
#[command(
    name = "latentkit",
    version,
    about = "Latent-space analysis toolkit for conditional image generators"
)]
struct Cli {
    /// Seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a toy generator spec or generate a single image.
    Gen {
        #[command(subcommand)]
        action: GenAction,
    },
    /// Discover semantic latent directions.
    Directions {
        #[command(subcommand)]
        method: DirectionsMethod,
    },
    /// Match two direction sets and report absolute cosines.
    #[command(
        after_help = "Writes compare.csv with columns: pair,first,second,abs_cos,sign. \
                      Prints a summary line: pairs N min_abs_cos X mean_abs_cos Y."
    )]
    Compare {
        /// First direction set (NPY matrix, directions as columns).
        #[arg(long)]
        first: PathBuf,
        /// Second direction set (NPY matrix).
        #[arg(long)]
        second: PathBuf,
    },
    /// Interpolate and analyze the resulting image sequence.
    #[command(
        after_help = "Writes numbered img_NNN.pgm files, distances.csv with columns \
                      index,distance,flagged, a plot.svg polyline chart with the flag \
                      threshold, and manifest.csv with columns index,gamma,file \
                      (index,gamma1,gamma2,file for triangular)."
    )]
    Interp {
        #[command(subcommand)]
        kind: InterpKind,
    },
    /// Good/bad quality gate over dataset manifests.
    #[command(
        after_help = "split writes train.json/test.json manifests; train writes model.json \
                      plus weights.npy; eval writes report.json {accuracy, confusion}; rank \
                      writes ranking.csv with columns path,distance,predicted,actual sorted \
                      by signed distance descending."
    )]
    Gate {
        #[command(subcommand)]
        action: GateAction,
    },
    /// Refine a direction with the background-flattening loss.
    #[command(
        after_help = "Writes refined.npy, refined.json (initial/final loss and settings), \
                      and trace.csv with columns step,loss."
    )]
    Flatten(FlattenArgs),
}

#[derive(Subcommand)]
enum GenAction {
    /// Write a generator spec JSON (weights derive from dims + seed).
    Spec {
        #[arg(long, default_value_t = 16)]
        latent_dim: usize,
        #[arg(long, default_value_t = 8)]
        word_dim: usize,
        #[arg(long, default_value_t = 8)]
        sentence_dim: usize,
        #[arg(long, default_value_t = 64)]
        hidden_dim: usize,
        #[arg(long, default_value_t = 16)]
        height: usize,
        #[arg(long, default_value_t = 16)]
        width: usize,
    },
    /// Generate one image (latent sampled from --seed when not given).
    Image {
        #[arg(long)]
        spec: PathBuf,
        /// Latent vector as 1-D NPY; sampled when omitted (the sampled
        /// vector is saved next to the image as z.npy).
        #[arg(long)]
        z: Option<PathBuf>,
        /// Text embedding JSON {"word": [...], "sentence": [...]}; zeros
        /// when omitted.
        #[arg(long)]
        embedding: Option<PathBuf>,
    },
    /// Export the first dense-layer weights of a spec as NPY.
    Weights {
        #[arg(long)]
        spec: PathBuf,
    },
}

#[derive(Subcommand)]
enum DirectionsMethod {
    /// Top eigenvectors of A^T A for the first dense-layer weights.
    Sefa {
        #[arg(long)]
        weights: PathBuf,
        #[arg(short, long)]
        k: usize,
        /// Row-normalize the weights first.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        normalize_rows: bool,
    },
    /// Top eigenvectors of the weight covariance.
    Pca {
        #[arg(long)]
        weights: PathBuf,
        #[arg(short, long)]
        k: usize,
    },
    /// PCA over sampled first-layer features, mapped back to latent space.
    Ganspace {
        #[arg(long)]
        spec: PathBuf,
        #[arg(short, long)]
        k: usize,
        /// Number of sampled latents.
        #[arg(short = 'n', long, default_value_t = latentkit::directions::GANSPACE_DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Orthogonality-constrained FastICA on the weight rows.
    Ica {
        #[arg(long)]
        weights: PathBuf,
        #[arg(short, long)]
        k: usize,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Contrast function: logcosh or cube.
        #[arg(long, default_value = "logcosh")]
        nonlinearity: String,
        /// Orthonormalize the latent-space directions.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        ambient_orthonormalize: bool,
    },
}

#[derive(Subcommand)]
enum InterpKind {
    /// Pairwise linear interpolation between two latents.
    Latent {
        #[arg(long)]
        spec: PathBuf,
        /// Start latent (NPY); sampled from --seed when omitted.
        #[arg(long)]
        z0: Option<PathBuf>,
        /// End latent (NPY); sampled from --seed when omitted.
        #[arg(long)]
        z1: Option<PathBuf>,
        /// Fixed text embedding JSON; zeros when omitted.
        #[arg(long)]
        embedding: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value = "perceptual-fixed")]
        metric: String,
        /// Distance table CSV for --metric external-precomputed.
        #[arg(long)]
        distances: Option<PathBuf>,
    },
    /// Linear interpolation between two text embeddings at a fixed latent.
    Text {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        z: Option<PathBuf>,
        #[arg(long)]
        t0: PathBuf,
        #[arg(long)]
        t1: PathBuf,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value = "perceptual-fixed")]
        metric: String,
        #[arg(long)]
        distances: Option<PathBuf>,
    },
    /// Triangular (barycentric) interpolation over three text embeddings.
    Triangular {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        z: Option<PathBuf>,
        #[arg(long)]
        t0: PathBuf,
        #[arg(long)]
        t1: PathBuf,
        #[arg(long)]
        t2: PathBuf,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value = "perceptual-fixed")]
        metric: String,
        #[arg(long)]
        distances: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GateAction {
    /// Stratified train/test split of a manifest.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        /// Training fraction in (0, 1].
        #[arg(long, default_value_t = 0.8)]
        ratio: f64,
    },
    /// Train the linear SVM gate on a manifest.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Feature extractor: raw-pixels, pca-pixels, raw-latent,
        /// external-file.
        #[arg(long, default_value = "raw-pixels")]
        features: String,
        /// Dimensionality for pca-pixels.
        #[arg(long, default_value_t = latentkit::gate::PCA_PIXELS_DEFAULT_DIM)]
        target_dim: usize,
        /// Hinge-loss weight.
        #[arg(short = 'c', long, default_value_t = 1.0)]
        c: f64,
    },
    /// Evaluate a trained model on a manifest.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Rank manifest items by signed distance to the boundary.
    Rank {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Args)]
pub(crate) struct FlattenArgs {
    #[arg(long)]
    pub(crate) spec: PathBuf,
    /// Latent vector (NPY).
    #[arg(long)]
    pub(crate) z: PathBuf,
    /// Direction to refine (1-D NPY); required unless --removal.
    #[arg(long)]
    pub(crate) direction: Option<PathBuf>,
    /// Direction set (NPY matrix, columns) for --removal.
    #[arg(long)]
    pub(crate) directions: Option<PathBuf>,
    /// Run two-phase background removal instead of refinement.
    #[arg(long)]
    pub(crate) removal: bool,
    /// Text embedding JSON; zeros when omitted.
    #[arg(long)]
    pub(crate) embedding: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub(crate) steps: usize,
    /// Manipulation intensity of the optimized edit.
    #[arg(long, default_value_t = 3.0)]
    pub(crate) alpha: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub(crate) lr: f64,
    #[arg(long, default_value_t = 0.0)]
    pub(crate) beta1: f64,
    #[arg(long, default_value_t = 0.9)]
    pub(crate) beta2: f64,
    #[arg(long, default_value = "perceptual-fixed")]
    pub(crate) metric: String,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::NonConvergence { .. }
        | Error::RankDeficient { .. }
        | Error::TooManyComponents { .. }
        | Error::DegenerateDirection { .. }
        | Error::GradientFailure { .. }
        | Error::NotSymmetric { .. }
        | Error::NonFinite { .. } => 3,
        Error::SingleClass { .. } => 4,
        _ => 2,
    }
}

fn run(cli: Cli) -> latentkit::Result<()> {
    let ctx = commands::Ctx {
        seed: cli.seed,
        out: cli.out,
        quiet: cli.quiet,
    };
    std::fs::create_dir_all(&ctx.out)?;
    match cli.command {
        Command::Gen { action } => match action {
            GenAction::Spec {
                latent_dim,
                word_dim,
                sentence_dim,
                hidden_dim,
                height,
                width,
            } => commands::gen_spec(
                &ctx,
                latentkit::generator::GeneratorSpec {
                    latent_dim,
                    word_dim,
                    sentence_dim,
                    hidden_dim,
                    image_height: height,
                    image_width: width,
                    seed: ctx.seed,
                },
            ),
            GenAction::Image { spec, z, embedding } => {
                commands::gen_image(&ctx, &spec, z.as_deref(), embedding.as_deref())
            }
            GenAction::Weights { spec } => commands::gen_weights(&ctx, &spec),
        },
        Command::Directions { method } => match method {
            DirectionsMethod::Sefa {
                weights,
                k,
                normalize_rows,
            } => commands::directions_sefa(&ctx, &weights, k, normalize_rows),
            DirectionsMethod::Pca { weights, k } => commands::directions_pca(&ctx, &weights, k),
            DirectionsMethod::Ganspace { spec, k, samples } => {
                commands::directions_ganspace(&ctx, &spec, k, samples)
            }
            DirectionsMethod::Ica {
                weights,
                k,
                max_iter,
                tol,
                nonlinearity,
                ambient_orthonormalize,
            } => commands::directions_ica(
                &ctx,
                &weights,
                k,
                max_iter,
                tol,
                &nonlinearity,
                ambient_orthonormalize,
            ),
        },
        Command::Compare { first, second } => commands::compare(&ctx, &first, &second),
        Command::Interp { kind } => match kind {
            InterpKind::Latent {
                spec,
                z0,
                z1,
                embedding,
                steps,
                metric,
                distances,
            } => commands::interp_latent_cmd(
                &ctx,
                &spec,
                z0.as_deref(),
                z1.as_deref(),
                embedding.as_deref(),
                steps,
                &metric,
                distances.as_deref(),
            ),
            InterpKind::Text {
                spec,
                z,
                t0,
                t1,
                steps,
                metric,
                distances,
            } => commands::interp_text_cmd(
                &ctx,
                &spec,
                z.as_deref(),
                &t0,
                &t1,
                steps,
                &metric,
                distances.as_deref(),
            ),
            InterpKind::Triangular {
                spec,
                z,
                t0,
                t1,
                t2,
                steps,
                metric,
                distances,
            } => commands::interp_triangular_cmd(
                &ctx,
                &spec,
                z.as_deref(),
                &t0,
                &t1,
                &t2,
                steps,
                &metric,
                distances.as_deref(),
            ),
        },
        Command::Gate { action } => match action {
            GateAction::Split { manifest, ratio } => commands::gate_split(&ctx, &manifest, ratio),
            GateAction::Train {
                manifest,
                features,
                target_dim,
                c,
            } => commands::gate_train(&ctx, &manifest, &features, target_dim, c),
            GateAction::Eval { manifest, model } => commands::gate_eval(&ctx, &manifest, &model),
            GateAction::Rank { manifest, model } => commands::gate_rank(&ctx, &manifest, &model),
        },
        Command::Flatten(args) => commands::flatten_cmd(&ctx, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
