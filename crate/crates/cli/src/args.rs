use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "gotstyle",
    version,
    about = "Gaussian optimal transport style transfer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate mean and covariance of an image or of one tensor level.
    Stats(StatsArgs),
    /// Distance between two statistics files.
    Distance(DistanceArgs),
    /// Transfer one style onto a content input.
    Transfer(TransferArgs),
    /// Mean of several statistics files.
    Barycenter(BarycenterArgs),
    /// Transfer a weighted mix of styles onto a content input.
    Mix(MixArgs),
    /// Interpolation grid between 2, 3 or 4 styles.
    Grid(GridArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CodecKind {
    /// PNG images, one level of RGB pixels.
    Pixel,
    /// Tensor manifests written by an external feature extractor.
    Tensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    CoarseToFine,
    FineToCoarse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapArg {
    Ot,
    Wct,
    Adain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeanArg {
    Wasserstein,
    Fisherrao,
    Arithmetic,
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceMetric {
    W2,
    Bures,
    FisherRao,
    Frobenius,
}

#[derive(Debug, Args)]
pub struct CodecArgs {
    #[arg(long, value_enum, default_value_t = CodecKind::Pixel)]
    pub codec: CodecKind,
    /// Shell command run after each tensor level is written; `{level}` and
    /// `{output}` are substituted.
    #[arg(long)]
    pub hook: Option<String>,
    #[arg(long, value_enum, default_value_t = DirectionArg::CoarseToFine)]
    pub direction: DirectionArg,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(long = "map", value_enum, default_value_t = MapArg::Ot)]
    pub map: MapArg,
    /// Position along the content-to-style geodesic, in [0, 1].
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub t: f64,
    /// Covariance shrinkage relative to trace / dim, applied only to numerically singular estimates.
    #[arg(long, default_value_t = gotstyle::pipeline::DEFAULT_SHRINK)]
    pub shrink: f64,
    #[arg(long, default_value_t = gotstyle::linalg::DEFAULT_REL_TRUNC)]
    pub rel_trunc: f64,
}

#[derive(Debug, Args)]
pub struct MeanArgs {
    #[arg(long = "mean", value_enum, default_value_t = MeanArg::Wasserstein)]
    pub mean: MeanArg,
    /// Comma-separated weights summing to one; uniform when omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub weights: Option<Vec<f64>>,
    #[arg(long, default_value_t = gotstyle::FrechetSpec::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Step size of the Fisher-Rao gradient descent.
    #[arg(long, default_value_t = gotstyle::FrechetSpec::DEFAULT_STEP)]
    pub step: f64,
    #[arg(long, default_value_t = gotstyle::FrechetSpec::DEFAULT_REL_TOL)]
    pub rel_tol: f64,
    /// Halve the Fisher-Rao step until the objective decreases enough.
    #[arg(long)]
    pub backtracking: bool,
    /// Accept singular inputs to the harmonic mean.
    #[arg(long)]
    pub pseudo_inverse: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// PNG image, or tensor manifest with `--codec tensor`.
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub shrink: f64,
    #[arg(long, value_enum, default_value_t = CodecKind::Pixel)]
    pub codec: CodecKind,
    #[arg(long, default_value_t = 1)]
    pub level: usize,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    #[arg(long, value_enum, default_value_t = DistanceMetric::W2)]
    pub metric: DistanceMetric,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    #[arg(long)]
    pub content: PathBuf,
    /// Style image, statistics file, or tensor manifest.
    #[arg(long)]
    pub style: PathBuf,
    /// Output PNG, or target manifest with `--codec tensor`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Write the statistics of the transported features before clamping.
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
    #[command(flatten)]
    pub map: MapArgs,
    #[command(flatten)]
    pub codec: CodecArgs,
}

#[derive(Debug, Args)]
pub struct BarycenterArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub mean: MeanArgs,
    #[arg(long, default_value_t = gotstyle::linalg::DEFAULT_REL_TRUNC)]
    pub rel_trunc: f64,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    #[arg(long)]
    pub content: PathBuf,
    /// Repeat once per style.
    #[arg(long, required = true)]
    pub style: Vec<PathBuf>,
    /// Add the content as a final input to the mean; its weight comes last.
    #[arg(long)]
    pub with_content: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
    #[command(flatten)]
    pub map: MapArgs,
    #[command(flatten)]
    pub mean: MeanArgs,
    #[command(flatten)]
    pub codec: CodecArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub content: PathBuf,
    /// One per corner. Square order: top-left, top-right, bottom-left,
    /// bottom-right. Triangle order: apex, bottom-left, bottom-right.
    #[arg(long, required = true)]
    pub style: Vec<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=4))]
    pub corners: u8,
    #[arg(long, default_value_t = 5)]
    pub resolution: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Cells computed concurrently; defaults to the available cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub map: MapArgs,
    #[command(flatten)]
    pub mean: MeanArgs,
    #[command(flatten)]
    pub codec: CodecArgs,
}
