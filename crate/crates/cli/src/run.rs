use std::path::{Path, PathBuf};

use gotstyle::frechet::barycenter_stats_report;
use gotstyle::gaussian::estimate_stats;
use gotstyle::io::{
    read_image, read_manifest, read_stats, write_image, write_stats, PixelImage, STATS_MAGIC,
};
use gotstyle::linalg::{
    bures_distance_sq, fisher_rao_distance_sq, frobenius_distance_sq, DEFAULT_REL_FLOOR,
};
use gotstyle::pipeline::{
    multires_transfer, Direction, FeatureCodec, FileTensorCodec, LevelReport, MixRequest,
    MultiresOutput, PixelCodec, StyleInput, TensorImage,
};
use gotstyle::{FrechetSpec, GaussianStats, MapKind, Metric};
use thiserror::Error;

use crate::args::{
    BarycenterArgs, CodecArgs, CodecKind, Command, DirectionArg, DistanceArgs, DistanceMetric,
    MapArg, MapArgs, MeanArg, MeanArgs, MixArgs, StatsArgs, TransferArgs,
};
use crate::grid;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] gotstyle::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io { .. } => 2,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Library validation failures raised before any file is read count as usage errors.
pub(crate) fn usage<T>(result: gotstyle::Result<T>) -> CliResult<T> {
    result.map_err(|e| CliError::Usage(e.to_string()))
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Stats(args) => stats(args),
        Command::Distance(args) => distance(args),
        Command::Transfer(args) => transfer(args),
        Command::Barycenter(args) => barycenter(args),
        Command::Mix(args) => mix(args),
        Command::Grid(args) => grid::run(args),
    }
}

fn stats(args: StatsArgs) -> CliResult<()> {
    if !(args.shrink >= 0.0 && args.shrink.is_finite()) {
        return Err(CliError::Usage(format!(
            "--shrink {} must be nonnegative",
            args.shrink
        )));
    }
    let samples = match args.codec {
        CodecKind::Pixel => read_image(&args.input)?.to_samples(),
        CodecKind::Tensor => {
            let manifest = read_manifest(&args.input)?;
            let codec = FileTensorCodec::new(manifest.clone());
            codec.encode(&TensorImage { manifest }, args.level)?.samples
        }
    };
    let stats = estimate_stats(&samples, args.shrink)?;
    write_stats(&args.output, &stats)?;
    println!("n_samples={}", stats.n_samples);
    println!("dim={}", stats.dim());
    println!("trace={:?}", stats.cov.trace());
    Ok(())
}

fn distance(args: DistanceArgs) -> CliResult<()> {
    let a = read_stats(&args.first)?;
    let b = read_stats(&args.second)?;
    let (key, value) = match args.metric {
        DistanceMetric::W2 => ("w2_sq", gotstyle::gaussian::w2_gaussian_sq(&a, &b)?),
        DistanceMetric::Bures => ("bures_sq", bures_distance_sq(&a.cov, &b.cov)?),
        DistanceMetric::FisherRao => (
            "fisher_rao_sq",
            fisher_rao_distance_sq(&a.cov, &b.cov, DEFAULT_REL_FLOOR)?,
        ),
        DistanceMetric::Frobenius => ("frobenius_sq", frobenius_distance_sq(&a.cov, &b.cov)?),
    };
    println!("{key}={value:?}");
    Ok(())
}

fn barycenter(args: BarycenterArgs) -> CliResult<()> {
    let spec = mean_spec(&args.mean, args.inputs.len(), args.rel_trunc)?;
    let inputs = args
        .inputs
        .iter()
        .map(read_stats)
        .collect::<gotstyle::Result<Vec<GaussianStats>>>()?;
    let (mixed, report) = barycenter_stats_report(&inputs, None, &spec)?;
    write_stats(&args.output, &mixed)?;
    println!("iterations={}", report.iterations_used);
    println!("residual={:?}", report.final_residual);
    Ok(())
}

fn transfer(args: TransferArgs) -> CliResult<()> {
    let mut req = usage(MixRequest::single(map_kind(args.map.map), args.map.t))?;
    apply_map_args(&mut req, &args.map, &args.codec)?;
    run_transfer(
        &args.content,
        &[args.style],
        args.output.as_deref(),
        args.stats_out.as_deref(),
        &args.codec,
        &req,
    )
}

fn mix(args: MixArgs) -> CliResult<()> {
    let count = args.style.len() + args.with_content as usize;
    let spec = mean_spec(&args.mean, count, args.map.rel_trunc)?;
    let mut req = usage(MixRequest::new(spec.metric, spec.weights.clone()))?
        .with_content(args.with_content)
        .with_kind(map_kind(args.map.map))
        .with_t(args.map.t);
    req.mean = spec;
    apply_map_args(&mut req, &args.map, &args.codec)?;
    run_transfer(
        &args.content,
        &args.style,
        args.output.as_deref(),
        args.stats_out.as_deref(),
        &args.codec,
        &req,
    )
}

fn run_transfer(
    content: &Path,
    styles: &[PathBuf],
    output: Option<&Path>,
    stats_out: Option<&Path>,
    codec_args: &CodecArgs,
    req: &MixRequest,
) -> CliResult<()> {
    match codec_args.codec {
        CodecKind::Pixel => {
            let output = output.ok_or_else(|| {
                CliError::Usage("--output is required with the pixel codec".into())
            })?;
            if codec_args.hook.is_some() {
                return Err(CliError::Usage("--hook needs the tensor codec".into()));
            }
            let content = read_image(content)?;
            let styles = styles
                .iter()
                .map(|p| pixel_style(p))
                .collect::<CliResult<Vec<_>>>()?;
            let out = multires_transfer(&content, &styles, &PixelCodec, req)?;
            write_image(output, &out.image)?;
            finish(&out, stats_out)
        }
        CodecKind::Tensor => {
            let content = TensorImage {
                manifest: read_manifest(content)?,
            };
            let target = match output {
                Some(path) => read_manifest(path)?,
                None => content.manifest.clone(),
            };
            let styles = styles
                .iter()
                .map(|p| {
                    Ok(StyleInput::Image(TensorImage {
                        manifest: read_manifest(p)?,
                    }))
                })
                .collect::<gotstyle::Result<Vec<_>>>()?;
            let out = multires_transfer(&content, &styles, &tensor_codec(target, codec_args), req)?;
            finish(&out, stats_out)
        }
    }
}

fn finish<I>(out: &MultiresOutput<I>, stats_out: Option<&Path>) -> CliResult<()> {
    if let Some(path) = stats_out {
        write_stats(path, &estimate_stats(&out.features, 0.0)?)?;
    }
    print_levels("", &out.levels);
    Ok(())
}

pub(crate) fn print_levels(prefix: &str, levels: &[LevelReport]) {
    for report in levels {
        let key = if levels.len() == 1 {
            prefix.to_string()
        } else {
            format!("{prefix}level{}.", report.level)
        };
        println!("{key}clamp_fraction={:?}", report.clamp_fraction);
        println!("{key}iterations={}", report.mean_iterations);
        println!("{key}residual={:?}", report.mean_residual);
    }
}

/// A pixel-codec style is either a PNG or a statistics file.
pub(crate) fn pixel_style(path: &Path) -> CliResult<StyleInput<PixelImage>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.starts_with(&STATS_MAGIC) {
        Ok(StyleInput::Stats(vec![gotstyle::io::decode_stats(&bytes)?]))
    } else {
        Ok(StyleInput::Image(read_image(path)?))
    }
}

pub(crate) fn tensor_codec(target: gotstyle::io::Manifest, args: &CodecArgs) -> FileTensorCodec {
    let codec = FileTensorCodec::new(target);
    match &args.hook {
        Some(hook) => codec.with_hook(hook.clone()),
        None => codec,
    }
}

pub(crate) fn map_kind(map: MapArg) -> MapKind {
    match map {
        MapArg::Ot => MapKind::Ot,
        MapArg::Wct => MapKind::Wct,
        MapArg::Adain => MapKind::AdaIn,
    }
}

pub(crate) fn apply_map_args(
    req: &mut MixRequest,
    map: &MapArgs,
    codec: &CodecArgs,
) -> CliResult<()> {
    req.shrink = map.shrink;
    req.rel_trunc = map.rel_trunc;
    req.mean.rel_trunc = map.rel_trunc;
    req.direction = match codec.direction {
        DirectionArg::CoarseToFine => Direction::CoarseToFine,
        DirectionArg::FineToCoarse => Direction::FineToCoarse,
    };
    usage(req.validate())
}

pub(crate) fn metric(mean: MeanArg) -> Metric {
    match mean {
        MeanArg::Wasserstein => Metric::Bures,
        MeanArg::Fisherrao => Metric::FisherRao,
        MeanArg::Arithmetic => Metric::Arithmetic,
        MeanArg::Harmonic => Metric::Harmonic,
    }
}

/// Mean parameters for `count` inputs. Explicit weights must sum to one within
/// 1e-6 and are then rescaled to sum to one exactly.
pub(crate) fn mean_spec(args: &MeanArgs, count: usize, rel_trunc: f64) -> CliResult<FrechetSpec> {
    let weights = match &args.weights {
        None => vec![1.0 / count as f64; count],
        Some(w) => normalized(w, count)?,
    };
    let spec = usage(FrechetSpec::new(metric(args.mean), weights))?
        .with_max_iter(args.max_iter)
        .with_step(args.step)
        .with_rel_tol(args.rel_tol)
        .with_rel_trunc(rel_trunc)
        .with_backtracking(args.backtracking)
        .with_pseudo_inverse(args.pseudo_inverse);
    usage(spec.validate())?;
    Ok(spec)
}

pub(crate) fn normalized(weights: &[f64], count: usize) -> CliResult<Vec<f64>> {
    if weights.len() != count {
        return Err(CliError::Usage(format!(
            "{} weights for {count} inputs",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(CliError::Usage(format!(
            "weight {w} is negative or non-finite"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(CliError::Usage(format!("weights sum to {total}, not 1")));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}
