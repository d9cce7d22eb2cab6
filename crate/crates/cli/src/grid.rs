use std::path::{Path, PathBuf};

use gotstyle::io::{
    read_image, read_manifest, write_image, write_manifest, Manifest, ManifestLevel, PixelImage,
};
use gotstyle::pipeline::{
    feature_stats, multires_transfer, weight_grid, FeatureCodec, GridPoint, LevelReport,
    MixRequest, PixelCodec, StyleInput, TensorImage,
};
use gotstyle::GaussianStats;
use rayon::prelude::*;

use crate::args::{CodecKind, GridArgs};
use crate::run::{
    apply_map_args, map_kind, mean_spec, pixel_style, print_levels, tensor_codec, usage, CliError,
    CliResult,
};

const GAP: usize = 4;

pub fn run(args: GridArgs) -> CliResult<()> {
    let corners = args.corners as usize;
    if args.style.len() != corners {
        return Err(CliError::Usage(format!(
            "{} styles given for {corners} corners",
            args.style.len()
        )));
    }
    if args.mean.weights.is_some() {
        return Err(CliError::Usage(
            "grid weights come from the layout; drop --weights".into(),
        ));
    }
    let jobs = match args.jobs {
        Some(0) => return Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let points = usage(weight_grid(corners, args.resolution))?;
    let requests = points
        .iter()
        .map(|point| request(&args, point))
        .collect::<CliResult<Vec<_>>>()?;
    let (shrink, rel_trunc) = (args.map.shrink, args.map.rel_trunc);
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} worker threads: {e}")))?;

    let reports = match args.codec.codec {
        CodecKind::Pixel => {
            if args.codec.hook.is_some() {
                return Err(CliError::Usage("--hook needs the tensor codec".into()));
            }
            let content = read_image(&args.content)?;
            let styles = args
                .style
                .iter()
                .map(|p| bank(&PixelCodec, pixel_style(p)?, shrink, rel_trunc))
                .collect::<CliResult<Vec<_>>>()?;
            let cells: Vec<(PixelImage, Vec<LevelReport>)> = pool.install(|| {
                requests
                    .par_iter()
                    .map(|req| {
                        let out = multires_transfer(&content, &styles, &PixelCodec, req)?;
                        Ok((out.image, out.levels))
                    })
                    .collect::<CliResult<Vec<_>>>()
            })?;
            for (point, (image, _)) in points.iter().zip(&cells) {
                write_image(args.out_dir.join(cell_name(point) + ".png"), image)?;
            }
            let images: Vec<&PixelImage> = cells.iter().map(|(image, _)| image).collect();
            let sheet_path = args.out_dir.join("contact_sheet.png");
            write_image(
                &sheet_path,
                &contact_sheet(&points, &images, corners, args.resolution)?,
            )?;
            println!("contact_sheet={}", sheet_path.display());
            cells
                .into_iter()
                .map(|(_, levels)| levels)
                .collect::<Vec<_>>()
        }
        CodecKind::Tensor => {
            let content = TensorImage {
                manifest: read_manifest(&args.content)?,
            };
            let styles = args
                .style
                .iter()
                .map(|p| {
                    let style = StyleInput::Image(TensorImage {
                        manifest: read_manifest(p)?,
                    });
                    bank(
                        &tensor_codec(content.manifest.clone(), &args.codec),
                        style,
                        shrink,
                        rel_trunc,
                    )
                })
                .collect::<CliResult<Vec<_>>>()?;
            let targets = points
                .iter()
                .map(|point| cell_manifest(&content.manifest, &args.out_dir.join(cell_name(point))))
                .collect::<CliResult<Vec<_>>>()?;
            pool.install(|| {
                requests
                    .par_iter()
                    .zip(targets)
                    .map(|(req, target)| {
                        let codec = tensor_codec(target, &args.codec);
                        Ok(multires_transfer(&content, &styles, &codec, req)?.levels)
                    })
                    .collect::<CliResult<Vec<_>>>()
            })?
        }
    };
    println!("cells={}", points.len());
    for (point, levels) in points.iter().zip(&reports) {
        print_levels(&format!("{}.", cell_name(point)), levels);
    }
    Ok(())
}

fn request(args: &GridArgs, point: &GridPoint) -> CliResult<MixRequest> {
    let mut spec = mean_spec(&args.mean, point.weights.len(), args.map.rel_trunc)?;
    spec.weights = point.weights.clone();
    let mut req = usage(MixRequest::new(spec.metric, spec.weights.clone()))?
        .with_kind(map_kind(args.map.map))
        .with_t(args.map.t);
    req.mean = spec;
    apply_map_args(&mut req, &args.map, &args.codec)?;
    Ok(req)
}

pub fn cell_name(point: &GridPoint) -> String {
    format!("cell_r{}_c{}", point.row, point.col)
}

/// Encodes a style once at every level so the cells share its statistics.
fn bank<C: FeatureCodec>(
    codec: &C,
    style: StyleInput<C::Image>,
    shrink: f64,
    rel_trunc: f64,
) -> CliResult<StyleInput<C::Image>> {
    match style {
        StyleInput::Image(image) => {
            let stats = (1..=codec.levels())
                .map(|level| {
                    feature_stats(&codec.encode(&image, level)?.samples, shrink, rel_trunc)
                })
                .collect::<gotstyle::Result<Vec<GaussianStats>>>()?;
            Ok(StyleInput::Stats(stats))
        }
        stats => Ok(stats),
    }
}

/// Private copy of the content's tensors for one cell, so cells never share
/// the files the codec and hook write.
fn cell_manifest(content: &Manifest, dir: &Path) -> CliResult<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut levels = Vec::with_capacity(content.levels());
    for r in 1..=content.levels() {
        let source = content.level(r)?;
        let input: PathBuf = dir.join(format!("level{r}_in.gotf"));
        std::fs::copy(&source.input, &input).map_err(|e| CliError::io(&source.input, e))?;
        levels.push(ManifestLevel {
            input,
            output: dir.join(format!("level{r}_out.gotf")),
            shape: source.shape,
        });
    }
    let manifest = Manifest::new(levels)?;
    write_manifest(dir.join("manifest.toml"), &manifest)?;
    Ok(manifest)
}

/// Tiles the cells on a white canvas: one row for 2 corners, a centered
/// triangle for 3, a square for 4.
pub fn contact_sheet(
    points: &[GridPoint],
    images: &[&PixelImage],
    corners: usize,
    resolution: usize,
) -> CliResult<PixelImage> {
    let (w, h) = (images[0].width(), images[0].height());
    if images.iter().any(|im| im.width() != w || im.height() != h) {
        return Err(CliError::Data(gotstyle::Error::ShapeMismatch(
            "grid cells differ in size".into(),
        )));
    }
    let rows = if corners == 2 { 1 } else { resolution };
    let width = resolution * (w + GAP) + GAP;
    let height = rows * (h + GAP) + GAP;
    let mut data = vec![1.0; 3 * width * height];
    for (point, image) in points.iter().zip(images) {
        let indent = if corners == 3 {
            (resolution - 1 - point.row) * (w + GAP) / 2
        } else {
            0
        };
        let x0 = GAP + indent + point.col * (w + GAP);
        let y0 = GAP + point.row * (h + GAP);
        for y in 0..h {
            for x in 0..w {
                let at = 3 * ((y0 + y) * width + x0 + x);
                data[at..at + 3].copy_from_slice(&image.pixel(x, y));
            }
        }
    }
    Ok(PixelImage::new(width, height, data)?)
}
