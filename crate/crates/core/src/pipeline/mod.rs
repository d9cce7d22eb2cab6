//! Stylization procedures built on the transport maps and covariance means:
//! single-style transfer with content/style interpolation, style mixing
//! through barycenters, and the multi-level encode/transport/decode loop.

mod codec;
mod grid;

pub use codec::{Decoded, Encoded, FeatureCodec, FileTensorCodec, PixelCodec, TensorImage};
pub use grid::{corner_index, weight_grid, GridPoint};

use crate::error::{Error, Result};
use crate::frechet::{barycenter_stats_report, FrechetSpec, MeanReport, Metric};
use crate::gaussian::{
    build_map, estimate_stats, mccann_pushforward, GaussianStats, MapKind, SampleMatrix,
};
use crate::linalg::DEFAULT_REL_TRUNC;

/// Shrinkage applied inside the pipeline to numerically singular covariances,
/// relative to `trace / m`. See [`feature_stats`].
pub const DEFAULT_SHRINK: f64 = 1e-5;

/// Order in which the levels of a multi-level codec are visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    CoarseToFine,
    FineToCoarse,
}

impl Direction {
    pub fn order(self, levels: usize) -> Vec<usize> {
        match self {
            Direction::CoarseToFine => (1..=levels).rev().collect(),
            Direction::FineToCoarse => (1..=levels).collect(),
        }
    }
}

/// Parameters of a style mix.
///
/// `mean.weights` has one entry per style, plus a final entry for the content
/// when `include_content` is set.
#[derive(Debug, Clone)]
pub struct MixRequest {
    pub mean: FrechetSpec,
    pub include_content: bool,
    pub kind: MapKind,
    /// Interpolation from content (0) to the mixed style (1).
    pub t: f64,
    pub direction: Direction,
    /// See [`feature_stats`].
    pub shrink: f64,
    pub rel_trunc: f64,
}

impl MixRequest {
    pub fn new(metric: Metric, weights: Vec<f64>) -> Result<Self> {
        Ok(Self {
            mean: FrechetSpec::new(metric, weights)?,
            include_content: false,
            kind: MapKind::Ot,
            t: 1.0,
            direction: Direction::CoarseToFine,
            shrink: DEFAULT_SHRINK,
            rel_trunc: DEFAULT_REL_TRUNC,
        })
    }

    /// Single style, transported all the way.
    pub fn single(kind: MapKind, t: f64) -> Result<Self> {
        let mut req = Self::new(Metric::Bures, vec![1.0])?;
        req.kind = kind;
        req.t = t;
        req.validate()?;
        Ok(req)
    }

    pub fn with_content(mut self, include: bool) -> Self {
        self.include_content = include;
        self
    }

    pub fn with_kind(mut self, kind: MapKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_shrink(mut self, shrink: f64) -> Self {
        self.shrink = shrink;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.mean.validate()?;
        if !(0.0..=1.0).contains(&self.t) {
            return Err(Error::InvalidParameter {
                name: "t",
                value: self.t,
                reason: "must lie in [0, 1]",
            });
        }
        if !(self.shrink >= 0.0 && self.shrink.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "shrink",
                value: self.shrink,
                reason: "must be nonnegative and finite",
            });
        }
        Ok(())
    }

    fn style_count(&self) -> usize {
        self.mean.weights.len() - self.include_content as usize
    }
}

/// Statistics of a feature cloud as the pipeline uses them. The covariance is
/// shrunk only when it is numerically singular, i.e. when its smallest
/// eigenvalue is at most `rel_trunc` times its largest. Full-rank estimates
/// stay exact, so transporting a cloud onto them matches them exactly.
pub fn feature_stats(x: &SampleMatrix, shrink: f64, rel_trunc: f64) -> Result<GaussianStats> {
    let raw = estimate_stats(x, 0.0)?;
    if shrink == 0.0 {
        return Ok(raw);
    }
    let eig = raw.cov.eigen()?;
    if eig.min_value() > rel_trunc * eig.max_value() {
        return Ok(raw);
    }
    estimate_stats(x, shrink)
}

/// Transport content samples toward `style` with a map of the given kind,
/// stopping at fraction `t` of the way. `shrink` regularizes the content
/// estimate; any nonzero value moves the output covariance off the target.
pub fn stylize(
    content: &SampleMatrix,
    style: &GaussianStats,
    kind: MapKind,
    t: f64,
    shrink: f64,
    rel_trunc: f64,
) -> Result<SampleMatrix> {
    if content.m() != style.dim() {
        return Err(Error::DimensionMismatch {
            expected: style.dim(),
            found: content.m(),
        });
    }
    let source = estimate_stats(content, shrink)?;
    let map = build_map(kind, &source, style, rel_trunc)?;
    mccann_pushforward(content, &map, t)
}

/// Transport content samples to the mixed style of `styles` under `req`.
pub fn mix_styles(
    content: &SampleMatrix,
    styles: &[GaussianStats],
    req: &MixRequest,
) -> Result<SampleMatrix> {
    mix_styles_report(content, styles, req).map(|(x, _)| x)
}

/// [`mix_styles`], also returning diagnostics of the covariance mean.
pub fn mix_styles_report(
    content: &SampleMatrix,
    styles: &[GaussianStats],
    req: &MixRequest,
) -> Result<(SampleMatrix, MeanReport)> {
    req.validate()?;
    if styles.is_empty() {
        return Err(Error::NoInputs);
    }
    if styles.len() != req.style_count() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} styles{}",
            req.mean.weights.len(),
            styles.len(),
            if req.include_content {
                " and the content"
            } else {
                ""
            }
        )));
    }
    let source = feature_stats(content, req.shrink, req.rel_trunc)?;
    let content_stats = req.include_content.then_some(&source);
    let (target, report) = barycenter_stats_report(styles, content_stats, &req.mean)?;
    let map = build_map(req.kind, &source, &target, req.rel_trunc)?;
    Ok((mccann_pushforward(content, &map, req.t)?, report))
}

/// A style given either as an image to encode at every level or as
/// precomputed statistics, one entry per level (index `r - 1` for level `r`).
#[derive(Debug, Clone)]
pub enum StyleInput<I> {
    Image(I),
    Stats(Vec<GaussianStats>),
}

/// Diagnostics for one level of [`multires_transfer`].
#[derive(Debug, Clone)]
pub struct LevelReport {
    pub level: usize,
    pub clamp_fraction: f64,
    pub mean_iterations: usize,
    pub mean_residual: f64,
}

#[derive(Debug, Clone)]
pub struct MultiresOutput<I> {
    pub image: I,
    /// Transported features of the last level, before decoding.
    pub features: SampleMatrix,
    pub shape: crate::io::FeatureShape,
    /// In visiting order.
    pub levels: Vec<LevelReport>,
}

/// Multi-level transfer. At each level, in the order set by `req.direction`:
/// encode the styles from their originals, mix them, encode the current
/// content image, transport its features to the mix, and decode. The decoded
/// image becomes the content for the next level.
pub fn multires_transfer<C: FeatureCodec>(
    content: &C::Image,
    styles: &[StyleInput<C::Image>],
    codec: &C,
    req: &MixRequest,
) -> Result<MultiresOutput<C::Image>> {
    req.validate()?;
    let levels = codec.levels();
    for style in styles {
        if let StyleInput::Stats(bank) = style {
            if bank.len() != levels {
                return Err(Error::CodecLevel {
                    level: bank.len(),
                    levels,
                });
            }
        }
    }
    let mut current = content.clone();
    let mut reports = Vec::with_capacity(levels);
    let mut last = None;
    for level in req.direction.order(levels) {
        let style_stats = styles
            .iter()
            .map(|style| match style {
                StyleInput::Image(image) => feature_stats(
                    &codec.encode(image, level)?.samples,
                    req.shrink,
                    req.rel_trunc,
                ),
                StyleInput::Stats(bank) => Ok(bank[level - 1].clone()),
            })
            .collect::<Result<Vec<_>>>()?;
        let encoded = codec.encode(&current, level)?;
        let (features, report) = mix_styles_report(&encoded.samples, &style_stats, req)?;
        let decoded = codec.decode(&features, encoded.shape, level)?;
        reports.push(LevelReport {
            level,
            clamp_fraction: decoded.clamp_fraction,
            mean_iterations: report.iterations_used,
            mean_residual: report.final_residual,
        });
        current = decoded.image;
        last = Some((features, encoded.shape));
    }
    let (features, shape) = last.expect("codecs have at least one level");
    Ok(MultiresOutput {
        image: current,
        features,
        shape,
        levels: reports,
    })
}
