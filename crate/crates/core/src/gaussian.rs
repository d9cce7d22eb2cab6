//! Gaussian summaries of feature clouds and the closed-form transport between them.
//!
//! For `N(μ₁, Σ₁)` and `N(μ₂, Σ₂)`:
//!
//! ```text
//! W₂² = ‖μ₁ − μ₂‖² + d²_B(Σ₁, Σ₂)
//! T(x) = μ₂ + A (x − μ₁),   A = Σ₁^{-1/2} (Σ₁^{1/2} Σ₂ Σ₁^{1/2})^{1/2} Σ₁^{-1/2}
//! ```
//!
//! WCT (`Σ₂^{1/2} Σ₁^{-1/2}`) and AdaIN (per-channel standard deviation ratio)
//! coincide with `A` for commuting and diagonal covariances respectively.
//! The McCann interpolate `((1 − t) Id + t T)#` traces the W₂ geodesic.

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{self, bures_distance_sq, inv_sqrtm, sqrtm, SpdMatrix, DEFAULT_REL_TRUNC};

/// `n × m` feature samples, one row per spatial location or pixel.
#[derive(Debug, Clone)]
pub struct SampleMatrix {
    data: Mat<f64>,
}

impl SampleMatrix {
    pub fn new(data: Mat<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::EmptySamples);
        }
        for j in 0..data.ncols() {
            for i in 0..data.nrows() {
                if !data[(i, j)].is_finite() {
                    return Err(Error::NonFinite);
                }
            }
        }
        Ok(Self { data })
    }

    /// Builds from `n * m` values in row-major order.
    pub fn from_row_major(n: usize, m: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * m {
            return Err(Error::DimensionMismatch {
                expected: n * m,
                found: values.len(),
            });
        }
        Self::new(Mat::from_fn(n, m, |i, j| values[i * m + j]))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: bad.len(),
            });
        }
        Self::new(Mat::from_fn(rows.len(), m, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn m(&self) -> usize {
        self.data.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[(row, col)]
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        (0..self.m()).map(|c| self.data[(row, c)]).collect()
    }

    pub fn as_mat(&self) -> MatRef<'_, f64> {
        self.data.as_ref()
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n() * self.m());
        for i in 0..self.n() {
            for j in 0..self.m() {
                out.push(self.data[(i, j)]);
            }
        }
        out
    }
}

/// Mean and covariance of a feature distribution.
#[derive(Debug, Clone)]
pub struct GaussianStats {
    pub mean: Vec<f64>,
    pub cov: SpdMatrix,
    /// Number of samples the statistics were estimated from; 0 when synthetic.
    pub n_samples: u64,
}

impl GaussianStats {
    pub fn new(mean: Vec<f64>, cov: SpdMatrix, n_samples: u64) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                expected: cov.dim(),
                found: mean.len(),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            mean,
            cov,
            n_samples,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapKind {
    Ot,
    Wct,
    AdaIn,
    Identity,
}

#[derive(Debug, Clone)]
pub enum LinearPart {
    Dense(Mat<f64>),
    Diagonal(Vec<f64>),
}

/// Affine map `x ↦ dst_mean + linear · (x − src_mean)`.
#[derive(Debug, Clone)]
pub struct TransportMap {
    pub kind: MapKind,
    pub src_mean: Vec<f64>,
    pub linear: LinearPart,
    pub dst_mean: Vec<f64>,
}

impl TransportMap {
    /// Identity map on `R^dim`.
    pub fn identity(dim: usize) -> Self {
        Self {
            kind: MapKind::Identity,
            src_mean: vec![0.0; dim],
            linear: LinearPart::Diagonal(vec![1.0; dim]),
            dst_mean: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.src_mean.len()
    }

    /// Linear part as a dense matrix.
    pub fn linear_dense(&self) -> Mat<f64> {
        match &self.linear {
            LinearPart::Dense(a) => a.clone(),
            LinearPart::Diagonal(d) => {
                let m = d.len();
                Mat::from_fn(m, m, |i, j| if i == j { d[i] } else { 0.0 })
            }
        }
    }

    pub fn apply_point(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.src_mean).map(|(a, b)| a - b).collect();
        match &self.linear {
            LinearPart::Dense(a) => (0..self.dim())
                .map(|i| {
                    self.dst_mean[i]
                        + (0..self.dim())
                            .map(|k| a[(i, k)] * centered[k])
                            .sum::<f64>()
                })
                .collect(),
            LinearPart::Diagonal(d) => (0..self.dim())
                .map(|i| self.dst_mean[i] + d[i] * centered[i])
                .collect(),
        }
    }
}

/// Column means and the `1/n` covariance, plus `shrink · (tr/m) · I`.
pub fn estimate_stats(x: &SampleMatrix, shrink: f64) -> Result<GaussianStats> {
    if !(shrink >= 0.0 && shrink.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "shrink",
            value: shrink,
            reason: "must be finite and nonnegative",
        });
    }
    let (n, m) = (x.n(), x.m());
    let data = x.as_mat();
    let mean: Vec<f64> = (0..m)
        .map(|c| (0..n).map(|r| data[(r, c)]).sum::<f64>() / n as f64)
        .collect();
    let centered = Mat::from_fn(n, m, |r, c| data[(r, c)] - mean[c]);
    let mut cov = centered.transpose() * &centered;
    let inv_n = 1.0 / n as f64;
    for j in 0..m {
        for i in 0..m {
            cov[(i, j)] *= inv_n;
        }
    }
    if shrink > 0.0 {
        let ridge = shrink * (0..m).map(|i| cov[(i, i)]).sum::<f64>() / m as f64;
        for i in 0..m {
            cov[(i, i)] += ridge;
        }
    }
    GaussianStats::new(mean, SpdMatrix::new(cov)?, n as u64)
}

/// Closed-form squared 2-Wasserstein distance between two Gaussians.
pub fn w2_gaussian_sq(g1: &GaussianStats, g2: &GaussianStats) -> Result<f64> {
    check_dims(g1.dim(), g2.dim())?;
    let mean_part: f64 = g1
        .mean
        .iter()
        .zip(&g2.mean)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(mean_part + bures_distance_sq(&g1.cov, &g2.cov)?)
}

/// Optimal (Monge) map between two Gaussians, with pseudo-inverse square roots
/// for rank-deficient sources.
pub fn monge_map(src: &GaussianStats, dst: &GaussianStats, rel_trunc: f64) -> Result<TransportMap> {
    check_dims(src.dim(), dst.dim())?;
    let linear = monge_linear(&src.cov, &dst.cov, rel_trunc)?;
    Ok(TransportMap {
        kind: MapKind::Ot,
        src_mean: src.mean.clone(),
        linear: LinearPart::Dense(linear),
        dst_mean: dst.mean.clone(),
    })
}

/// `Σ_src^{-1/2} (Σ_src^{1/2} Σ_dst Σ_src^{1/2})^{1/2} Σ_src^{-1/2}`.
pub(crate) fn monge_linear(src: &SpdMatrix, dst: &SpdMatrix, rel_trunc: f64) -> Result<Mat<f64>> {
    let root = sqrtm(src)?;
    let inv_root = inv_sqrtm(src, rel_trunc)?;
    let middle = SpdMatrix::from_psd(linalg::congruence(root.as_mat(), dst.as_mat()));
    let middle_root = sqrtm(&middle)?;
    Ok(linalg::congruence(inv_root.as_mat(), middle_root.as_mat()))
}

/// Whitening-coloring transform `Σ_dst^{1/2} Σ_src^{-1/2}`.
pub fn wct_map(src: &GaussianStats, dst: &GaussianStats, rel_trunc: f64) -> Result<TransportMap> {
    check_dims(src.dim(), dst.dim())?;
    let whiten = inv_sqrtm(&src.cov, rel_trunc)?;
    let color = sqrtm(&dst.cov)?;
    Ok(TransportMap {
        kind: MapKind::Wct,
        src_mean: src.mean.clone(),
        linear: LinearPart::Dense(color.as_mat() * whiten.as_mat()),
        dst_mean: dst.mean.clone(),
    })
}

/// Per-channel standard deviation ratio. Zero-variance source channels get gain 0.
pub fn adain_map(src: &GaussianStats, dst: &GaussianStats) -> Result<TransportMap> {
    check_dims(src.dim(), dst.dim())?;
    let gains = src
        .cov
        .diagonal()
        .into_iter()
        .zip(dst.cov.diagonal())
        .map(|(s, d)| if s > 0.0 { d.sqrt() / s.sqrt() } else { 0.0 })
        .collect();
    Ok(TransportMap {
        kind: MapKind::AdaIn,
        src_mean: src.mean.clone(),
        linear: LinearPart::Diagonal(gains),
        dst_mean: dst.mean.clone(),
    })
}

/// Builds the map of the requested kind.
pub fn build_map(
    kind: MapKind,
    src: &GaussianStats,
    dst: &GaussianStats,
    rel_trunc: f64,
) -> Result<TransportMap> {
    match kind {
        MapKind::Ot => monge_map(src, dst, rel_trunc),
        MapKind::Wct => wct_map(src, dst, rel_trunc),
        MapKind::AdaIn => adain_map(src, dst),
        MapKind::Identity => {
            check_dims(src.dim(), dst.dim())?;
            Ok(TransportMap::identity(src.dim()))
        }
    }
}

/// Row-wise pushforward `x_j ↦ dst_mean + linear · (x_j − src_mean)`.
pub fn apply_map(map: &TransportMap, x: &SampleMatrix) -> Result<SampleMatrix> {
    check_dims(map.dim(), x.m())?;
    let (n, m) = (x.n(), x.m());
    let data = x.as_mat();
    let centered = Mat::from_fn(n, m, |r, c| data[(r, c)] - map.src_mean[c]);
    let mut out = match &map.linear {
        LinearPart::Dense(a) => &centered * a.transpose(),
        LinearPart::Diagonal(d) => Mat::from_fn(n, m, |r, c| centered[(r, c)] * d[c]),
    };
    for c in 0..m {
        for r in 0..n {
            out[(r, c)] += map.dst_mean[c];
        }
    }
    SampleMatrix::new(out)
}

/// Samples of the McCann interpolate: `(1 − t) x_j + t T(x_j)`.
pub fn mccann_pushforward(x: &SampleMatrix, map: &TransportMap, t: f64) -> Result<SampleMatrix> {
    check_t(t)?;
    check_dims(map.dim(), x.m())?;
    if t == 0.0 {
        return Ok(x.clone());
    }
    let mapped = apply_map(map, x)?;
    if t == 1.0 {
        return Ok(mapped);
    }
    let (src, dst) = (x.as_mat(), mapped.as_mat());
    SampleMatrix::new(Mat::from_fn(x.n(), x.m(), |r, c| {
        (1.0 - t) * src[(r, c)] + t * dst[(r, c)]
    }))
}

/// Closed form of the interpolate: mean `(1 − t)μ_c + tμ_s`, covariance
/// `B Σ_c B` with `B = (1 − t) I + t A`.
pub fn mccann_stats(g_c: &GaussianStats, g_s: &GaussianStats, t: f64) -> Result<GaussianStats> {
    check_t(t)?;
    check_dims(g_c.dim(), g_s.dim())?;
    if t == 0.0 {
        return Ok(g_c.clone());
    }
    let m = g_c.dim();
    let a = monge_linear(&g_c.cov, &g_s.cov, DEFAULT_REL_TRUNC)?;
    let b = Mat::from_fn(m, m, |i, j| {
        t * a[(i, j)] + if i == j { 1.0 - t } else { 0.0 }
    });
    let cov = SpdMatrix::from_psd(linalg::congruence(b.as_ref(), g_c.cov.as_mat()));
    let mean = g_c
        .mean
        .iter()
        .zip(&g_s.mean)
        .map(|(c, s)| (1.0 - t) * c + t * s)
        .collect();
    GaussianStats::new(mean, cov, 0)
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "t",
            value: t,
            reason: "must lie in [0, 1]",
        })
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
