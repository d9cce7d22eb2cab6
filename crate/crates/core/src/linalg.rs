//! Symmetric positive semi-definite matrices and the spectral matrix functions
//! built on them.
//!
//! Every matrix function goes through one symmetric eigendecomposition
//! `A = V diag(w) Vᵀ` and is evaluated as `V diag(f(w)) Vᵀ`. The decomposition
//! is cached inside [`SpdMatrix`], so chains such as `A^{1/2}` followed by
//! `A^{-1/2}` pay for a single `O(m³)` solve.
//!
//! The two covariance metrics used throughout the crate live here as well:
//!
//! ```text
//! d²_B(A, B)  = tr(A + B − 2 (A^{1/2} B A^{1/2})^{1/2})      (Bures)
//! d²_FR(A, B) = ‖log(A^{-1/2} B A^{-1/2})‖²_F                 (Fisher-Rao / affine-invariant)
//! ```

use std::sync::OnceLock;

use faer::linalg::matmul::triangular::{self, BlockStructure};
use faer::{Accum, Mat, MatMut, MatRef, Par, Side};

use crate::error::{Error, Result};

/// Default relative truncation for pseudo-inverse square roots.
pub const DEFAULT_REL_TRUNC: f64 = 1e-7;

/// Default relative eigenvalue floor for logarithms and Fisher-Rao distances.
pub const DEFAULT_REL_FLOOR: f64 = 1e-10;

/// Negative eigenvalues above `-NEG_EIG_BAND * lambda_max` are round-off.
const NEG_EIG_BAND: f64 = 1e-10;

/// Eigenvalues sorted descending with the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    values: Vec<f64>,
    vectors: Mat<f64>,
}

impl EigenDecomp {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> MatRef<'_, f64> {
        self.vectors.as_ref()
    }

    pub fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `V diag(w) Vᵀ`.
    pub fn reconstruct(&self) -> Mat<f64> {
        self.apply(|w| w)
    }

    /// `V diag(f(w)) Vᵀ`, symmetrized.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Mat<f64> {
        let mapped: Vec<f64> = self.values.iter().map(|&w| f(w)).collect();
        spectral_product(self.vectors.as_ref(), &mapped)
    }

    /// Decomposition of `V diag(f(w)) Vᵀ`, re-sorted descending.
    fn mapped(&self, f: impl Fn(f64) -> f64) -> EigenDecomp {
        let m = self.dim();
        let mapped: Vec<f64> = self.values.iter().map(|&w| f(w)).collect();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| mapped[b].total_cmp(&mapped[a]));
        EigenDecomp {
            values: order.iter().map(|&k| mapped[k]).collect(),
            vectors: Mat::from_fn(m, m, |i, j| self.vectors[(i, order[j])]),
        }
    }
}

/// Symmetric positive semi-definite matrix.
///
/// Construction symmetrizes the input and rejects eigenvalues below
/// `-1e-10 * lambda_max`; negative eigenvalues inside that band are clamped to
/// zero in the cached decomposition that every matrix function consumes.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    mat: Mat<f64>,
    eig: OnceLock<EigenDecomp>,
}

impl SpdMatrix {
    /// Validates and wraps a dense square matrix.
    pub fn new(mat: Mat<f64>) -> Result<Self> {
        check_square(mat.as_ref())?;
        if !all_finite(mat.as_ref()) {
            return Err(Error::NonFinite);
        }
        let mat = symmetrize(mat);
        let mut eig = decompose(mat.as_ref())?;
        let scale = eig.values.iter().fold(0.0f64, |acc, w| acc.max(w.abs()));
        let lowest = eig.min_value();
        if lowest < -NEG_EIG_BAND * scale || (scale == 0.0 && lowest < 0.0) {
            return Err(Error::Indefinite {
                min_eigenvalue: lowest,
                max_eigenvalue: eig.max_value(),
            });
        }
        for w in &mut eig.values {
            *w = w.max(0.0);
        }
        Ok(Self::with_eigen(mat, eig))
    }

    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(Mat::from_fn(dim, dim, |i, j| entries[i * dim + j]))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let m = diag.len();
        Self::new(Mat::from_fn(
            m,
            m,
            |i, j| if i == j { diag[i] } else { 0.0 },
        ))
    }

    pub fn identity(dim: usize) -> Self {
        let eig = EigenDecomp {
            values: vec![1.0; dim],
            vectors: Mat::identity(dim, dim),
        };
        Self::with_eigen(Mat::identity(dim, dim), eig)
    }

    /// Wraps a matrix that is PSD by construction (congruences, Gram products,
    /// nonnegative combinations). Only symmetrizes; the decomposition is
    /// computed lazily with round-off negatives clamped.
    pub(crate) fn from_psd(mat: Mat<f64>) -> Self {
        Self {
            mat: symmetrize(mat),
            eig: OnceLock::new(),
        }
    }

    fn with_eigen(mat: Mat<f64>, eig: EigenDecomp) -> Self {
        let cell = OnceLock::new();
        let _ = cell.set(eig);
        Self { mat, eig: cell }
    }

    fn from_spectrum(eig: EigenDecomp) -> Self {
        let mat = eig.reconstruct();
        Self::with_eigen(mat, eig)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_mat(&self) -> MatRef<'_, f64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> Mat<f64> {
        self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)]).collect()
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let m = self.dim();
        let mut out = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                out.push(self.mat[(i, j)]);
            }
        }
        out
    }

    /// Cached eigendecomposition (eigenvalues descending, clamped at zero).
    pub fn eigen(&self) -> Result<&EigenDecomp> {
        if let Some(eig) = self.eig.get() {
            return Ok(eig);
        }
        let mut eig = decompose(self.mat.as_ref())?;
        for w in &mut eig.values {
            *w = w.max(0.0);
        }
        let _ = self.eig.set(eig);
        Ok(self.eig.get().expect("eigendecomposition was just stored"))
    }

    /// `‖self − other‖_F / ‖other‖_F`, with the denominator floored at the
    /// smallest positive double.
    pub fn rel_frobenius_diff(&self, other: &SpdMatrix) -> f64 {
        rel_diff(self.as_mat(), other.as_mat())
    }

    /// True when the two matrices hold bit-identical entries.
    pub fn bitwise_eq(&self, other: &SpdMatrix) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|j| {
                (0..self.dim()).all(|i| self.mat[(i, j)].to_bits() == other.mat[(i, j)].to_bits())
            })
    }
}

/// Symmetric eigendecomposition, eigenvalues descending.
pub fn sym_eigen(a: &SpdMatrix) -> Result<EigenDecomp> {
    a.eigen().cloned()
}

/// Principal square root.
pub fn sqrtm(a: &SpdMatrix) -> Result<SpdMatrix> {
    let eig = a.eigen()?;
    Ok(SpdMatrix::from_spectrum(eig.mapped(f64::sqrt)))
}

/// Pseudo-inverse square root: eigenvalues below `rel_trunc * lambda_max` map
/// to zero, the rest to `w^{-1/2}`.
pub fn inv_sqrtm(a: &SpdMatrix, rel_trunc: f64) -> Result<SpdMatrix> {
    check_rel_trunc(rel_trunc)?;
    let eig = a.eigen()?;
    let cutoff = retained_cutoff(eig, rel_trunc)?;
    Ok(SpdMatrix::from_spectrum(eig.mapped(|w| {
        if w < cutoff || w <= 0.0 {
            0.0
        } else {
            1.0 / w.sqrt()
        }
    })))
}

/// Pseudo-inverse under the same truncation rule as [`inv_sqrtm`].
pub fn pinv(a: &SpdMatrix, rel_trunc: f64) -> Result<SpdMatrix> {
    check_rel_trunc(rel_trunc)?;
    let eig = a.eigen()?;
    let cutoff = retained_cutoff(eig, rel_trunc)?;
    Ok(SpdMatrix::from_spectrum(eig.mapped(|w| {
        if w < cutoff || w <= 0.0 {
            0.0
        } else {
            1.0 / w
        }
    })))
}

/// Matrix logarithm. Requires every eigenvalue to be at least
/// `rel_floor * lambda_max`.
pub fn logm(a: &SpdMatrix, rel_floor: f64) -> Result<Mat<f64>> {
    if !(rel_floor > 0.0 && rel_floor < 1.0) {
        return Err(Error::InvalidParameter {
            name: "rel_floor",
            value: rel_floor,
            reason: "must lie in (0, 1)",
        });
    }
    let eig = a.eigen()?;
    check_floor(eig, rel_floor)?;
    Ok(eig.apply(f64::ln))
}

/// Matrix exponential of a symmetric matrix. The input is symmetrized first.
pub fn expm(s: MatRef<'_, f64>) -> Result<SpdMatrix> {
    check_square(s)?;
    if !all_finite(s) {
        return Err(Error::NonFinite);
    }
    let sym = symmetrize(s.to_owned());
    let eig = decompose(sym.as_ref())?;
    let out = eig.mapped(f64::exp);
    if out.values.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(SpdMatrix::from_spectrum(out))
}

/// Squared Bures distance `tr(A + B − 2 (A^{1/2} B A^{1/2})^{1/2})`, clamped at zero.
pub fn bures_distance_sq(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_same_dim(a, b)?;
    if a.bitwise_eq(b) {
        return Ok(0.0);
    }
    let root = sqrtm(a)?;
    let cross = congruence(root.as_mat(), b.as_mat());
    let cross_root_trace: f64 = eigenvalues(cross.as_ref())?
        .iter()
        .map(|w| w.max(0.0).sqrt())
        .sum();
    Ok((a.trace() + b.trace() - 2.0 * cross_root_trace).max(0.0))
}

/// Squared affine-invariant (Fisher-Rao) distance `‖log(A^{-1/2} B A^{-1/2})‖²_F`.
///
/// Both inputs must be full rank relative to `rel_floor`.
pub fn fisher_rao_distance_sq(a: &SpdMatrix, b: &SpdMatrix, rel_floor: f64) -> Result<f64> {
    check_same_dim(a, b)?;
    if !(rel_floor > 0.0 && rel_floor < 1.0) {
        return Err(Error::InvalidParameter {
            name: "rel_floor",
            value: rel_floor,
            reason: "must lie in (0, 1)",
        });
    }
    check_floor(a.eigen()?, rel_floor)?;
    check_floor(b.eigen()?, rel_floor)?;
    if a.bitwise_eq(b) {
        return Ok(0.0);
    }
    let whitener = a.eigen()?.apply(|w| 1.0 / w.sqrt());
    let relative = congruence(whitener.as_ref(), b.as_mat());
    let values = eigenvalues(relative.as_ref())?;
    let mut total = 0.0;
    for w in values {
        if w <= 0.0 {
            return Err(Error::NearSingular {
                min_eigenvalue: w,
                floor: 0.0,
            });
        }
        total += w.ln().powi(2);
    }
    Ok(total)
}

/// Squared Frobenius distance `‖A − B‖²_F`.
pub fn frobenius_distance_sq(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_same_dim(a, b)?;
    let diff = a.as_mat() - b.as_mat();
    Ok(diff.norm_l2().powi(2))
}

/// `(X + Xᵀ) / 2`.
pub fn symmetrize(mut mat: Mat<f64>) -> Mat<f64> {
    let m = mat.nrows();
    for j in 0..m {
        for i in (j + 1)..m {
            let avg = 0.5 * (mat[(i, j)] + mat[(j, i)]);
            mat[(i, j)] = avg;
            mat[(j, i)] = avg;
        }
    }
    mat
}

/// `‖a − b‖_F / ‖b‖_F`.
pub fn rel_diff(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    let diff = (a - b).norm_l2();
    diff / b.norm_l2().max(f64::MIN_POSITIVE)
}

/// `S X S` for symmetric `S`, symmetrized.
pub(crate) fn congruence(s: MatRef<'_, f64>, x: MatRef<'_, f64>) -> Mat<f64> {
    let left = s * x;
    symmetrize(&left * s)
}

/// Lower triangle of `Lᵀ X L` for lower-triangular `L` and symmetric `X`.
pub(crate) fn lower_congruence(factor: MatRef<'_, f64>, x: MatRef<'_, f64>) -> Mat<f64> {
    let m = x.nrows();
    let mut left = Mat::<f64>::zeros(m, m);
    triangular::matmul(
        left.as_mut(),
        BlockStructure::Rectangular,
        Accum::Replace,
        factor.transpose(),
        BlockStructure::TriangularUpper,
        x,
        BlockStructure::Rectangular,
        1.0,
        Par::Seq,
    );
    let mut out = Mat::<f64>::zeros(m, m);
    triangular::matmul(
        out.as_mut(),
        BlockStructure::TriangularLower,
        Accum::Replace,
        left.as_ref(),
        BlockStructure::Rectangular,
        factor,
        BlockStructure::TriangularLower,
        1.0,
        Par::Seq,
    );
    out
}

/// Adds `weight · X^{1/2}` to the lower triangle of `sum`, reading only the
/// lower triangle of the PSD matrix `x`. Round-off negative eigenvalues
/// count as zero.
pub(crate) fn add_weighted_sqrt(
    sum: MatMut<'_, f64>,
    x: MatRef<'_, f64>,
    weight: f64,
) -> Result<()> {
    let m = x.nrows();
    let evd = x
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::EigenNoConvergence {
            dim: m,
            condition_estimate: diagonal_condition(x),
        })?;
    let values = evd.S().column_vector();
    let mut scaled = evd.U().to_owned();
    for j in 0..m {
        let quarter = values[j].max(0.0).sqrt().sqrt();
        for v in scaled.col_mut(j).iter_mut() {
            *v *= quarter;
        }
    }
    triangular::matmul(
        sum,
        BlockStructure::TriangularLower,
        Accum::Add,
        scaled.as_ref(),
        BlockStructure::Rectangular,
        scaled.transpose(),
        BlockStructure::Rectangular,
        weight,
        Par::Seq,
    );
    Ok(())
}

/// Copies the lower triangle onto the upper one.
pub(crate) fn mirror_lower(mut mat: Mat<f64>) -> Mat<f64> {
    let m = mat.nrows();
    for j in 0..m {
        for i in (j + 1)..m {
            mat[(j, i)] = mat[(i, j)];
        }
    }
    mat
}

/// Symmetric eigendecomposition of a raw symmetric matrix (lower triangle read).
pub(crate) fn decompose(mat: MatRef<'_, f64>) -> Result<EigenDecomp> {
    let m = mat.nrows();
    if m == 0 {
        return Ok(EigenDecomp {
            values: Vec::new(),
            vectors: Mat::zeros(0, 0),
        });
    }
    let evd = mat
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::EigenNoConvergence {
            dim: m,
            condition_estimate: diagonal_condition(mat),
        })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    // faer sorts ascending.
    Ok(EigenDecomp {
        values: (0..m).map(|k| s[m - 1 - k]).collect(),
        vectors: Mat::from_fn(m, m, |i, j| u[(i, m - 1 - j)]),
    })
}

pub(crate) fn eigenvalues(mat: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let m = mat.nrows();
    mat.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::EigenNoConvergence {
            dim: m,
            condition_estimate: diagonal_condition(mat),
        })
}

pub(crate) fn check_rel_trunc(rel_trunc: f64) -> Result<()> {
    if (0.0..1.0).contains(&rel_trunc) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "rel_trunc",
            value: rel_trunc,
            reason: "must lie in [0, 1)",
        })
    }
}

fn retained_cutoff(eig: &EigenDecomp, rel_trunc: f64) -> Result<f64> {
    let top = eig.max_value();
    if !(top > 0.0) || !top.is_finite() {
        return Err(Error::ZeroRank);
    }
    Ok(rel_trunc * top)
}

fn check_floor(eig: &EigenDecomp, rel_floor: f64) -> Result<()> {
    let floor = rel_floor * eig.max_value();
    let lowest = eig.min_value();
    if !(eig.max_value() > 0.0) || lowest < floor {
        return Err(Error::NearSingular {
            min_eigenvalue: lowest,
            floor,
        });
    }
    Ok(())
}

fn check_square(mat: MatRef<'_, f64>) -> Result<()> {
    if mat.nrows() != mat.ncols() {
        return Err(Error::NotSquare {
            rows: mat.nrows(),
            cols: mat.ncols(),
        });
    }
    Ok(())
}

fn check_same_dim(a: &SpdMatrix, b: &SpdMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

fn all_finite(mat: MatRef<'_, f64>) -> bool {
    (0..mat.ncols()).all(|j| (0..mat.nrows()).all(|i| mat[(i, j)].is_finite()))
}

fn spectral_product(vectors: MatRef<'_, f64>, values: &[f64]) -> Mat<f64> {
    let m = values.len();
    let scaled = Mat::from_fn(m, m, |i, j| vectors[(i, j)] * values[j]);
    symmetrize(&scaled * vectors.transpose())
}

// Crude diagnostic only: ratio of extreme diagonal magnitudes.
fn diagonal_condition(mat: MatRef<'_, f64>) -> f64 {
    let diag: Vec<f64> = (0..mat.nrows()).map(|i| mat[(i, i)].abs()).collect();
    let hi = diag.iter().cloned().fold(0.0, f64::max);
    let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}
