//! Weighted Fréchet means of covariance matrices.
//!
//! | metric      | mean                           | method                      |
//! |-------------|--------------------------------|-----------------------------|
//! | Bures       | Wasserstein barycenter         | fixed-point iteration       |
//! | Fisher-Rao  | Karcher (geometric) mean       | Riemannian gradient steps   |
//! | Frobenius   | `Σ λ_j Σ_j`                    | closed form                 |
//! | Harmonic    | `(Σ λ_j Σ_j⁻¹)⁻¹`              | closed form                 |
//!
//! Iterative means start from the input with the largest weight (lowest index
//! on ties) and stop early once the iterate stops moving.

use faer::linalg::matmul::{self, triangular::BlockStructure};
use faer::linalg::triangular_solve;
use faer::{Accum, Mat, MatRef, Par, Side};

use crate::error::{Error, Result};
use crate::gaussian::GaussianStats;
use crate::linalg::{self, expm, pinv, SpdMatrix, DEFAULT_REL_TRUNC};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Bures,
    FisherRao,
    Arithmetic,
    Harmonic,
}

/// Metric, weights and iteration budget for a covariance mean.
#[derive(Debug, Clone)]
pub struct FrechetSpec {
    pub metric: Metric,
    pub weights: Vec<f64>,
    pub max_iter: usize,
    /// Step size for the Fisher-Rao gradient update.
    pub step: f64,
    pub rel_tol: f64,
    pub rel_trunc: f64,
    /// Halve the Fisher-Rao step whenever a step fails to decrease the
    /// objective enough; the reduced step carries over to later iterations.
    pub backtracking: bool,
    /// Let the harmonic mean fall back to pseudo-inverses on singular inputs.
    pub pseudo_inverse: bool,
}

impl FrechetSpec {
    pub const DEFAULT_MAX_ITER: usize = 50;
    pub const DEFAULT_STEP: f64 = 0.01;
    pub const DEFAULT_REL_TOL: f64 = 1e-9;

    pub fn new(metric: Metric, weights: Vec<f64>) -> Result<Self> {
        let spec = Self {
            metric,
            weights,
            max_iter: Self::DEFAULT_MAX_ITER,
            step: Self::DEFAULT_STEP,
            rel_tol: Self::DEFAULT_REL_TOL,
            rel_trunc: DEFAULT_REL_TRUNC,
            backtracking: false,
            pseudo_inverse: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Uniform weights over `count` inputs.
    pub fn uniform(metric: Metric, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::NoInputs);
        }
        Self::new(metric, vec![1.0 / count as f64; count])
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_rel_trunc(mut self, rel_trunc: f64) -> Self {
        self.rel_trunc = rel_trunc;
        self
    }

    pub fn with_backtracking(mut self, on: bool) -> Self {
        self.backtracking = on;
        self
    }

    pub fn with_pseudo_inverse(mut self, on: bool) -> Self {
        self.pseudo_inverse = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_weights(&self.weights)?;
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iter",
                value: 0.0,
                reason: "must be positive",
            });
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "step",
                value: self.step,
                reason: "must be positive and finite",
            });
        }
        if !(self.rel_tol >= 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rel_tol",
                value: self.rel_tol,
                reason: "must be nonnegative and finite",
            });
        }
        linalg::check_rel_trunc(self.rel_trunc)
    }
}

/// Weights must be finite, nonnegative, sum to one within 1e-12 and not all vanish.
pub fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidWeights("empty weight vector".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidWeights(format!(
            "weight {w} is negative or non-finite"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidWeights(format!(
            "weights sum to {total}, not 1"
        )));
    }
    if !weights.iter().any(|w| *w > 0.0) {
        return Err(Error::InvalidWeights("all weights are zero".into()));
    }
    Ok(())
}

/// Result of a covariance mean with convergence diagnostics.
#[derive(Debug, Clone)]
pub struct MeanReport {
    pub result: SpdMatrix,
    pub iterations_used: usize,
    /// Bures: relative change of one extra fixed-point step. Fisher-Rao:
    /// Frobenius norm of the weighted log-map sum. Closed forms: 0.
    pub final_residual: f64,
}

impl MeanReport {
    fn exact(result: SpdMatrix) -> Self {
        Self {
            result,
            iterations_used: 0,
            final_residual: 0.0,
        }
    }
}

/// Wasserstein barycenter of centered Gaussians.
///
/// Iterates
///
/// ```text
/// Σ ← Σ^{-1/2} ( Σ_j λ_j (Σ^{1/2} Σ_j Σ^{1/2})^{1/2} )² Σ^{-1/2}
/// ```
///
/// whose fixed points satisfy `Σ = Σ_j λ_j (Σ^{1/2} Σ_j Σ^{1/2})^{1/2}`. The
/// returned matrix is the last iterate whose update was evaluated, and
/// `final_residual` is the relative size of that update.
pub fn bures_barycenter(sigmas: &[SpdMatrix], spec: &FrechetSpec) -> Result<MeanReport> {
    check_inputs(sigmas, spec)?;
    if let Some(k) = sole_support(&spec.weights) {
        return Ok(MeanReport::exact(sigmas[k].clone()));
    }
    let mut current = sigmas[heaviest(&spec.weights)].clone();
    let mut iterations = 0;
    let final_residual = loop {
        let next = bures_step(&current, sigmas, &spec.weights, spec.rel_trunc)?;
        iterations += 1;
        // The change of a step is the fixed-point defect of the matrix it started from.
        let defect = next.rel_frobenius_diff(&current);
        if defect < spec.rel_tol || iterations >= spec.max_iter {
            break defect;
        }
        current = next;
    };
    Ok(MeanReport {
        result: current,
        iterations_used: iterations,
        final_residual,
    })
}

/// One fixed-point update. With `Σ = L Lᵀ` and `K = Σ_j λ_j (Lᵀ Σ_j L)^{1/2}`
/// the update equals `(L⁻ᵀ K)(L⁻ᵀ K)ᵀ`, which skips the eigendecomposition of
/// `Σ`. Iterates whose Cholesky pivots fall below `rel_trunc` take the
/// spectral route with a truncated inverse root instead.
fn bures_step(
    current: &SpdMatrix,
    sigmas: &[SpdMatrix],
    weights: &[f64],
    rel_trunc: f64,
) -> Result<SpdMatrix> {
    let half = match current.as_mat().llt(Side::Lower) {
        Ok(llt) if well_pivoted(llt.L(), rel_trunc) => {
            let factor = llt.L();
            let mut sum = weighted_roots(sigmas, weights, |sigma| {
                linalg::lower_congruence(factor, sigma)
            })?;
            triangular_solve::solve_upper_triangular_in_place(
                factor.transpose(),
                sum.as_mut(),
                Par::Seq,
            );
            sum
        }
        _ => {
            let root = linalg::sqrtm(current)?;
            let inv_root = linalg::inv_sqrtm(current, rel_trunc)?;
            let sum = weighted_roots(sigmas, weights, |sigma| {
                linalg::congruence(root.as_mat(), sigma)
            })?;
            inv_root.as_mat() * &sum
        }
    };
    let mut next = Mat::<f64>::zeros(half.nrows(), half.nrows());
    matmul::triangular::matmul(
        next.as_mut(),
        BlockStructure::TriangularLower,
        Accum::Replace,
        half.as_ref(),
        BlockStructure::Rectangular,
        half.transpose(),
        BlockStructure::Rectangular,
        1.0,
        Par::Seq,
    );
    Ok(SpdMatrix::from_psd(linalg::mirror_lower(next)))
}

/// `Σ_j λ_j inner(Σ_j)^{1/2}` over the inputs with nonzero weight. Only the
/// lower triangle of each `inner` result is read.
fn weighted_roots(
    sigmas: &[SpdMatrix],
    weights: &[f64],
    inner: impl Fn(MatRef<'_, f64>) -> Mat<f64>,
) -> Result<Mat<f64>> {
    let m = sigmas[0].dim();
    let mut sum = Mat::<f64>::zeros(m, m);
    for (sigma, &w) in sigmas.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        linalg::add_weighted_sqrt(sum.as_mut(), inner(sigma.as_mat()).as_ref(), w)?;
    }
    Ok(linalg::mirror_lower(sum))
}

/// Squared pivots bound the extreme eigenvalues from inside, so a pivot ratio
/// under `rel_trunc` means the matrix is numerically singular.
fn well_pivoted(factor: MatRef<'_, f64>, rel_trunc: f64) -> bool {
    let pivots = factor.diagonal().column_vector();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 0..factor.nrows() {
        let p = pivots[k] * pivots[k];
        lo = lo.min(p);
        hi = hi.max(p);
    }
    hi > 0.0 && lo.is_finite() && lo > rel_trunc * hi
}

/// Karcher mean under the affine-invariant (Fisher-Rao) metric.
///
/// Gradient update with step `η`:
///
/// ```text
/// G = Σ_j λ_j log(Σ^{1/2} Σ_j⁻¹ Σ^{1/2}),   Σ ← Σ^{1/2} exp(−η G) Σ^{1/2}
/// ```
///
/// Stops when `‖G‖_F < rel_tol · m` or after `max_iter` updates.
pub fn karcher_mean(sigmas: &[SpdMatrix], spec: &FrechetSpec) -> Result<MeanReport> {
    let m = check_inputs(sigmas, spec)?;
    let mut inverses = Vec::with_capacity(sigmas.len());
    for (index, sigma) in sigmas.iter().enumerate() {
        let eig = sigma.eigen()?;
        if !(eig.max_value() > 0.0) || eig.min_value() < spec.rel_trunc * eig.max_value() {
            return Err(Error::SingularInput { index });
        }
        inverses.push(eig.apply(|w| 1.0 / w));
    }
    if let Some(k) = sole_support(&spec.weights) {
        return Ok(MeanReport::exact(sigmas[k].clone()));
    }

    let tolerance = spec.rel_tol * m as f64;
    let mut state = karcher_eval(
        sigmas[heaviest(&spec.weights)].clone(),
        &inverses,
        &spec.weights,
    )?;
    let mut iterations = 0;
    let mut step = spec.step;
    while iterations < spec.max_iter && state.grad_norm >= tolerance {
        let mut candidate = karcher_eval(karcher_move(&state, step)?, &inverses, &spec.weights)?;
        if spec.backtracking {
            let mut halvings = 0;
            while !sufficient_decrease(&state, &candidate, step) {
                if halvings == MAX_HALVINGS {
                    return Ok(MeanReport {
                        result: state.sigma,
                        iterations_used: iterations,
                        final_residual: state.grad_norm,
                    });
                }
                step *= 0.5;
                halvings += 1;
                candidate = karcher_eval(karcher_move(&state, step)?, &inverses, &spec.weights)?;
            }
        }
        state = candidate;
        iterations += 1;
    }
    Ok(MeanReport {
        result: state.sigma,
        iterations_used: iterations,
        final_residual: state.grad_norm,
    })
}

const MAX_HALVINGS: usize = 30;

/// Armijo test along the descent path: the objective `Σ λ_j ‖log_j‖²` has slope
/// `−2‖G‖²` in the step size, and a step is kept when it realizes at least half
/// of that linear decrease. Round-off sized changes always pass.
fn sufficient_decrease(state: &KarcherState, candidate: &KarcherState, step: f64) -> bool {
    let predicted = 2.0 * step * state.grad_norm * state.grad_norm;
    let slack = 1e-12 * state.objective + f64::EPSILON;
    candidate.objective <= state.objective - 0.5 * predicted + slack
}

struct KarcherState {
    sigma: SpdMatrix,
    root: SpdMatrix,
    grad: Mat<f64>,
    grad_norm: f64,
    objective: f64,
}

fn karcher_eval(sigma: SpdMatrix, inverses: &[Mat<f64>], weights: &[f64]) -> Result<KarcherState> {
    let m = sigma.dim();
    let root = linalg::sqrtm(&sigma)?;
    let mut grad = Mat::<f64>::zeros(m, m);
    let mut objective = 0.0;
    for (inverse, &w) in inverses.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let relative = SpdMatrix::from_psd(linalg::congruence(root.as_mat(), inverse.as_ref()));
        let eig = relative.eigen()?;
        if !(eig.min_value() > 0.0) {
            return Err(Error::NearSingular {
                min_eigenvalue: eig.min_value(),
                floor: 0.0,
            });
        }
        let log = eig.apply(f64::ln);
        objective += w * log.norm_l2().powi(2);
        grad += &log * faer::Scale(w);
    }
    let grad_norm = grad.norm_l2();
    Ok(KarcherState {
        sigma,
        root,
        grad,
        grad_norm,
        objective,
    })
}

fn karcher_move(state: &KarcherState, step: f64) -> Result<SpdMatrix> {
    let descent = &state.grad * faer::Scale(-step);
    let factor = expm(descent.as_ref())?;
    Ok(SpdMatrix::from_psd(linalg::congruence(
        state.root.as_mat(),
        factor.as_mat(),
    )))
}

/// `Σ_j λ_j Σ_j`.
pub fn arithmetic_mean(sigmas: &[SpdMatrix], spec: &FrechetSpec) -> Result<MeanReport> {
    let m = check_inputs(sigmas, spec)?;
    if let Some(k) = sole_support(&spec.weights) {
        return Ok(MeanReport::exact(sigmas[k].clone()));
    }
    let mut sum = Mat::<f64>::zeros(m, m);
    for (sigma, &w) in sigmas.iter().zip(&spec.weights) {
        sum += sigma.as_mat() * faer::Scale(w);
    }
    Ok(MeanReport::exact(SpdMatrix::from_psd(sum)))
}

/// `(Σ_j λ_j Σ_j⁻¹)⁻¹`. Singular inputs are rejected unless `spec.pseudo_inverse`
/// is set, in which case pseudo-inverses are used throughout and the result
/// lives on the span of the retained eigenspaces.
pub fn harmonic_mean(sigmas: &[SpdMatrix], spec: &FrechetSpec) -> Result<MeanReport> {
    let m = check_inputs(sigmas, spec)?;
    if !spec.pseudo_inverse {
        for (index, sigma) in sigmas.iter().enumerate() {
            let eig = sigma.eigen()?;
            if !(eig.max_value() > 0.0) || eig.min_value() < spec.rel_trunc * eig.max_value() {
                return Err(Error::SingularInput { index });
            }
        }
    }
    if let Some(k) = sole_support(&spec.weights) {
        return Ok(MeanReport::exact(sigmas[k].clone()));
    }
    let mut sum = Mat::<f64>::zeros(m, m);
    for (sigma, &w) in sigmas.iter().zip(&spec.weights) {
        if w == 0.0 {
            continue;
        }
        sum += pinv(sigma, spec.rel_trunc)?.as_mat() * faer::Scale(w);
    }
    let result = pinv(&SpdMatrix::from_psd(sum), spec.rel_trunc)?;
    Ok(MeanReport::exact(result))
}

/// Dispatches on `spec.metric`.
pub fn frechet_mean(sigmas: &[SpdMatrix], spec: &FrechetSpec) -> Result<MeanReport> {
    match spec.metric {
        Metric::Bures => bures_barycenter(sigmas, spec),
        Metric::FisherRao => karcher_mean(sigmas, spec),
        Metric::Arithmetic => arithmetic_mean(sigmas, spec),
        Metric::Harmonic => harmonic_mean(sigmas, spec),
    }
}

/// Mixed style: weighted arithmetic mean of the means and the Fréchet mean of
/// the covariances. When `content` is given it is appended as the last input
/// and `spec.weights` must carry its weight last.
pub fn barycenter_stats(
    styles: &[GaussianStats],
    content: Option<&GaussianStats>,
    spec: &FrechetSpec,
) -> Result<GaussianStats> {
    barycenter_stats_report(styles, content, spec).map(|(stats, _)| stats)
}

/// Same as [`barycenter_stats`], also returning the covariance mean diagnostics.
pub fn barycenter_stats_report(
    styles: &[GaussianStats],
    content: Option<&GaussianStats>,
    spec: &FrechetSpec,
) -> Result<(GaussianStats, MeanReport)> {
    let members: Vec<&GaussianStats> = styles.iter().chain(content).collect();
    if members.is_empty() {
        return Err(Error::NoInputs);
    }
    if spec.weights.len() != members.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} inputs",
            spec.weights.len(),
            members.len()
        )));
    }
    let dim = members[0].dim();
    let mut mean = vec![0.0; dim];
    for (g, &w) in members.iter().zip(&spec.weights) {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: g.dim(),
            });
        }
        for (acc, v) in mean.iter_mut().zip(&g.mean) {
            *acc += w * v;
        }
    }
    let covs: Vec<SpdMatrix> = members.iter().map(|g| g.cov.clone()).collect();
    let report = frechet_mean(&covs, spec)?;
    let stats = GaussianStats::new(mean, report.result.clone(), 0)?;
    Ok((stats, report))
}

fn check_inputs(sigmas: &[SpdMatrix], spec: &FrechetSpec) -> Result<usize> {
    spec.validate()?;
    let first = sigmas.first().ok_or(Error::NoInputs)?;
    if spec.weights.len() != sigmas.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} inputs",
            spec.weights.len(),
            sigmas.len()
        )));
    }
    let m = first.dim();
    if let Some(bad) = sigmas.iter().find(|s| s.dim() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: bad.dim(),
        });
    }
    Ok(m)
}

fn heaviest(weights: &[f64]) -> usize {
    let mut best = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > weights[best] {
            best = k;
        }
    }
    best
}

/// Index of the only nonzero weight, if exactly one exists.
fn sole_support(weights: &[f64]) -> Option<usize> {
    let mut nonzero = weights.iter().enumerate().filter(|(_, w)| **w > 0.0);
    match (nonzero.next(), nonzero.next()) {
        (Some((k, _)), None) => Some(k),
        _ => None,
    }
}
