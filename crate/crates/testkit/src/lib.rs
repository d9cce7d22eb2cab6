//! Fixtures and reference implementations for the gotstyle test suites.
//!
//! The oracles here deliberately avoid the library's eigensolver: square roots
//! use Denman–Beavers iteration, inverses use Gauss–Jordan elimination and
//! assignments use the Hungarian algorithm or exhaustive search.

use faer::Mat;
use gotstyle::{GaussianStats, SampleMatrix, SpdMatrix};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> Mat<f64> {
    Mat::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Haar-ish random orthogonal matrix via modified Gram–Schmidt.
pub fn random_orthogonal(rng: &mut StdRng, m: usize) -> Mat<f64> {
    let mut q = gaussian_matrix(rng, m, m);
    for j in 0..m {
        for k in 0..j {
            let dot: f64 = (0..m).map(|i| q[(i, j)] * q[(i, k)]).sum();
            for i in 0..m {
                q[(i, j)] -= dot * q[(i, k)];
            }
        }
        let norm = (0..m).map(|i| q[(i, j)].powi(2)).sum::<f64>().sqrt();
        for i in 0..m {
            q[(i, j)] /= norm;
        }
    }
    q
}

/// `Q diag(values) Qᵀ`.
pub fn with_spectrum(q: &Mat<f64>, values: &[f64]) -> Mat<f64> {
    let m = values.len();
    let mut out = Mat::from_fn(m, m, |i, j| {
        (0..m).map(|k| q[(i, k)] * values[k] * q[(j, k)]).sum()
    });
    for i in 0..m {
        for j in 0..i {
            let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    out
}

/// Eigenvalues spread log-uniformly over `[scale, scale · cond]`, with both ends hit.
pub fn spectrum(rng: &mut StdRng, m: usize, cond: f64) -> Vec<f64> {
    let scale = rng.gen_range(0.2..5.0);
    (0..m)
        .map(|k| {
            let u = match k {
                0 => 0.0,
                1 => 1.0,
                _ => rng.gen::<f64>(),
            };
            let u = if m == 1 { rng.gen::<f64>() } else { u };
            scale * cond.powf(u)
        })
        .collect()
}

/// Random SPD matrix with condition number `cond` (for `m ≥ 2`).
pub fn random_spd(rng: &mut StdRng, m: usize, cond: f64) -> SpdMatrix {
    let q = random_orthogonal(rng, m);
    let values = spectrum(rng, m, cond);
    SpdMatrix::new(with_spectrum(&q, &values)).unwrap()
}

/// Random PSD matrix of the given rank.
pub fn random_psd_rank(rng: &mut StdRng, m: usize, rank: usize) -> SpdMatrix {
    let q = random_orthogonal(rng, m);
    let values: Vec<f64> = (0..m)
        .map(|k| {
            if k < rank {
                rng.gen_range(0.5..4.0)
            } else {
                0.0
            }
        })
        .collect();
    SpdMatrix::new(with_spectrum(&q, &values)).unwrap()
}

/// Matrices sharing one eigenbasis.
pub fn commuting_family(
    rng: &mut StdRng,
    m: usize,
    count: usize,
    cond: f64,
) -> (Mat<f64>, Vec<Vec<f64>>, Vec<SpdMatrix>) {
    let q = random_orthogonal(rng, m);
    let spectra: Vec<Vec<f64>> = (0..count).map(|_| spectrum(rng, m, cond)).collect();
    let mats = spectra
        .iter()
        .map(|s| SpdMatrix::new(with_spectrum(&q, s)).unwrap())
        .collect();
    (q, spectra, mats)
}

pub fn random_diagonal(rng: &mut StdRng, m: usize) -> SpdMatrix {
    let d: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..5.0)).collect();
    SpdMatrix::from_diagonal(&d).unwrap()
}

pub fn random_mean(rng: &mut StdRng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect()
}

pub fn random_stats(rng: &mut StdRng, m: usize, cond: f64) -> GaussianStats {
    let cov = random_spd(rng, m, cond);
    GaussianStats::new(random_mean(rng, m), cov, 0).unwrap()
}

/// `n` samples whose empirical mean and covariance (1/n divisor) equal
/// `stats` up to round-off: standard normals are centered and whitened
/// exactly, then colored with the Cholesky factor of the target covariance.
pub fn gaussian_exact_samples(rng: &mut StdRng, stats: &GaussianStats, n: usize) -> SampleMatrix {
    let m = stats.dim();
    assert!(n > m, "need more samples than dimensions");
    let mut z = gaussian_matrix(rng, n, m);
    for j in 0..m {
        let mean = (0..n).map(|i| z[(i, j)]).sum::<f64>() / n as f64;
        for i in 0..n {
            z[(i, j)] -= mean;
        }
    }
    let emp = Mat::from_fn(m, m, |a, b| {
        (0..n).map(|i| z[(i, a)] * z[(i, b)]).sum::<f64>() / n as f64
    });
    // z · L_emp⁻ᵀ has identity covariance; then multiply by L_targetᵀ.
    let l_emp = cholesky(&emp);
    let l_tgt = cholesky(&to_mat(stats.cov.as_mat()));
    let white_t = lower_inverse(&l_emp).transpose().to_owned();
    let color = &white_t * l_tgt.transpose();
    let x = &z * &color;
    let data = Mat::from_fn(n, m, |i, j| x[(i, j)] + stats.mean[j]);
    SampleMatrix::new(data).unwrap()
}

pub fn to_mat(a: faer::MatRef<'_, f64>) -> Mat<f64> {
    a.to_owned()
}

pub fn cholesky(a: &Mat<f64>) -> Mat<f64> {
    let m = a.nrows();
    let mut l = Mat::<f64>::zeros(m, m);
    for j in 0..m {
        let diag = a[(j, j)] - (0..j).map(|k| l[(j, k)].powi(2)).sum::<f64>();
        assert!(diag > 0.0, "matrix is not positive definite");
        l[(j, j)] = diag.sqrt();
        for i in j + 1..m {
            let off = a[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = off / l[(j, j)];
        }
    }
    l
}

fn lower_inverse(l: &Mat<f64>) -> Mat<f64> {
    let m = l.nrows();
    let mut inv = Mat::<f64>::zeros(m, m);
    for col in 0..m {
        for i in 0..m {
            let rhs = if i == col { 1.0 } else { 0.0 };
            let acc = rhs - (0..i).map(|k| l[(i, k)] * inv[(k, col)]).sum::<f64>();
            inv[(i, col)] = acc / l[(i, i)];
        }
    }
    inv
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn inverse(a: &Mat<f64>) -> Mat<f64> {
    let m = a.nrows();
    let mut work = a.clone();
    let mut inv = Mat::<f64>::identity(m, m);
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| work[(i, col)].abs().total_cmp(&work[(j, col)].abs()))
            .unwrap();
        for k in 0..m {
            let (a1, a2) = (work[(col, k)], work[(pivot, k)]);
            work[(col, k)] = a2;
            work[(pivot, k)] = a1;
            let (b1, b2) = (inv[(col, k)], inv[(pivot, k)]);
            inv[(col, k)] = b2;
            inv[(pivot, k)] = b1;
        }
        let p = work[(col, col)];
        for k in 0..m {
            work[(col, k)] /= p;
            inv[(col, k)] /= p;
        }
        for i in 0..m {
            if i != col {
                let f = work[(i, col)];
                if f != 0.0 {
                    for k in 0..m {
                        work[(i, k)] -= f * work[(col, k)];
                        inv[(i, k)] -= f * inv[(col, k)];
                    }
                }
            }
        }
    }
    inv
}

/// Principal square root of an SPD matrix by Denman–Beavers iteration.
pub fn sqrt_oracle(a: &Mat<f64>) -> Mat<f64> {
    let m = a.nrows();
    let mut y = a.clone();
    let mut z = Mat::<f64>::identity(m, m);
    for _ in 0..100 {
        let y_inv = inverse(&y);
        let z_inv = inverse(&z);
        let y_next = Mat::from_fn(m, m, |i, j| 0.5 * (y[(i, j)] + z_inv[(i, j)]));
        let z_next = Mat::from_fn(m, m, |i, j| 0.5 * (z[(i, j)] + y_inv[(i, j)]));
        let change = frobenius(&(&y_next - &y)) / frobenius(&y_next);
        y = y_next;
        z = z_next;
        if change < 1e-15 {
            break;
        }
    }
    Mat::from_fn(m, m, |i, j| 0.5 * (y[(i, j)] + y[(j, i)]))
}

/// Principal logarithm of an SPD matrix by inverse scaling and squaring:
/// repeated oracle square roots until close to the identity, then the series
/// of `log(I + X)`.
pub fn log_oracle(a: &Mat<f64>) -> Mat<f64> {
    let m = a.nrows();
    let eye = Mat::<f64>::identity(m, m);
    let mut root = a.clone();
    let mut doublings = 0;
    while frobenius(&(&root - &eye)) > 0.05 {
        root = sqrt_oracle(&root);
        doublings += 1;
    }
    let x = &root - &eye;
    let mut power = x.clone();
    let mut sum = Mat::<f64>::zeros(m, m);
    for k in 1..=40 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += &power * faer::Scale(sign / k as f64);
        power = &power * &x;
    }
    let scale = 2f64.powi(doublings);
    Mat::from_fn(m, m, |i, j| 0.5 * scale * (sum[(i, j)] + sum[(j, i)]))
}

pub fn frobenius(a: &Mat<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * a[(i, j)];
        }
    }
    s.sqrt()
}

pub fn rel_frobenius(a: faer::MatRef<'_, f64>, b: faer::MatRef<'_, f64>) -> f64 {
    let diff = a.to_owned() - b.to_owned();
    frobenius(&diff) / frobenius(&b.to_owned()).max(f64::MIN_POSITIVE)
}

pub fn trace(a: &Mat<f64>) -> f64 {
    (0..a.nrows()).map(|i| a[(i, i)]).sum()
}

/// Gaussian W₂² computed from the oracle square root.
pub fn w2_oracle(a: &GaussianStats, b: &GaussianStats) -> f64 {
    let sa = to_mat(a.cov.as_mat());
    let sb = to_mat(b.cov.as_mat());
    let root = sqrt_oracle(&sa);
    let inner = &(&root * &sb) * &root;
    let cross = sqrt_oracle(&Mat::from_fn(inner.nrows(), inner.ncols(), |i, j| {
        0.5 * (inner[(i, j)] + inner[(j, i)])
    }));
    let means: f64 = a
        .mean
        .iter()
        .zip(&b.mean)
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    means + trace(&sa) + trace(&sb) - 2.0 * trace(&cross)
}

/// Empirical mean and 1/n covariance, computed with plain loops.
pub fn empirical_stats(x: &SampleMatrix) -> (Vec<f64>, Mat<f64>) {
    let (n, m) = (x.n(), x.m());
    let mean: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64)
        .collect();
    let cov = Mat::from_fn(m, m, |a, b| {
        (0..n)
            .map(|i| (x.get(i, a) - mean[a]) * (x.get(i, b) - mean[b]))
            .sum::<f64>()
            / n as f64
    });
    (mean, cov)
}

pub fn squared_distances(x: &[Vec<f64>], y: &[Vec<f64>]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|a| {
            y.iter()
                .map(|b| a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum())
                .collect()
        })
        .collect()
}

/// Minimum-cost perfect matching of a square cost matrix, by the O(n³)
/// Hungarian algorithm. Returns `assignment[row] = col` and the total cost.
pub fn hungarian(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    let total = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j])
        .sum();
    (assignment, total)
}

/// Minimum over all `n!` permutations, enumerated with Heap's algorithm.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let total = |perm: &[usize]| {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| cost[i][j])
            .sum::<f64>()
    };
    let mut best = total(&perm);
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(total(&perm));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heap_visits_every_permutation() {
        // Row i, col j costs j · 10^i, so every permutation has a distinct total
        // and the optimum sends the largest column to the cheapest row.
        let cost: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| j as f64 * 10f64.powi(i)).collect())
            .collect();
        assert_eq!(brute_force_assignment(&cost), 123.0);
        let negated: Vec<Vec<f64>> = cost
            .iter()
            .map(|r| r.iter().map(|c| -c).collect())
            .collect();
        assert_eq!(brute_force_assignment(&negated), -3210.0);
        let (assign, total) = hungarian(&cost);
        assert_eq!(total, brute_force_assignment(&cost));
        assert_eq!(assign, vec![3, 2, 1, 0]);
    }

    #[test]
    fn log_oracle_inverts_diagonal_exponentials() {
        let mut r = rng(5);
        let q = random_orthogonal(&mut r, 5);
        let logs = [-4.0, -0.3, 0.0, 1.5, 6.0];
        let a = with_spectrum(&q, &logs.map(f64::exp));
        let expected = with_spectrum(&q, &logs);
        assert!(frobenius(&(log_oracle(&a) - &expected)) < 1e-10);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut r = rng(3);
        for _ in 0..20 {
            let cost: Vec<Vec<f64>> = (0..6)
                .map(|_| (0..6).map(|_| r.gen::<f64>()).collect())
                .collect();
            let (_, total) = hungarian(&cost);
            assert!((total - brute_force_assignment(&cost)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_samples_hit_their_stats() {
        let mut r = rng(7);
        let stats = random_stats(&mut r, 4, 50.0);
        let x = gaussian_exact_samples(&mut r, &stats, 40);
        let (mean, cov) = empirical_stats(&x);
        for (a, b) in mean.iter().zip(&stats.mean) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(rel_frobenius(cov.as_ref(), stats.cov.as_mat()) < 1e-12);
    }

    #[test]
    fn sqrt_oracle_squares_back() {
        let mut r = rng(11);
        let a = to_mat(random_spd(&mut r, 6, 100.0).as_mat());
        let s = sqrt_oracle(&a);
        assert!(rel_frobenius((&s * &s).as_ref(), a.as_ref()) < 1e-13);
    }
}
