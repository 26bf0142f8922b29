use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::{CheckConfig, CheckReport};
use crate::designs::gaussian_matrix;
use crate::error::{invalid, Error, Result};
use crate::harness::seed_split;
use crate::linmodel::Spectrum;

/// Monte Carlo samples are summed in this many fixed chunks, so the total
/// does not depend on how chunks are scheduled.
const CHUNKS: usize = 64;

/// Relative Frobenius tolerance of the Wishart-square check.
pub const WISHART_TOLERANCE: f64 = 0.02;

fn check_symmetric(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if a.nrows() == 0 || !a.is_square() {
        return Err(invalid(format!("{what} must be a nonempty square matrix")));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(invalid(format!("{what} has nonfinite entries")));
    }
    let tol = 1e-10 * a.norm().max(1.0);
    if (a - a.transpose()).norm() > tol {
        return Err(invalid(format!("{what} must be symmetric")));
    }
    Ok(())
}

/// `E[Σ̂²] = (1 + 1/n)Σ² + (tr Σ / n)Σ` for `Σ̂ = XᵀX/n` with `n` i.i.d.
/// `N(0, Σ)` rows.
pub fn wishart_square_closed_form(sigma: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let n = n as f64;
    sigma * sigma * (1.0 + 1.0 / n) + sigma * (sigma.trace() / n)
}

/// Compares the closed form of `E[Σ̂²]` with its Monte Carlo mean.
pub fn wishart_square_seeded(sigma: &DMatrix<f64>, n: usize, mc_samples: usize, seed: u64) -> Result<CheckReport> {
    check_symmetric(sigma, "covariance")?;
    if n == 0 || mc_samples == 0 {
        return Err(invalid("sample size and Monte Carlo count must be positive"));
    }
    let p = sigma.nrows();
    let eig = sigma.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l < -1e-10 * sigma.norm()) {
        return Err(invalid("covariance must be positive semidefinite"));
    }
    let mut q = eig.eigenvectors.clone();
    for (mut col, &l) in q.column_iter_mut().zip(eig.eigenvalues.iter()) {
        col *= l.max(0.0).sqrt();
    }
    let root = q * eig.eigenvectors.transpose();

    let chunk_sums: Vec<DMatrix<f64>> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut acc = DMatrix::zeros(p, p);
            for s in (c..mc_samples).step_by(CHUNKS) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed_split(seed, &[s as u64]));
                let x = gaussian_matrix(n, p, &mut rng) * &root;
                let hat = x.tr_mul(&x) / n as f64;
                acc += &hat * &hat;
            }
            acc
        })
        .collect();
    let mean = chunk_sums.iter().fold(DMatrix::zeros(p, p), |acc, m| acc + m) / mc_samples as f64;
    let exact = wishart_square_closed_form(sigma, n);
    let rel = (mean - &exact).norm() / exact.norm();
    let config = CheckConfig {
        n,
        p,
        seed,
        ..CheckConfig::default()
    };
    Ok(CheckReport::new("wishart_square", rel, WISHART_TOLERANCE, 0.0, config))
}

/// [`wishart_square_seeded`] with the seed drawn from `rng`.
pub fn wishart_square<R: Rng + ?Sized>(sigma: &DMatrix<f64>, n: usize, mc_samples: usize, rng: &mut R) -> Result<CheckReport> {
    wishart_square_seeded(sigma, n, mc_samples, rng.next_u64())
}

/// `Z = H diag(l) Gᵀ` with `l` decreasing and every column of `G` oriented
/// so that its first entry is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedSvd {
    pub h: DMatrix<f64>,
    pub l: DVector<f64>,
    pub g: DMatrix<f64>,
}

/// Entries of `G` at or below this magnitude count as zero when choosing
/// a column orientation.
const ORIENTATION_TOL: f64 = 1e-12;

/// Signed singular value decomposition of a full-rank `n × p` matrix with
/// `n ≥ p`.
///
/// Each column pair `(Hⱼ, Gⱼ)` is flipped when needed so that `G₁ⱼ > 0`.
/// A column whose first entry is zero is oriented by its first nonzero
/// entry instead, and any resulting `−0.0` is stored as `+0.0`.
pub fn signed_svd(z: &DMatrix<f64>) -> Result<SignedSvd> {
    let (n, p) = z.shape();
    if n < p {
        return Err(invalid(format!("signed decomposition needs n >= p, got {n} x {p}")));
    }
    let spectrum = Spectrum::new(z)?;
    if !spectrum.full_column_rank() {
        return Err(Error::Singular(format!("matrix has rank {} < {p}", spectrum.rank())));
    }
    let mut h = spectrum.u().clone();
    let mut g = spectrum.v().clone();
    for j in 0..p {
        let lead = g.column(j).iter().copied().find(|v| v.abs() > ORIENTATION_TOL).unwrap_or(0.0);
        if lead < 0.0 {
            h.column_mut(j).neg_mut();
            g.column_mut(j).neg_mut();
        }
    }
    for v in g.iter_mut().chain(h.iter_mut()) {
        if *v == 0.0 {
            *v = 0.0;
        }
    }
    Ok(SignedSvd {
        h,
        l: spectrum.singular_values().clone(),
        g,
    })
}

/// Mean of `‖H₁‖²` over `samples` standard Gaussian `n × p` matrices
/// against its `Beta(p/2, (n−p)/2)` mean `p/n`, with absolute tolerance
/// `tol`.
pub fn signed_svd_row_law_seeded(n: usize, p: usize, samples: usize, tol: f64, seed: u64) -> Result<CheckReport> {
    if p == 0 || n <= p || samples == 0 {
        return Err(invalid("row-law check needs 0 < p < n and a positive sample count"));
    }
    let norms = (0..samples)
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed_split(seed, &[s as u64]));
            let svd = signed_svd(&gaussian_matrix(n, p, &mut rng))?;
            Ok(svd.h.row(0).norm_squared())
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = norms.iter().sum::<f64>() / samples as f64;
    let config = CheckConfig {
        n,
        p,
        seed,
        ..CheckConfig::default()
    };
    Ok(CheckReport::new("signed_svd_row_law", (mean - p as f64 / n as f64).abs(), tol, 0.0, config))
}

/// Empirical tail frequencies of the Gaussian quadratic form `zᵀAz`,
/// per `t`:
///
/// * upper: `zᵀAz > tr A + 2‖A‖_F √t + 2‖A‖_op t`,
/// * lower: `zᵀAz < tr A − 2‖A‖_F √t`,
///
/// each compared with `e^(−t) + 3·√(e^(−t)(1 − e^(−t))/trials)`.
pub fn lm_tail_check_seeded(a: &DMatrix<f64>, t_grid: &[f64], trials: usize, seed: u64) -> Result<Vec<CheckReport>> {
    check_symmetric(a, "quadratic form")?;
    if trials == 0 || t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(invalid("tail check needs positive t values and a positive trial count"));
    }
    let p = a.nrows();
    let trace = a.trace();
    let frob = a.norm();
    let op = a.symmetric_eigenvalues().iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let upper: Vec<f64> = t_grid.iter().map(|&t| trace + 2.0 * frob * t.sqrt() + 2.0 * op * t).collect();
    let lower: Vec<f64> = t_grid.iter().map(|&t| trace - 2.0 * frob * t.sqrt()).collect();

    let counts: Vec<(Vec<usize>, Vec<usize>)> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut up = vec![0usize; t_grid.len()];
            let mut down = vec![0usize; t_grid.len()];
            for s in (c..trials).step_by(CHUNKS) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed_split(seed, &[s as u64]));
                let z = gaussian_matrix(p, 1, &mut rng).column(0).into_owned();
                let q = z.dot(&(a * &z));
                for k in 0..t_grid.len() {
                    up[k] += usize::from(q > upper[k]);
                    down[k] += usize::from(q < lower[k]);
                }
            }
            (up, down)
        })
        .collect();

    let total = trials as f64;
    let config = CheckConfig {
        n: trials,
        p,
        seed,
        ..CheckConfig::default()
    };
    let mut reports = Vec::with_capacity(2 * t_grid.len());
    for (k, &t) in t_grid.iter().enumerate() {
        let bound = (-t).exp();
        let slack = 3.0 * (bound * (1.0 - bound) / total).sqrt();
        let up: usize = counts.iter().map(|c| c.0[k]).sum();
        let down: usize = counts.iter().map(|c| c.1[k]).sum();
        reports.push(CheckReport::new(format!("lm_upper_t{t}"), up as f64 / total, bound + slack, 0.0, config));
        reports.push(CheckReport::new(format!("lm_lower_t{t}"), down as f64 / total, bound + slack, 0.0, config));
    }
    Ok(reports)
}

/// [`lm_tail_check_seeded`] with the seed drawn from `rng`.
pub fn lm_tail_check<R: Rng + ?Sized>(a: &DMatrix<f64>, t_grid: &[f64], trials: usize, rng: &mut R) -> Result<Vec<CheckReport>> {
    lm_tail_check_seeded(a, t_grid, trials, rng.next_u64())
}
