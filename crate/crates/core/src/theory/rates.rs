use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::RateEstimate;
use crate::designs::{make_beta, make_covariance, sample_design, sample_noise, BetaStyle, NoiseSpec};
use crate::error::{invalid, Result};
use crate::harness::seed_split;
use crate::linmodel::theta_rule;
use crate::mallows::{d2_squared, reference_sample, EmpiricalDistribution};
use crate::tuning::exponent_to_penalty;

/// Half-width of the acceptance band around a target slope.
pub const RATE_BAND: f64 = 0.15;

fn check_grid(n_grid: &[usize], trials: usize) -> Result<()> {
    if n_grid.len() < 2 || n_grid.windows(2).any(|w| w[1] <= w[0]) || n_grid[0] < 2 {
        return Err(invalid("size grid must be strictly increasing with at least two sizes >= 2"));
    }
    if trials == 0 {
        return Err(invalid("number of trials must be positive"));
    }
    Ok(())
}

/// Prediction-error exponent for decay `ν` under the pilot rule:
/// `−2ν/3` below one half and `−ν/(ν+1)` above.
pub fn mspe_target_slope(nu: f64) -> f64 {
    if nu < 0.5 {
        -2.0 * nu / 3.0
    } else {
        -nu / (nu + 1.0)
    }
}

/// Exact conditional MSPE of ridge at penalty `varrho` from the eigen
/// decomposition of `XᵀX`: with eigenpairs `(λⱼ, vⱼ)`,
/// `bias = (1/n) Σ λⱼ (ϱ/(λⱼ+ϱ))² (vⱼᵀβ)²` and
/// `variance = (σ²/n) Σ (λⱼ/(λⱼ+ϱ))²`.
fn gram_mspe(x: &DMatrix<f64>, beta: &DVector<f64>, varrho: f64, sigma_sq: f64) -> f64 {
    let n = x.nrows() as f64;
    let eig = x.tr_mul(x).symmetric_eigen();
    let proj = eig.eigenvectors.tr_mul(beta);
    let (mut bias, mut variance) = (0.0, 0.0);
    for (&l, &b) in eig.eigenvalues.iter().zip(proj.iter()) {
        let l = l.max(0.0);
        let shrink = varrho / (l + varrho);
        bias += l * shrink * shrink * b * b;
        let keep = l / (l + varrho);
        variance += keep * keep;
    }
    (bias + sigma_sq * variance) / n
}

/// Design and noise settings for [`rate_mspe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MspeRateSetup {
    /// `p/n`, held fixed along the grid.
    pub p_ratio: f64,
    pub sigma: f64,
}

impl Default for MspeRateSetup {
    fn default() -> Self {
        Self {
            p_ratio: 0.5,
            sigma: 1.0,
        }
    }
}

/// Mean exact MSPE of ridge at `ϱ = n^(1−θ(ν))` over `trials` designs with
/// population decay `ν` per grid size, and its log-log slope.
pub fn rate_mspe_seeded(nu: f64, n_grid: &[usize], trials: usize, setup: MspeRateSetup, seed: u64) -> Result<RateEstimate> {
    check_grid(n_grid, trials)?;
    if !(setup.p_ratio > 0.0 && setup.p_ratio.is_finite()) {
        return Err(invalid("p/n ratio must be positive"));
    }
    let theta = theta_rule(nu)?;
    let sigma_sq = setup.sigma * setup.sigma;
    let mut values = Vec::with_capacity(n_grid.len());
    for (k, &n) in n_grid.iter().enumerate() {
        let p = ((setup.p_ratio * n as f64).round() as usize).max(1);
        let varrho = exponent_to_penalty(n, theta)?;
        let beta = make_beta(p, BetaStyle::UniformUnit)?;
        let per_trial = (0..trials)
            .into_par_iter()
            .map(|t| -> Result<f64> {
                let mut rng = ChaCha8Rng::seed_from_u64(seed_split(seed, &[k as u64, t as u64]));
                let cov = make_covariance(p, nu, &mut rng)?;
                let x = sample_design(n, &cov, &mut rng)?;
                Ok(gram_mspe(&x, &beta, varrho, sigma_sq))
            })
            .collect::<Result<Vec<_>>>()?;
        values.push(per_trial.iter().sum::<f64>() / trials as f64);
    }
    Ok(RateEstimate::fit(n_grid.to_vec(), values, mspe_target_slope(nu), RATE_BAND))
}

/// [`rate_mspe_seeded`] with the seed drawn from `rng`.
pub fn rate_mspe<R: Rng + ?Sized>(
    nu: f64,
    n_grid: &[usize],
    trials: usize,
    setup: MspeRateSetup,
    rng: &mut R,
) -> Result<RateEstimate> {
    rate_mspe_seeded(nu, n_grid, trials, setup, rng.next_u64())
}

/// Mean `d2²(Fₙ, F₀)` per grid size, with `F₀` proxied by a fresh reference
/// sample of size `m_ref` in every trial.
///
/// `values` holds the raw means; the slope is fitted to
/// `log(value / log n)` against `log n`, with target `−1/2`.
pub fn rate_d2_empirical_seeded(
    noise: &NoiseSpec,
    n_grid: &[usize],
    trials: usize,
    m_ref: usize,
    seed: u64,
) -> Result<RateEstimate> {
    check_grid(n_grid, trials)?;
    let mut values = Vec::with_capacity(n_grid.len());
    for (k, &n) in n_grid.iter().enumerate() {
        let per_trial = (0..trials)
            .into_par_iter()
            .map(|t| -> Result<f64> {
                let mut rng = ChaCha8Rng::seed_from_u64(seed_split(seed, &[k as u64, t as u64]));
                let sample = sample_noise(noise, n, &mut rng);
                let empirical = EmpiricalDistribution::new(sample.as_slice().to_vec())?;
                let reference = reference_sample(noise, m_ref, &mut rng)?;
                Ok(d2_squared(&empirical, &reference))
            })
            .collect::<Result<Vec<_>>>()?;
        values.push(per_trial.iter().sum::<f64>() / trials as f64);
    }
    let adjusted: Vec<f64> = n_grid.iter().zip(&values).map(|(&n, v)| v / (n as f64).ln()).collect();
    let fit = RateEstimate::fit(n_grid.to_vec(), adjusted, -0.5, RATE_BAND);
    Ok(RateEstimate { values, ..fit })
}

/// [`rate_d2_empirical_seeded`] with the seed drawn from `rng`.
pub fn rate_d2_empirical<R: Rng + ?Sized>(
    noise: &NoiseSpec,
    n_grid: &[usize],
    trials: usize,
    m_ref: usize,
    rng: &mut R,
) -> Result<RateEstimate> {
    rate_d2_empirical_seeded(noise, n_grid, trials, m_ref, rng.next_u64())
}
