use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::Distribution;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::{CheckConfig, CheckReport, RateEstimate};
use crate::designs::{make_beta, make_covariance, sample_design, BetaStyle, NoiseSpec};
use crate::error::{invalid, Error, Result};
use crate::harness::seed_split;
use crate::linmodel::Spectrum;
use crate::mallows::{center_residuals, d2_squared, EmpiricalDistribution};
use crate::resampling::uniform_index;
use crate::tuning::exponent_to_penalty;

/// Allowed miss rate of a high-probability design event.
pub const EVENT_MISS_RATE: f64 = 0.05;

/// `τ` in the bias-event threshold.
pub const BIAS_EVENT_TAU: f64 = 1.0;

fn design_size(n: usize) -> usize {
    (n / 2).max(1)
}

fn check_sizes(n_grid: &[usize], trials: usize) -> Result<()> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[1] <= w[0]) || n_grid[0] < 4 {
        return Err(invalid("size grid must be strictly increasing with sizes >= 4"));
    }
    if trials == 0 {
        return Err(invalid("number of trials must be positive"));
    }
    Ok(())
}

/// Per-design statistics behind the design events.
struct DesignStats {
    bias_max: f64,
    inv_variance_max: f64,
}

fn design_stats(n: usize, eta: f64, gamma: f64, seed: u64) -> Result<DesignStats> {
    let p = design_size(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cov = make_covariance(p, eta, &mut rng)?;
    let x = sample_design(n, &cov, &mut rng)?;
    let beta = make_beta(p, BetaStyle::UniformUnit)?;
    let spectrum = Spectrum::new(&x)?;
    let rho = exponent_to_penalty(n, gamma)?;
    let bias_max = spectrum.fitted_bias(&beta, rho)?.iter().fold(0.0f64, |m, b| m.max(b * b));
    let inv_variance_max = spectrum
        .row_contrast_norms(rho)?
        .iter()
        .fold(0.0f64, |m, &v| m.max(1.0 / v));
    Ok(DesignStats {
        bias_max,
        inv_variance_max,
    })
}

/// `5‖β‖²(τ+1) log(n+2) · n^(−γ)` with `‖β‖ = 1`.
pub fn bias_event_threshold(n: usize, gamma: f64) -> f64 {
    5.0 * (BIAS_EVENT_TAU + 1.0) * ((n + 2) as f64).ln() * (n as f64).powf(-gamma)
}

/// Frequencies of the design events behind the uniform bias and variance
/// bounds, on designs with `p = n/2`, unit `β`, `σ = 1` and `ρ = n^(1−γ)`.
///
/// * bias: `maxᵢ b²(X; Xᵢ) ≤ 5‖β‖²(τ+1) log(n+2) n^(−γ)`;
/// * variance: `maxᵢ 1/v(X; Xᵢ) ≤ κ₂ n^(1−γ/η)`.
///
/// `κ₂` is the largest normalized statistic over an independent batch of
/// `trials` designs at the smallest grid size, then held fixed. `theta`
/// is only recorded. Each report compares the observed miss rate with
/// [`EVENT_MISS_RATE`].
pub fn check_design_events_seeded(
    eta: f64,
    gamma: f64,
    theta: f64,
    n_grid: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<CheckReport>> {
    if !(gamma > 0.0 && gamma < eta.min(1.0)) {
        return Err(Error::Precondition(format!("design events need 0 < gamma < min(eta, 1), got gamma = {gamma}, eta = {eta}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Precondition(format!("pilot exponent must lie in (0, 1), got {theta}")));
    }
    check_sizes(n_grid, trials)?;
    let var_scale = |n: usize| (n as f64).powf(1.0 - gamma / eta);

    let n0 = n_grid[0];
    let calibration = (0..trials)
        .into_par_iter()
        .map(|t| design_stats(n0, eta, gamma, seed_split(seed, &[0, t as u64])))
        .collect::<Result<Vec<_>>>()?;
    let kappa2 = calibration.iter().map(|s| s.inv_variance_max / var_scale(n0)).fold(0.0, f64::max);

    let mut reports = Vec::with_capacity(2 * n_grid.len());
    for (k, &n) in n_grid.iter().enumerate() {
        let stats = (0..trials)
            .into_par_iter()
            .map(|t| design_stats(n, eta, gamma, seed_split(seed, &[1, k as u64, t as u64])))
            .collect::<Result<Vec<_>>>()?;
        let miss = |f: &dyn Fn(&DesignStats) -> bool| stats.iter().filter(|s| !f(s)).count() as f64 / trials as f64;
        let bias_bound = bias_event_threshold(n, gamma);
        let var_bound = kappa2 * var_scale(n);
        let config = CheckConfig {
            n,
            p: design_size(n),
            eta: Some(eta),
            gamma: Some(gamma),
            theta: Some(theta),
            seed,
        };
        for (name, rate) in [
            ("bias_event", miss(&|s| s.bias_max <= bias_bound)),
            ("variance_event", miss(&|s| s.inv_variance_max <= var_bound)),
        ] {
            reports.push(CheckReport::new(name, rate, EVENT_MISS_RATE, 0.0, config));
        }
    }
    Ok(reports)
}

/// [`check_design_events_seeded`] with the seed drawn from `rng`.
pub fn check_design_events<R: Rng + ?Sized>(
    eta: f64,
    gamma: f64,
    theta: f64,
    n_grid: &[usize],
    trials: usize,
    rng: &mut R,
) -> Result<Vec<CheckReport>> {
    check_design_events_seeded(eta, gamma, theta, n_grid, trials, rng.next_u64())
}

/// Sorted row `i` of `m`, scaled by `scale`.
fn sorted_row(m: &DMatrix<f64>, i: usize, scale: f64, shift: f64) -> Result<EmpiricalDistribution<f64>> {
    EmpiricalDistribution::new(m.row(i).iter().map(|&z| (z + shift) * scale).collect())
}

/// Largest normalized squared distance between the true and bootstrap laws
/// of `X_iᵀβ̂` over all rows, for one simulated design.
///
/// Both laws are sampled `reps` times; all rows share the same error
/// matrices.
#[allow(clippy::too_many_arguments)]
fn max_row_distance(
    n: usize,
    eta: f64,
    rho: f64,
    pilot_rho: f64,
    noise: &NoiseSpec,
    reps: usize,
    design_seed: u64,
    noise_seed: u64,
) -> Result<f64> {
    let p = design_size(n);
    let sigma = noise.sigma();
    let mut rng = ChaCha8Rng::seed_from_u64(design_seed);
    let cov = make_covariance(p, eta, &mut rng)?;
    let x = sample_design(n, &cov, &mut rng)?;
    let beta = make_beta(p, BetaStyle::UniformUnit)?;
    let eps = DVector::from_iterator(n, (0..n).map(|_| noise.sample(&mut rng)));
    let y = &x * &beta + eps;

    let spectrum = Spectrum::new(&x)?;
    let residuals = center_residuals(spectrum.fit(&x, &y, pilot_rho)?.residuals.as_slice())?;
    let smoother = spectrum.smoother(rho)?;
    let bias = -spectrum.fitted_bias(&beta, rho)?;
    let norms = spectrum.row_contrast_norms(rho)?;

    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let fresh = DMatrix::from_fn(n, reps, |_, _| noise.sample(&mut rng));
    let atoms = residuals.atoms();
    let resampled = DMatrix::from_fn(n, reps, |_, _| atoms[uniform_index(&mut rng, atoms.len())]);
    let psi = &smoother * fresh;
    let phi = &smoother * resampled;

    let mut worst = 0.0f64;
    for i in 0..n {
        let v = sigma * sigma * norms[i];
        if v <= 0.0 {
            return Err(Error::DegenerateContrast);
        }
        let scale = 1.0 / v.sqrt();
        let d = d2_squared(&sorted_row(&psi, i, scale, bias[i])?, &sorted_row(&phi, i, scale, 0.0)?);
        worst = worst.max(d);
    }
    Ok(worst)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Median over `design_trials` designs of the largest normalized squared
/// distance between the true and bootstrap laws of a fitted value, with
/// `ρ = n^(1−γ)` and `ϱ = n^(1−θ)`, along `n_grid`.
///
/// Only a trend is asserted: the returned estimate has target slope 0 and
/// band `(−∞, 0]`; use [`RateEstimate::strictly_decreasing`] for the
/// monotone check.
#[allow(clippy::too_many_arguments)]
pub fn check_theorem4_seeded(
    eta: f64,
    gamma: f64,
    theta: f64,
    n_grid: &[usize],
    design_trials: usize,
    noise_reps: usize,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<RateEstimate> {
    if !(eta / (1.0 + eta) < gamma && gamma < eta.min(1.0)) {
        return Err(Error::Precondition(format!(
            "uniform consistency needs eta/(1+eta) < gamma < min(eta, 1), got gamma = {gamma}, eta = {eta}"
        )));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Precondition(format!("pilot exponent must lie in (0, 1), got {theta}")));
    }
    if noise.sigma() <= 0.0 {
        return Err(invalid("noise sigma must be positive"));
    }
    if noise_reps < 2 {
        return Err(invalid("need at least two noise repetitions"));
    }
    check_sizes(n_grid, design_trials)?;
    let mut values = Vec::with_capacity(n_grid.len());
    for (k, &n) in n_grid.iter().enumerate() {
        let rho = exponent_to_penalty(n, gamma)?;
        let pilot_rho = exponent_to_penalty(n, theta)?;
        let per_design = (0..design_trials)
            .into_par_iter()
            .map(|t| {
                let path = [k as u64, t as u64];
                max_row_distance(
                    n,
                    eta,
                    rho,
                    pilot_rho,
                    noise,
                    noise_reps,
                    seed_split(seed, &[0, path[0], path[1]]),
                    seed_split(seed, &[1, path[0], path[1]]),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        values.push(median(per_design));
    }
    let fit = RateEstimate::fit(n_grid.to_vec(), values, 0.0, 0.0);
    Ok(RateEstimate {
        band: (f64::NEG_INFINITY, 0.0),
        ..fit
    })
}

/// [`check_theorem4_seeded`] with the seed drawn from `rng`.
#[allow(clippy::too_many_arguments)]
pub fn check_theorem4<R: Rng + ?Sized>(
    eta: f64,
    gamma: f64,
    theta: f64,
    n_grid: &[usize],
    design_trials: usize,
    noise_reps: usize,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<RateEstimate> {
    check_theorem4_seeded(eta, gamma, theta, n_grid, design_trials, noise_reps, noise, rng.next_u64())
}
