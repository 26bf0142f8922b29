use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;

use super::report::{CheckConfig, CheckReport};
use crate::designs::{sample_noise, NoiseSpec};
use crate::error::{invalid, Error, Result};
use crate::harness::seed_split;
use crate::linmodel::{Dataset, Spectrum};
use crate::mallows::{center_residuals, d2_squared, reference_sample, EmpiricalDistribution};

/// Relative slack granted to Monte Carlo bounds.
pub const BOUND_SLACK: f64 = 0.05;

/// Default size of the reference sample standing in for a continuous law.
pub const DEFAULT_M_REF: usize = 100_000;

/// Sample sizes for the left side of the contrast-law bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleSizes {
    /// Draws from the true contrast law.
    pub m_psi: usize,
    /// Bootstrap draws.
    pub m_phi: usize,
}

impl Default for SampleSizes {
    fn default() -> Self {
        Self {
            m_psi: 100_000,
            m_phi: 100_000,
        }
    }
}

/// `m` draws of `wᵀε + shift` with `ε` i.i.d. from `law`; draw `j` uses its
/// own stream so the result does not depend on the thread count.
pub(crate) fn linear_draws<D>(weights: &DVector<f64>, shift: f64, law: &D, m: usize, master: u64) -> Vec<f64>
where
    D: Distribution<f64> + Sync,
{
    (0..m)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed_split(master, &[j as u64]));
            weights.iter().fold(shift, |acc, &w| acc + w * law.sample(&mut rng))
        })
        .collect()
}

/// Uniform law over a fixed list of atoms.
struct AtomLaw<'a>(&'a [f64]);

impl Distribution<f64> for AtomLaw<'_> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.0[crate::resampling::uniform_index(rng, self.0.len())]
    }
}

fn truth(data: &Dataset<f64>) -> Result<(&DVector<f64>, f64)> {
    match (data.beta_true(), data.sigma_true()) {
        (Some(beta), Some(sigma)) => Ok((beta, sigma)),
        _ => Err(invalid("check needs a simulated dataset with known beta and sigma")),
    }
}

/// Both sides of the bound on the distance between the normalized true and
/// bootstrap contrast laws, for a given residual law `residuals`.
///
/// Returns `(lhs, rhs)`, where `lhs` is the squared distance between `m_psi`
/// draws of `(aᵀε − cᵀδ)/√v` and `m_phi` draws of `aᵀε*/√v`, and `rhs` is
/// `d2²(F̂, F₀)/σ² + b²/v` with the first term computed exactly from the
/// law of `noise`.
#[allow(clippy::too_many_arguments)]
pub fn theorem1_sides(
    spectrum: &Spectrum<f64>,
    beta: &DVector<f64>,
    c: &DVector<f64>,
    rho: f64,
    residuals: &EmpiricalDistribution<f64>,
    noise: &NoiseSpec,
    sizes: SampleSizes,
    seed: u64,
) -> Result<(f64, f64)> {
    let sigma = noise.sigma();
    if sigma <= 0.0 {
        return Err(invalid("noise sigma must be positive"));
    }
    let a = spectrum.contrast_weights(c, rho)?;
    let v = sigma * sigma * a.norm_squared();
    if v <= 0.0 {
        return Err(Error::DegenerateContrast);
    }
    let bias = -c.dot(&spectrum.bias_vector(beta, rho)?);
    let scale = 1.0 / v.sqrt();
    let a_norm = &a * scale;

    let psi = linear_draws(&a_norm, bias * scale, noise, sizes.m_psi, seed_split(seed, &[0]));
    let phi = linear_draws(&a_norm, 0.0, &AtomLaw(residuals.atoms()), sizes.m_phi, seed_split(seed, &[1]));
    let lhs = d2_squared(&EmpiricalDistribution::new(psi)?, &EmpiricalDistribution::new(phi)?);

    let rhs = noise.d2_squared_to_law(residuals)? / (sigma * sigma) + bias * bias / v;
    Ok((lhs, rhs))
}

/// Contrast-law bound at the pilot residuals of `data`.
#[allow(clippy::too_many_arguments)]
pub fn check_theorem1_seeded(
    data: &Dataset<f64>,
    c: &DVector<f64>,
    rho: f64,
    pilot_rho: f64,
    noise: &NoiseSpec,
    sizes: SampleSizes,
    seed: u64,
) -> Result<CheckReport> {
    let (beta, _) = truth(data)?;
    let spectrum = Spectrum::new(data.x())?;
    let pilot = spectrum.fit(data.x(), data.y(), pilot_rho)?;
    let residuals = center_residuals(pilot.residuals.as_slice())?;
    let (lhs, rhs) = theorem1_sides(&spectrum, beta, c, rho, &residuals, noise, sizes, seed)?;
    let config = CheckConfig {
        n: data.n(),
        p: data.p(),
        seed,
        ..CheckConfig::default()
    };
    Ok(CheckReport::with_relative_slack("theorem1", lhs, rhs, BOUND_SLACK, config))
}

/// [`check_theorem1_seeded`] with the seed drawn from `rng`.
#[allow(clippy::too_many_arguments)]
pub fn check_theorem1<R: Rng + ?Sized>(
    data: &Dataset<f64>,
    c: &DVector<f64>,
    rho: f64,
    pilot_rho: f64,
    noise: &NoiseSpec,
    sizes: SampleSizes,
    rng: &mut R,
) -> Result<CheckReport> {
    check_theorem1_seeded(data, c, rho, pilot_rho, noise, sizes, rng.next_u64())
}

/// Estimator whose residual law enters the prediction-error link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Ridge { varrho: f64 },
    Ols,
    /// `β̂ = β`.
    Perfect,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Ridge { .. } => "ridge",
            Estimator::Ols => "ols",
            Estimator::Perfect => "perfect",
        }
    }
}

/// Both sides of the prediction-error link,
/// `E d2²(F̂, F₀) ≤ 2·mspe + 2·E d2²(Fₙ, F₀) + 2σ²/n`, with the design held
/// fixed and `reps` fresh error vectors.
///
/// One reference sample of size `m_ref` stands in for `F₀` on both sides.
pub fn mspe_link_sides(
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    noise: &NoiseSpec,
    estimator: Estimator,
    reps: usize,
    m_ref: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if reps == 0 {
        return Err(invalid("number of repetitions must be positive"));
    }
    let n = x.nrows();
    let sigma_sq = noise.sigma() * noise.sigma();
    let spectrum = Spectrum::new(x)?;
    let mspe = match estimator {
        Estimator::Ridge { varrho } => spectrum.mspe_exact(beta, varrho, sigma_sq)?,
        Estimator::Ols => spectrum.mspe_exact(beta, 0.0, sigma_sq)?,
        Estimator::Perfect => 0.0,
    };
    let penalty = match estimator {
        Estimator::Ridge { varrho } => Some(varrho),
        Estimator::Ols => Some(0.0),
        Estimator::Perfect => None,
    };
    let mut ref_rng = ChaCha8Rng::seed_from_u64(seed_split(seed, &[0]));
    let reference = reference_sample(noise, m_ref, &mut ref_rng)?;
    let mean = x * beta;

    let pairs = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed_split(seed, &[1, r as u64]));
            let eps = sample_noise(noise, n, &mut rng);
            let residuals = match penalty {
                Some(rho) => spectrum.fit(x, &(&mean + &eps), rho)?.residuals,
                None => eps.clone(),
            };
            let fitted = center_residuals(residuals.as_slice())?;
            let errors = EmpiricalDistribution::new(eps.as_slice().to_vec())?;
            Ok((d2_squared(&fitted, &reference), d2_squared(&errors, &reference)))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = reps as f64;
    let lhs = pairs.iter().map(|p| p.0).sum::<f64>() / k;
    let errors = pairs.iter().map(|p| p.1).sum::<f64>() / k;
    Ok((lhs, 2.0 * mspe + 2.0 * errors + 2.0 * sigma_sq / n as f64))
}

pub fn check_mspe_link_seeded(
    data: &Dataset<f64>,
    noise: &NoiseSpec,
    estimator: Estimator,
    reps: usize,
    m_ref: usize,
    seed: u64,
) -> Result<CheckReport> {
    let (beta, _) = truth(data)?;
    let (lhs, rhs) = mspe_link_sides(data.x(), beta, noise, estimator, reps, m_ref, seed)?;
    let config = CheckConfig {
        n: data.n(),
        p: data.p(),
        seed,
        ..CheckConfig::default()
    };
    let name = format!("mspe_link_{}", estimator.name());
    Ok(CheckReport::with_relative_slack(name, lhs, rhs, BOUND_SLACK, config))
}

/// [`check_mspe_link_seeded`] with the seed drawn from `rng`.
pub fn check_mspe_link<R: Rng + ?Sized>(
    data: &Dataset<f64>,
    noise: &NoiseSpec,
    estimator: Estimator,
    reps: usize,
    m_ref: usize,
    rng: &mut R,
) -> Result<CheckReport> {
    check_mspe_link_seeded(data, noise, estimator, reps, m_ref, rng.next_u64())
}
