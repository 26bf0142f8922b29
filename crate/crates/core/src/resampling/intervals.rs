use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::draws::Prepared;
use crate::error::{invalid, Error, Result};
use crate::harness::seed_split;
use crate::linmodel::{Dataset, Spectrum};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Oracle,
    RidgeRb,
    Normal,
    OlsRb,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Oracle, Method::RidgeRb, Method::Normal, Method::OlsRb];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Oracle => "oracle",
            Method::RidgeRb => "ridge_rb",
            Method::Normal => "normal",
            Method::OlsRb => "ols_rb",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown method `{s}` (expected oracle, ridge_rb, normal or ols_rb)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval<T: Real> {
    pub method: Method,
    pub level: T,
    pub lower: T,
    pub upper: T,
    /// Point estimate `cᵀβ̂ρ` the interval was built around.
    pub estimate: T,
}

impl<T: Real> ConfidenceInterval<T> {
    pub fn width(&self) -> T {
        self.upper - self.lower
    }

    pub fn contains(&self, target: T) -> bool {
        self.lower <= target && target <= self.upper
    }

    /// `[estimate − q_{(1+L)/2}, estimate − q_{(1−L)/2}]` for the error law
    /// sampled in `values`.
    pub fn from_error_law(method: Method, estimate: T, values: &[T], level: T) -> Result<Self> {
        check_level(level)?;
        let two = T::lit(2.0);
        let hi = quantile(values, (T::one() + level) / two)?;
        let lo = quantile(values, (T::one() - level) / two)?;
        Ok(Self {
            method,
            level,
            lower: estimate - hi,
            upper: estimate - lo,
            estimate,
        })
    }
}

fn check_level<T: Real>(level: T) -> Result<()> {
    if level > T::zero() && level < T::one() {
        Ok(())
    } else {
        Err(invalid(format!("confidence level must lie in (0, 1), got {level}")))
    }
}

/// Order-statistic quantile: the `⌈αB⌉`-th smallest value (1-based),
/// clamped to `1..=B`. No interpolation.
pub fn quantile<T: Real>(values: &[T], alpha: T) -> Result<T> {
    if values.is_empty() {
        return Err(invalid("quantile of an empty sample"));
    }
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(invalid(format!("quantile level must lie in [0, 1], got {alpha}")));
    }
    let b = values.len();
    let rank = (alpha * T::from_count(b)).ceil().as_f64() as usize;
    let rank = rank.clamp(1, b);
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(sorted[rank - 1])
}

/// Two-stage residual bootstrap interval: residuals from a pilot ridge fit at
/// `pilot_rho`, inference with the ridge contrast at `rho`.
#[allow(clippy::too_many_arguments)]
pub fn ci_ridge_rb<T: Real, R: Rng + ?Sized>(
    data: &Dataset<T>,
    c: &DVector<T>,
    rho: T,
    pilot_rho: T,
    b: usize,
    level: T,
    rng: &mut R,
) -> Result<ConfidenceInterval<T>> {
    check_level(level)?;
    let spectrum = Spectrum::new(data.x())?;
    rb_interval(Method::RidgeRb, &spectrum, data, c, rho, pilot_rho, b, level, rng.next_u64())
}

/// Residual bootstrap with least squares in both stages.
pub fn ci_ols_rb<T: Real, R: Rng + ?Sized>(
    data: &Dataset<T>,
    c: &DVector<T>,
    b: usize,
    level: T,
    rng: &mut R,
) -> Result<ConfidenceInterval<T>> {
    check_level(level)?;
    let spectrum = Spectrum::new(data.x())?;
    rb_interval(Method::OlsRb, &spectrum, data, c, T::zero(), T::zero(), b, level, rng.next_u64())
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn rb_interval<T: Real>(
    method: Method,
    spectrum: &Spectrum<T>,
    data: &Dataset<T>,
    c: &DVector<T>,
    rho: T,
    pilot_rho: T,
    b: usize,
    level: T,
    master: u64,
) -> Result<ConfidenceInterval<T>> {
    let prepared = Prepared::new(spectrum, data, c, rho, pilot_rho)?;
    let draws = prepared.draws(b, master)?;
    ConfidenceInterval::from_error_law(method, prepared.estimate, &draws.values, level)
}

/// `σ̂² = ‖Y − Xβ̂_LS‖² / (n − p)`.
pub fn ols_noise_variance<T: Real>(spectrum: &Spectrum<T>, data: &Dataset<T>) -> Result<T> {
    let (n, p) = (data.n(), data.p());
    if p >= n {
        return Err(Error::UnestimableVariance { n, p });
    }
    let ols = spectrum.fit(data.x(), data.y(), T::zero())?;
    Ok(ols.residuals.norm_squared() / T::from_count(n - p))
}

/// `cᵀβ̂ρ ± z_{(1+L)/2}·τ̂` with `τ̂² = σ̂²‖cᵀ(XᵀX + ρI)⁻¹Xᵀ‖²` and `σ̂²`
/// from least-squares residuals.
pub fn ci_normal<T: Real>(data: &Dataset<T>, c: &DVector<T>, rho: T, level: T) -> Result<ConfidenceInterval<T>> {
    check_level(level)?;
    let spectrum = Spectrum::new(data.x())?;
    normal_interval(&spectrum, data, c, rho, level)
}

pub(crate) fn normal_interval<T: Real>(
    spectrum: &Spectrum<T>,
    data: &Dataset<T>,
    c: &DVector<T>,
    rho: T,
    level: T,
) -> Result<ConfidenceInterval<T>> {
    let sigma_sq = ols_noise_variance(spectrum, data)?;
    let weights = spectrum.contrast_weights(c, rho)?;
    let estimate = c.dot(&spectrum.coefficients(data.y(), rho)?);
    let tau = (sigma_sq * weights.norm_squared()).sqrt();
    let z = T::lit(normal_quantile((T::one() + level).as_f64() / 2.0));
    Ok(ConfidenceInterval {
        method: Method::Normal,
        level,
        lower: estimate - z * tau,
        upper: estimate + z * tau,
        estimate,
    })
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Sampled law of the estimation error `cᵀ(β̂ρ − β)` over fresh responses
/// from a fixed design.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleLaw<T: Real> {
    pub errors: Vec<T>,
}

impl<T: Real> OracleLaw<T> {
    pub fn interval(&self, estimate: T, level: T) -> Result<ConfidenceInterval<T>> {
        ConfidenceInterval::from_error_law(Method::Oracle, estimate, &self.errors, level)
    }
}

/// Response `Xβ + ε` for realization `r` together with its generator, which
/// is left positioned after the noise draws.
fn realization<T, D>(x: &DMatrix<T>, signal: &DVector<T>, noise: &D, master: u64, r: usize) -> (DVector<T>, ChaCha8Rng)
where
    T: Real,
    D: Distribution<T> + ?Sized,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed_split(master, &[r as u64]));
    let y = DVector::from_fn(x.nrows(), |i, _| signal[i] + noise.sample(&mut rng));
    (y, rng)
}

/// Draws `n2` responses `Y = Xβ + ε`, picks `ρ` for each through
/// `rho_provider` and records `cᵀ(β̂ρ − β)`.
///
/// `rho_provider` receives the simulated dataset and a seed reserved for
/// its own randomness (cross-validation folds, say).
#[allow(clippy::too_many_arguments)]
pub fn oracle_law<T, D, F, R>(
    x: &DMatrix<T>,
    beta: &DVector<T>,
    noise: &D,
    rho_provider: F,
    c: &DVector<T>,
    n2: usize,
    rng: &mut R,
) -> Result<OracleLaw<T>>
where
    T: Real,
    D: Distribution<T> + Sync + ?Sized,
    F: Fn(&Dataset<T>, u64) -> Result<T> + Sync,
    R: Rng + ?Sized,
{
    if n2 == 0 {
        return Err(invalid("oracle needs at least one response"));
    }
    let spectrum = Spectrum::new(x)?;
    let signal = x * beta;
    let target = c.dot(beta);
    let master = rng.next_u64();
    let errors = (0..n2)
        .into_par_iter()
        .map(|r| {
            let (y, mut rng) = realization(x, &signal, noise, master, r);
            let data = Dataset::observed(x.clone(), y)?;
            let rho = rho_provider(&data, rng.next_u64())?;
            Ok(c.dot(&spectrum.coefficients(data.y(), rho)?) - target)
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(OracleLaw { errors })
}

/// Oracle interval: quantiles of `cᵀ(β̂ρ − β)` over `n2` simulated
/// responses, placed around the estimate from one further independent
/// response.
#[allow(clippy::too_many_arguments)]
pub fn ci_oracle<T, D, F, R>(
    x: &DMatrix<T>,
    beta: &DVector<T>,
    noise: &D,
    rho_provider: F,
    c: &DVector<T>,
    n2: usize,
    level: T,
    rng: &mut R,
) -> Result<ConfidenceInterval<T>>
where
    T: Real,
    D: Distribution<T> + Sync + ?Sized,
    F: Fn(&Dataset<T>, u64) -> Result<T> + Sync,
    R: Rng + ?Sized,
{
    check_level(level)?;
    let law = oracle_law(x, beta, noise, &rho_provider, c, n2, rng)?;
    let (y, mut fresh) = realization(x, &(x * beta), noise, rng.next_u64(), 0);
    let data = Dataset::observed(x.clone(), y)?;
    let rho = rho_provider(&data, fresh.next_u64())?;
    let estimate = c.dot(&Spectrum::new(x)?.coefficients(data.y(), rho)?);
    law.interval(estimate, level)
}
