//! Synthetic near low-rank Gaussian designs, coefficient vectors and error
//! laws.

mod covariance;
mod noise;

use nalgebra::DVector;
use rand::Rng;

pub use covariance::{gaussian_matrix, haar_orthogonal, make_covariance, sample_design, CovarianceModel};
pub use noise::{sample_noise, NoiseFamily, NoiseSpec};

use crate::error::{invalid, Error, Result};
use crate::linmodel::Dataset;
use crate::regression::least_squares_slope;

#[derive(Debug, Clone, PartialEq)]
pub enum BetaStyle {
    /// `1/‖1‖₂`.
    UniformUnit,
    Custom(DVector<f64>),
}

pub fn make_beta(p: usize, style: BetaStyle) -> Result<DVector<f64>> {
    if p == 0 {
        return Err(invalid("dimension p must be positive"));
    }
    match style {
        BetaStyle::UniformUnit => Ok(DVector::from_element(p, 1.0 / (p as f64).sqrt())),
        BetaStyle::Custom(beta) if beta.len() == p => Ok(beta),
        BetaStyle::Custom(beta) => Err(invalid(format!("custom beta has length {}, expected {p}", beta.len()))),
    }
}

/// Draws `X` and then `ε` from `rng` and returns `(X, Xβ + ε)` in simulation
/// mode.
pub fn generate_dataset<R: Rng + ?Sized>(
    n: usize,
    cov: &CovarianceModel,
    beta: &DVector<f64>,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<Dataset<f64>> {
    if beta.len() != cov.p() {
        return Err(invalid("beta length does not match covariance dimension"));
    }
    let x = sample_design(n, cov, rng)?;
    let y = &x * beta + sample_noise(spec, n, rng);
    Dataset::simulated(x, y, beta.clone(), spec.sigma())
}

/// Eigenvalues below this are treated as numerical zeros.
pub const DECAY_FLOOR: f64 = 1e-12;

/// Decay exponent `ν̂`: minus the slope of the least-squares line of
/// `log λᵢ` on `log i`, over eigenvalues at or above [`DECAY_FLOOR`].
///
/// Indices keep their original position, so a dropped eigenvalue does not
/// shift the ones after it.
pub fn estimate_decay(sample_eigenvalues: &[f64]) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = sample_eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l.is_finite() && l >= DECAY_FLOOR)
        .map(|(i, &l)| (((i + 1) as f64).ln(), l.ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs at least 3 eigenvalues above {DECAY_FLOOR:e}, got {}",
            xs.len()
        )));
    }
    Ok(-least_squares_slope(&xs, &ys))
}

/// Tightest constants with `κ₁ i^(−η) ≤ λᵢ ≤ κ₂ i^(−η)` over the usable
/// eigenvalues.
pub fn power_law_bracket(sample_eigenvalues: &[f64], eta: f64) -> (f64, f64) {
    sample_eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l >= DECAY_FLOOR)
        .map(|(i, &l)| l * ((i + 1) as f64).powf(eta))
        .fold((f64::INFINITY, 0.0), |(lo, hi), k| (lo.min(k), hi.max(k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmodel::{ols_fit, Spectrum};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn beta_examples() {
        assert_eq!(make_beta(4, BetaStyle::UniformUnit).unwrap(), DVector::from_element(4, 0.5));
        assert_eq!(make_beta(1, BetaStyle::UniformUnit).unwrap(), DVector::from_element(1, 1.0));
        for p in [2, 7, 95] {
            assert!((make_beta(p, BetaStyle::UniformUnit).unwrap().norm() - 1.0).abs() < 1e-14);
        }
        assert!(make_beta(3, BetaStyle::Custom(DVector::zeros(2))).is_err());
        assert!(make_beta(0, BetaStyle::UniformUnit).is_err());
    }

    #[test]
    fn noiseless_dataset_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cov = make_covariance(5, 1.0, &mut rng).unwrap();
        let beta = make_beta(5, BetaStyle::UniformUnit).unwrap();
        let data = generate_dataset(20, &cov, &beta, &NoiseSpec::normal(0.0).unwrap(), &mut rng).unwrap();
        assert_eq!(data.y(), &(data.x() * &beta));
        assert_eq!(data.sigma_true(), Some(0.0));
        assert_eq!(data.beta_true(), Some(&beta));
    }

    #[test]
    fn ols_residuals_understate_sigma() {
        let spec = NoiseSpec::t5(0.1).unwrap();
        let mut total = 0.0;
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cov = make_covariance(45, 0.5, &mut rng).unwrap();
            let beta = make_beta(45, BetaStyle::UniformUnit).unwrap();
            let data = generate_dataset(100, &cov, &beta, &spec, &mut rng).unwrap();
            let r = ols_fit(&data).unwrap().residuals;
            total += (r.norm_squared() / 100.0).sqrt();
        }
        let mean_sd = total / 200.0;
        // E‖r‖²/n = σ²(n − p)/n, so the mean SD sits near 0.1·√0.55.
        assert!(mean_sd < 0.1 && mean_sd > 0.06, "{mean_sd}");
    }

    #[test]
    fn dataset_is_seed_deterministic() {
        let make = || {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let cov = make_covariance(6, 0.5, &mut rng).unwrap();
            let beta = make_beta(6, BetaStyle::UniformUnit).unwrap();
            generate_dataset(15, &cov, &beta, &NoiseSpec::t5(0.1).unwrap(), &mut rng).unwrap()
        };
        assert_eq!(make(), make());
    }

    #[test]
    fn decay_of_exact_power_laws() {
        let l: Vec<f64> = (1..=40).map(|i| 1.0 / i as f64).collect();
        assert!((estimate_decay(&l).unwrap() - 1.0).abs() < 1e-10);
        let l: Vec<f64> = (1..=40).map(|i| 2.0 * (i as f64).powf(-0.5)).collect();
        assert!((estimate_decay(&l).unwrap() - 0.5).abs() < 1e-10);
        // Zeros are dropped without shifting later indices.
        let mut l: Vec<f64> = (1..=10).map(|i| (i as f64).powi(-2)).collect();
        l[4] = 0.0;
        assert!((estimate_decay(&l).unwrap() - 2.0).abs() < 1e-10);
        assert!(matches!(estimate_decay(&[1.0, 0.5, 0.0]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn decay_of_sample_spectrum() {
        // At p/n = 1/2 the lower edge of the sample spectrum is compressed
        // well below the population profile, so the full-range fit steepens
        // to about 1.32. The leading half tracks the population exponent.
        let (mut head, mut full) = (Vec::new(), Vec::new());
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cov = make_covariance(250, 1.0, &mut rng).unwrap();
            let x = sample_design(500, &cov, &mut rng).unwrap();
            let eig = Spectrum::new(&x).unwrap().sample_eigenvalues();
            head.push(estimate_decay(&eig.as_slice()[..125]).unwrap());
            full.push(estimate_decay(eig.as_slice()).unwrap());
        }
        let range = |v: &[f64]| v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
        let (lo, hi) = range(&head);
        assert!(lo >= 0.7 && hi <= 1.3, "leading half [{lo}, {hi}]");
        let (lo, hi) = range(&full);
        assert!(lo > 1.0 && hi - lo < 0.1, "full range [{lo}, {hi}]");
    }

    #[test]
    fn bracket_of_exact_law_is_tight() {
        let l: Vec<f64> = (1..=30).map(|i| 3.0 * (i as f64).powf(-0.5)).collect();
        let (k1, k2) = power_law_bracket(&l, 0.5);
        assert!((k1 - 3.0).abs() < 1e-12 && (k2 - 3.0).abs() < 1e-12);
    }
}
