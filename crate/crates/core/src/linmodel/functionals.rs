//! Conditional bias, variance and prediction-error functionals of ridge.

use nalgebra::{DMatrix, DVector};

use super::spectral::Spectrum;
use crate::error::{invalid, Error, Result};
use crate::Real;

/// Variance, squared bias and their ratio for a single contrast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastDiagnostics<T: Real> {
    pub variance: T,
    pub bias_sq: T,
    pub ratio: T,
}

fn check_sigma_sq<T: Real>(sigma_sq: T) -> Result<()> {
    if !sigma_sq.finite() || sigma_sq < T::zero() {
        return Err(invalid("noise variance must be finite and nonnegative"));
    }
    Ok(())
}

fn check_vector<T: Real>(v: &DVector<T>, what: &str) -> Result<()> {
    if v.iter().all(|x| x.finite()) {
        Ok(())
    } else {
        Err(invalid(format!("{what} contains nonfinite entries")))
    }
}

impl<T: Real> Spectrum<T> {
    /// `σ²‖cᵀ(XᵀX + ρI)⁻¹Xᵀ‖²`.
    pub fn contrast_variance(&self, c: &DVector<T>, rho: T, sigma_sq: T) -> Result<T> {
        check_sigma_sq(sigma_sq)?;
        Ok(sigma_sq * self.contrast_weights(c, rho)?.norm_squared())
    }

    pub fn contrast_bias_sq(&self, c: &DVector<T>, beta: &DVector<T>, rho: T) -> Result<T> {
        if c.len() != self.ncols() {
            return Err(invalid("contrast length does not match design columns"));
        }
        let b = c.dot(&self.bias_vector(beta, rho)?);
        Ok(b * b)
    }

    pub fn contrast_diagnostics(
        &self,
        c: &DVector<T>,
        beta: &DVector<T>,
        rho: T,
        sigma_sq: T,
    ) -> Result<ContrastDiagnostics<T>> {
        let variance = self.contrast_variance(c, rho, sigma_sq)?;
        let bias_sq = self.contrast_bias_sq(c, beta, rho)?;
        if variance <= T::zero() {
            return Err(Error::DegenerateContrast);
        }
        Ok(ContrastDiagnostics {
            variance,
            bias_sq,
            ratio: bias_sq / variance,
        })
    }

    /// Exact conditional MSPE split into (bias, variance) parts.
    ///
    /// The variance part is `(σ²/n) Σ (lᵢ/(lᵢ + ϱ/n))²` with `lᵢ` the
    /// eigenvalues of `XᵀX/n`; the bias part is `(1/n)‖X(E[β̂]-β)‖²`.
    pub fn mspe_parts(&self, beta: &DVector<T>, varrho: T, sigma_sq: T) -> Result<(T, T)> {
        check_sigma_sq(sigma_sq)?;
        let n = T::from_count(self.nrows());
        let bias = self.fitted_bias(beta, varrho)?.norm_squared() / n;
        let shrink = self.shrink_filter(varrho)?;
        let variance = sigma_sq * shrink.iter().fold(T::zero(), |acc, &f| acc + f * f) / n;
        Ok((bias, variance))
    }

    pub fn mspe_exact(&self, beta: &DVector<T>, varrho: T, sigma_sq: T) -> Result<T> {
        let (bias, variance) = self.mspe_parts(beta, varrho, sigma_sq)?;
        Ok(bias + variance)
    }
}

pub fn contrast_variance<T: Real>(x: &DMatrix<T>, c: &DVector<T>, rho: T, sigma_sq: T) -> Result<T> {
    check_vector(c, "contrast")?;
    Spectrum::new(x)?.contrast_variance(c, rho, sigma_sq)
}

/// `δ(X) = [I - (XᵀX + ρI)⁻¹XᵀX] β`.
pub fn bias_vector<T: Real>(x: &DMatrix<T>, beta: &DVector<T>, rho: T) -> Result<DVector<T>> {
    check_vector(beta, "beta")?;
    Spectrum::new(x)?.bias_vector(beta, rho)
}

/// `(cᵀδ(X))²`.
pub fn contrast_bias_sq<T: Real>(x: &DMatrix<T>, c: &DVector<T>, beta: &DVector<T>, rho: T) -> Result<T> {
    check_vector(c, "contrast")?;
    check_vector(beta, "beta")?;
    Spectrum::new(x)?.contrast_bias_sq(c, beta, rho)
}

pub fn contrast_diagnostics<T: Real>(
    x: &DMatrix<T>,
    c: &DVector<T>,
    beta: &DVector<T>,
    rho: T,
    sigma_sq: T,
) -> Result<ContrastDiagnostics<T>> {
    check_vector(c, "contrast")?;
    check_vector(beta, "beta")?;
    Spectrum::new(x)?.contrast_diagnostics(c, beta, rho, sigma_sq)
}

/// Exact conditional mean-squared prediction error of ridge at penalty `varrho`.
///
/// Includes the `σ²` factor on the variance term.
pub fn mspe_exact<T: Real>(x: &DMatrix<T>, beta: &DVector<T>, varrho: T, sigma_sq: T) -> Result<T> {
    check_vector(beta, "beta")?;
    Spectrum::new(x)?.mspe_exact(beta, varrho, sigma_sq)
}

/// Pilot-penalty exponent `θ` for a sample-eigenvalue decay exponent `ν`.
pub fn theta_rule<T: Real>(nu: T) -> Result<T> {
    if !nu.finite() || nu <= T::zero() {
        return Err(invalid("decay exponent must be positive"));
    }
    let half = T::lit(0.5);
    Ok(if nu < half {
        T::lit(2.0) * nu / T::lit(3.0)
    } else if nu > half {
        nu / (nu + T::one())
    } else {
        T::one() / T::lit(3.0)
    })
}
