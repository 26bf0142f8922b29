use nalgebra::{DMatrix, DVector};

use super::dataset::Dataset;
use super::spectral::Spectrum;
use crate::error::Result;
use crate::Real;

/// A fitted ridge (or least-squares, `rho = 0`) estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit<T: Real> {
    pub rho: T,
    pub coefficients: DVector<T>,
    pub residuals: DVector<T>,
    pub fitted: DVector<T>,
}

impl<T: Real> Spectrum<T> {
    /// Fit against `y` reusing this decomposition.
    pub fn fit(&self, x: &DMatrix<T>, y: &DVector<T>, rho: T) -> Result<RidgeFit<T>> {
        let coefficients = self.coefficients(y, rho)?;
        let fitted = x * &coefficients;
        let residuals = y - &fitted;
        Ok(RidgeFit {
            rho,
            coefficients,
            residuals,
            fitted,
        })
    }
}

/// Ridge estimator `(XᵀX + ρI)⁻¹XᵀY` through the SVD of `X`.
///
/// `rho = 0` is accepted when `X` has full column rank and `p <= n`.
pub fn ridge_fit<T: Real>(data: &Dataset<T>, rho: T) -> Result<RidgeFit<T>> {
    Spectrum::new(data.x())?.fit(data.x(), data.y(), rho)
}

pub fn ols_fit<T: Real>(data: &Dataset<T>) -> Result<RidgeFit<T>> {
    ridge_fit(data, T::zero())
}

/// Hat-matrix diagonal and the index of the largest score (first on ties).
pub fn leverage_scores<T: Real>(x: &DMatrix<T>) -> Result<(DVector<T>, usize)> {
    let scores = Spectrum::new(x)?.hat_diagonal()?;
    let argmax = argmax_first(&scores);
    Ok((scores, argmax))
}

pub(crate) fn argmax_first<T: Real>(values: &DVector<T>) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
