use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};

/// Population covariance `Σ = Q diag(λ) Qᵀ` with `λⱼ = j^(−η)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    p: usize,
    eta: f64,
    eigenvalues: DVector<f64>,
    eigenbasis: DMatrix<f64>,
    root: DMatrix<f64>,
}

impl CovarianceModel {
    /// Builds the model from an explicit orthogonal basis.
    pub fn from_basis(eta: f64, eigenbasis: DMatrix<f64>) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(invalid(format!("decay exponent must be finite and nonnegative, got {eta}")));
        }
        let p = eigenbasis.nrows();
        if p == 0 || eigenbasis.ncols() != p {
            return Err(invalid("eigenbasis must be a nonempty square matrix"));
        }
        let eigenvalues = DVector::from_fn(p, |j, _| ((j + 1) as f64).powf(-eta));
        let root = if eta == 0.0 {
            DMatrix::identity(p, p)
        } else {
            spectral_power(&eigenbasis, &eigenvalues, 0.5)
        };
        Ok(Self {
            p,
            eta,
            eigenvalues,
            eigenbasis,
            root,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `λⱼ = j^(−η)`, descending with `λ₁ = 1`.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenbasis(&self) -> &DMatrix<f64> {
        &self.eigenbasis
    }

    /// `Σ`. Exactly the identity when `η = 0`.
    pub fn sigma(&self) -> DMatrix<f64> {
        if self.eta == 0.0 {
            DMatrix::identity(self.p, self.p)
        } else {
            spectral_power(&self.eigenbasis, &self.eigenvalues, 1.0)
        }
    }

    /// Symmetric square root `Σ^(1/2) = Q diag(√λ) Qᵀ`.
    pub fn sqrt(&self) -> &DMatrix<f64> {
        &self.root
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.sum()
    }
}

fn spectral_power(q: &DMatrix<f64>, lambda: &DVector<f64>, power: f64) -> DMatrix<f64> {
    let mut scaled = q.clone();
    for (mut col, &l) in scaled.column_iter_mut().zip(lambda.iter()) {
        col *= l.powf(power);
    }
    scaled * q.transpose()
}

/// Matrix of i.i.d. standard normal entries, filled column by column.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for v in m.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    m
}

/// Orthogonal factor of the QR decomposition of a `p × p` standard Gaussian
/// matrix, with column signs chosen so that `R` has a nonnegative diagonal.
pub fn haar_orthogonal<R: Rng + ?Sized>(p: usize, rng: &mut R) -> DMatrix<f64> {
    let qr = gaussian_matrix(p, p, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Covariance with eigenvalues `j^(−η)` in a random orthogonal basis.
pub fn make_covariance<R: Rng + ?Sized>(p: usize, eta: f64, rng: &mut R) -> Result<CovarianceModel> {
    if p == 0 {
        return Err(invalid("dimension p must be positive"));
    }
    CovarianceModel::from_basis(eta, haar_orthogonal(p, rng))
}

/// `X = ZΣ^(1/2)` with `Z` an `n × p` standard Gaussian matrix, so the rows
/// of `X` are i.i.d. `N(0, Σ)`.
pub fn sample_design<R: Rng + ?Sized>(n: usize, cov: &CovarianceModel, rng: &mut R) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(invalid("sample size n must be positive"));
    }
    Ok(gaussian_matrix(n, cov.p(), rng) * cov.sqrt())
}
