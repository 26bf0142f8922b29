//! Thin singular-value decomposition of a design, reused across penalties.
//!
//! With `X = U diag(s) Vᵀ` every ridge quantity is a spectral filter:
//!
//! * `(XᵀX + ρI)⁻¹Xᵀ = V diag(s / (s² + ρ)) Uᵀ`
//! * `I - (XᵀX + ρI)⁻¹XᵀX = I - V diag(s² / (s² + ρ)) Vᵀ`
//!
//! Both identities hold for wide designs as well, since the range of `Xᵀ`
//! lies in the span of `V`.

use nalgebra::{DMatrix, DVector};

use super::dataset::check_design;
use crate::error::{invalid, Error, Result};
use crate::Real;

#[derive(Debug, Clone)]
pub struct Spectrum<T: Real> {
    u: DMatrix<T>,
    s: DVector<T>,
    v: DMatrix<T>,
    rank: usize,
}

impl<T: Real> Spectrum<T> {
    pub fn new(x: &DMatrix<T>) -> Result<Self> {
        check_design(x)?;
        let (n, p) = x.shape();
        let svd = x.clone().svd(true, true);
        let u = svd.u.ok_or_else(|| Error::Singular("SVD did not converge".into()))?;
        let v_t = svd
            .v_t
            .ok_or_else(|| Error::Singular("SVD did not converge".into()))?;
        let k = svd.singular_values.len();

        // Descending order, independent of the backend's convention.
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[b]
                .partial_cmp(&svd.singular_values[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let s = DVector::from_iterator(k, order.iter().map(|&j| svd.singular_values[j]));
        let u = DMatrix::from_fn(n, k, |i, j| u[(i, order[j])]);
        let v = DMatrix::from_fn(p, k, |i, j| v_t[(order[j], i)]);

        let tol = if k == 0 {
            T::zero()
        } else {
            s[0] * T::from_count(n.max(p)) * T::default_epsilon()
        };
        let rank = s.iter().filter(|&&sv| sv > tol).count();
        Ok(Self { u, s, v, rank })
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    pub fn singular_values(&self) -> &DVector<T> {
        &self.s
    }

    /// Left singular vectors, `n × min(n, p)`.
    pub fn u(&self) -> &DMatrix<T> {
        &self.u
    }

    /// Right singular vectors, `p × min(n, p)`.
    pub fn v(&self) -> &DMatrix<T> {
        &self.v
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn full_column_rank(&self) -> bool {
        self.ncols() <= self.nrows() && self.rank == self.ncols()
    }

    /// Eigenvalues of `XᵀX / n` (the nonzero part), descending.
    pub fn sample_eigenvalues(&self) -> DVector<T> {
        let n = T::from_count(self.nrows());
        self.s.map(|sv| sv * sv / n)
    }

    fn check_penalty(&self, rho: T) -> Result<()> {
        if !rho.finite() || rho < T::zero() {
            return Err(invalid("penalty must be finite and nonnegative"));
        }
        if rho == T::zero() && !self.full_column_rank() {
            return Err(Error::Singular(format!(
                "unpenalized fit needs full column rank with p <= n (n = {}, p = {}, rank = {})",
                self.nrows(),
                self.ncols(),
                self.rank
            )));
        }
        Ok(())
    }

    /// `s / (s² + ρ)`, the filter of `(XᵀX + ρI)⁻¹Xᵀ`.
    pub fn solve_filter(&self, rho: T) -> Result<DVector<T>> {
        self.check_penalty(rho)?;
        Ok(self.s.map(|sv| {
            let d = sv * sv + rho;
            if d > T::zero() {
                sv / d
            } else {
                T::zero()
            }
        }))
    }

    /// `s² / (s² + ρ)`, the filter of `X(XᵀX + ρI)⁻¹Xᵀ`.
    pub fn shrink_filter(&self, rho: T) -> Result<DVector<T>> {
        self.check_penalty(rho)?;
        Ok(self.s.map(|sv| {
            let s2 = sv * sv;
            if s2 + rho > T::zero() {
                s2 / (s2 + rho)
            } else {
                T::zero()
            }
        }))
    }

    /// `(XᵀX + ρI)⁻¹XᵀY`.
    pub fn coefficients(&self, y: &DVector<T>, rho: T) -> Result<DVector<T>> {
        if y.len() != self.nrows() {
            return Err(invalid("response length does not match design"));
        }
        let filter = self.solve_filter(rho)?;
        let uty = self.u.tr_mul(y).component_mul(&filter);
        Ok(&self.v * uty)
    }

    /// Row vector `cᵀ(XᵀX + ρI)⁻¹Xᵀ`, returned as a length-`n` column.
    pub fn contrast_weights(&self, c: &DVector<T>, rho: T) -> Result<DVector<T>> {
        if c.len() != self.ncols() {
            return Err(invalid("contrast length does not match design columns"));
        }
        let filter = self.solve_filter(rho)?;
        let vtc = self.v.tr_mul(c).component_mul(&filter);
        Ok(&self.u * vtc)
    }

    /// `δ = [I - (XᵀX + ρI)⁻¹XᵀX] β`.
    pub fn bias_vector(&self, beta: &DVector<T>, rho: T) -> Result<DVector<T>> {
        if beta.len() != self.ncols() {
            return Err(invalid("beta length does not match design columns"));
        }
        let filter = self.shrink_filter(rho)?;
        let vtb = self.v.tr_mul(beta).component_mul(&filter);
        Ok(beta - &self.v * vtb)
    }

    /// Diagonal of the hat matrix `X(XᵀX)⁻¹Xᵀ = UUᵀ`.
    pub fn hat_diagonal(&self) -> Result<DVector<T>> {
        if !self.full_column_rank() {
            return Err(Error::Singular(format!(
                "leverage needs full column rank with p <= n (n = {}, p = {}, rank = {})",
                self.nrows(),
                self.ncols(),
                self.rank
            )));
        }
        Ok(DVector::from_iterator(
            self.nrows(),
            self.u.row_iter().map(|row| row.norm_squared()),
        ))
    }

    /// `‖X_iᵀ(XᵀX + ρI)⁻¹Xᵀ‖²` for every row `i`, i.e. the squared row norms
    /// of `U diag(s²/(s²+ρ)) Uᵀ`.
    pub fn row_contrast_norms(&self, rho: T) -> Result<DVector<T>> {
        let filter = self.shrink_filter(rho)?;
        let f2 = filter.map(|f| f * f);
        Ok(DVector::from_iterator(
            self.nrows(),
            self.u
                .row_iter()
                .map(|row| row.iter().zip(f2.iter()).fold(T::zero(), |acc, (&uij, &fj)| acc + uij * uij * fj)),
        ))
    }

    /// `X(XᵀX + ρI)⁻¹Xᵀ` as a dense `n × n` matrix.
    pub fn smoother(&self, rho: T) -> Result<DMatrix<T>> {
        let filter = self.shrink_filter(rho)?;
        let mut scaled = self.u.clone();
        for (mut col, &f) in scaled.column_iter_mut().zip(filter.iter()) {
            col *= f;
        }
        Ok(scaled * self.u.transpose())
    }

    /// `Xδ` for `δ` from [`Spectrum::bias_vector`], computed spectrally.
    pub fn fitted_bias(&self, beta: &DVector<T>, rho: T) -> Result<DVector<T>> {
        if beta.len() != self.ncols() {
            return Err(invalid("beta length does not match design columns"));
        }
        self.check_penalty(rho)?;
        let vtb = self.v.tr_mul(beta);
        let coef = DVector::from_iterator(
            self.s.len(),
            self.s.iter().zip(vtb.iter()).map(|(&sv, &b)| {
                let d = sv * sv + rho;
                if d > T::zero() {
                    sv * rho / d * b
                } else {
                    T::zero()
                }
            }),
        );
        Ok(&self.u * coef)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn reconstructs_design() {
        for &(n, p) in &[(7, 3), (3, 7), (5, 5)] {
            let x = gaussian(n, p, 1);
            let sp = Spectrum::new(&x).unwrap();
            let rebuilt = sp.u() * DMatrix::from_diagonal(sp.singular_values()) * sp.v().transpose();
            assert!((rebuilt - &x).norm() < 1e-12 * x.norm());
            let s = sp.singular_values();
            assert!(s.iter().zip(s.iter().skip(1)).all(|(a, b)| a >= b));
        }
    }

    #[test]
    fn rank_detects_duplicate_columns() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let sp = Spectrum::new(&x).unwrap();
        assert_eq!(sp.rank(), 1);
        assert!(!sp.full_column_rank());
        assert!(sp.coefficients(&DVector::from_vec(vec![1.0, 2.0, 3.0]), 0.0).is_err());
    }

    #[test]
    fn smoother_matches_explicit_inverse_on_wide_design() {
        let x = gaussian(4, 9, 2);
        let rho = 0.7;
        let sp = Spectrum::new(&x).unwrap();
        let gram = x.transpose() * &x + DMatrix::identity(9, 9) * rho;
        let explicit = &x * gram.try_inverse().unwrap() * x.transpose();
        assert!((sp.smoother(rho).unwrap() - explicit).norm() < 1e-10);
    }
}
