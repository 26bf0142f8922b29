//! Mallows-ℓ2 (Wasserstein-2) distance between univariate empirical laws.
//!
//! For distributions on the line the optimal coupling is the quantile
//! coupling, so `d2²(F, G) = ∫₀¹ (F⁻¹(t) - G⁻¹(t))² dt`. With uniform
//! weights both quantile functions are step functions, and the integral is
//! an exact sum over the merged grid `{i/m} ∪ {j/k}`.

use rand::Rng;
use rand_distr::Distribution;

use crate::error::{invalid, Result};
use crate::Real;

/// Uniformly weighted atoms, stored sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution<T: Real> {
    atoms: Vec<T>,
    centered: bool,
}

impl<T: Real> EmpiricalDistribution<T> {
    pub fn new(mut atoms: Vec<T>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("empirical distribution needs at least one atom"));
        }
        if !atoms.iter().all(|a| a.finite()) {
            return Err(invalid("atoms must be finite"));
        }
        atoms.sort_by(|a, b| a.partial_cmp(b).expect("finite atoms"));
        Ok(Self {
            atoms,
            centered: false,
        })
    }

    /// Point mass at `value`.
    pub fn point(value: T) -> Result<Self> {
        Self::new(vec![value])
    }

    pub fn atoms(&self) -> &[T] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn mean(&self) -> T {
        self.atoms.iter().fold(T::zero(), |acc, &a| acc + a) / T::from_count(self.len())
    }

    pub fn second_moment(&self) -> T {
        self.atoms.iter().fold(T::zero(), |acc, &a| acc + a * a) / T::from_count(self.len())
    }

    /// Same atoms scaled by `factor` (order flips for negative factors).
    pub fn scaled(&self, factor: T) -> Self {
        let atoms = self.atoms.iter().map(|&a| a * factor).collect();
        let mut out = Self::new(atoms).expect("scaling keeps atoms finite");
        out.centered = self.centered;
        out
    }
}

/// Residuals minus their mean, as a centered empirical law.
pub fn center_residuals<T: Real>(residuals: &[T]) -> Result<EmpiricalDistribution<T>> {
    if residuals.is_empty() {
        return Err(invalid("cannot center an empty residual vector"));
    }
    let mean = residuals.iter().fold(T::zero(), |acc, &r| acc + r) / T::from_count(residuals.len());
    let mut dist = EmpiricalDistribution::new(residuals.iter().map(|&r| r - mean).collect())?;
    dist.centered = true;
    Ok(dist)
}

/// Squared distance via the merged quantile grid, for any atom counts.
pub fn d2_squared_merged<T: Real>(f: &EmpiricalDistribution<T>, g: &EmpiricalDistribution<T>) -> T {
    let (xs, ys) = (f.atoms(), g.atoms());
    let (m, k) = (xs.len() as u128, ys.len() as u128);
    // Grid positions measured in units of 1/(m·k), so breakpoints are exact.
    let (mut i, mut j) = (0usize, 0usize);
    let mut pos: u128 = 0;
    let total = m * k;
    let mut acc = T::zero();
    while pos < total {
        let next_f = (i as u128 + 1) * k;
        let next_g = (j as u128 + 1) * m;
        let next = next_f.min(next_g);
        let diff = xs[i] - ys[j];
        acc += diff * diff * T::lit((next - pos) as f64);
        pos = next;
        if next == next_f {
            i += 1;
        }
        if next == next_g {
            j += 1;
        }
    }
    acc / T::lit(total as f64)
}

/// Squared Mallows-ℓ2 distance.
pub fn d2_squared<T: Real>(f: &EmpiricalDistribution<T>, g: &EmpiricalDistribution<T>) -> T {
    if f.len() == g.len() {
        let sum = f
            .atoms()
            .iter()
            .zip(g.atoms())
            .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y));
        sum / T::from_count(f.len())
    } else {
        d2_squared_merged(f, g)
    }
}

/// Mallows-ℓ2 distance between two empirical laws.
pub fn d2_empirical<T: Real>(f: &EmpiricalDistribution<T>, g: &EmpiricalDistribution<T>) -> T {
    d2_squared(f, g).sqrt()
}

/// Empirical law of `m_ref` draws from `sampler`.
pub fn reference_sample<T, D, R>(sampler: &D, m_ref: usize, rng: &mut R) -> Result<EmpiricalDistribution<T>>
where
    T: Real,
    D: Distribution<T> + ?Sized,
    R: Rng + ?Sized,
{
    if m_ref == 0 {
        return Err(invalid("reference sample size must be positive"));
    }
    EmpiricalDistribution::new((0..m_ref).map(|_| sampler.sample(rng)).collect())
}

/// Large-sample proxy for the distance from `f` to a continuous law.
///
/// Deterministic for a given generator state; callers should record
/// `m_ref` next to the result.
pub fn d2_to_reference<T, D, R>(f: &EmpiricalDistribution<T>, sampler: &D, m_ref: usize, rng: &mut R) -> Result<T>
where
    T: Real,
    D: Distribution<T> + ?Sized,
    R: Rng + ?Sized,
{
    let reference = reference_sample(sampler, m_ref, rng)?;
    Ok(d2_empirical(f, &reference))
}
