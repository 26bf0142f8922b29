use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::harness::seed_split;
use crate::linmodel::{Dataset, Spectrum};
use crate::mallows::{center_residuals, EmpiricalDistribution};
use crate::Real;

/// Bootstrap replicates `zⱼ = aᵀε*` of one contrast.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws<T: Real> {
    pub values: Vec<T>,
    pub contrast: DVector<T>,
    pub rho: T,
    pub pilot_rho: T,
}

impl<T: Real> BootstrapDraws<T> {
    /// Number of replicates `B`.
    pub fn replicates(&self) -> usize {
        self.values.len()
    }
}

/// Uniform index in `0..n` by the multiply-high map `⌊u·n / 2⁶⁴⌋`.
///
/// The map has no rejection step; its bias is at most `n / 2⁶⁴`, below
/// `2⁻⁵³` for every `n ≤ 2¹¹`, and below `2⁻⁴⁴` at `n = 10⁶`.
#[inline]
pub(crate) fn uniform_index<R: Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// `B` draws of `aᵀε*`, where `ε*` has `a.len()` i.i.d. entries drawn
/// uniformly from `atoms`.
///
/// Replicate `j` uses its own ChaCha8 stream seeded with
/// `seed_split(master, [j])`, so the sequence is the same whether the
/// replicates run serially or in parallel.
pub fn plug_in_draws<T: Real>(weights: &DVector<T>, atoms: &[T], b: usize, master: u64) -> Result<Vec<T>> {
    if b == 0 {
        return Err(invalid("number of bootstrap replicates must be positive"));
    }
    if atoms.is_empty() {
        return Err(invalid("residual law has no atoms"));
    }
    let k = atoms.len();
    let one = |j: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_split(master, &[j as u64]));
        weights
            .iter()
            .fold(T::zero(), |acc, &w| acc + w * atoms[uniform_index(&mut rng, k)])
    };
    // Small jobs are not worth the scheduling overhead.
    if b * weights.len() < 1 << 14 {
        Ok((0..b).map(one).collect())
    } else {
        Ok((0..b).into_par_iter().map(one).collect())
    }
}

/// Pilot fit at `pilot_rho`, centered residual law, then `B` replicates of
/// the contrast `cᵀ(XᵀX + ρI)⁻¹Xᵀε*`.
///
/// The generator supplies one `u64` master seed; replicates are keyed off
/// it with [`seed_split`].
pub fn rb_contrast_draws<T: Real, R: Rng + ?Sized>(
    data: &Dataset<T>,
    c: &DVector<T>,
    rho: T,
    pilot_rho: T,
    b: usize,
    rng: &mut R,
) -> Result<BootstrapDraws<T>> {
    let spectrum = Spectrum::new(data.x())?;
    let prepared = Prepared::new(&spectrum, data, c, rho, pilot_rho)?;
    prepared.draws(b, rng.next_u64())
}

/// Weights and residual law shared by the interval constructors.
pub(crate) struct Prepared<T: Real> {
    pub weights: DVector<T>,
    pub residuals: EmpiricalDistribution<T>,
    pub estimate: T,
    pub contrast: DVector<T>,
    pub rho: T,
    pub pilot_rho: T,
}

impl<T: Real> Prepared<T> {
    pub fn new(spectrum: &Spectrum<T>, data: &Dataset<T>, c: &DVector<T>, rho: T, pilot_rho: T) -> Result<Self> {
        let weights = spectrum.contrast_weights(c, rho)?;
        if weights.norm_squared() <= T::zero() {
            return Err(Error::DegenerateContrast);
        }
        let pilot = spectrum.fit(data.x(), data.y(), pilot_rho)?;
        let residuals = center_residuals(pilot.residuals.as_slice())?;
        let estimate = if pilot_rho == rho {
            c.dot(&pilot.coefficients)
        } else {
            c.dot(&spectrum.coefficients(data.y(), rho)?)
        };
        Ok(Self {
            weights,
            residuals,
            estimate,
            contrast: c.clone(),
            rho,
            pilot_rho,
        })
    }

    pub fn draws(&self, b: usize, master: u64) -> Result<BootstrapDraws<T>> {
        Ok(BootstrapDraws {
            values: plug_in_draws(&self.weights, self.residuals.atoms(), b, master)?,
            contrast: self.contrast.clone(),
            rho: self.rho,
            pilot_rho: self.pilot_rho,
        })
    }
}
