use nalgebra::DVector;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};

use crate::error::{invalid, Error, Result};
use crate::mallows::{d2_squared, EmpiricalDistribution};
use crate::resampling::uniform_index;

/// Shape of the error law, before scaling to the target standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseFamily {
    /// Student t with `dof` degrees of freedom. Needs `dof > 4`.
    ScaledCenteredT { dof: f64 },
    Normal,
    /// `±σ` with probability one half each.
    TwoPoint,
    /// Uniform over the given atoms after centering and scaling to unit
    /// variance.
    CustomAtoms(Vec<f64>),
}

impl NoiseFamily {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseFamily::ScaledCenteredT { .. } => "scaled_centered_t",
            NoiseFamily::Normal => "normal",
            NoiseFamily::TwoPoint => "two_point",
            NoiseFamily::CustomAtoms(_) => "custom_atoms",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kernel {
    T { chi: ChiSquared<f64>, dof: f64, scale: f64 },
    Normal,
    TwoPoint,
    Atoms(Vec<f64>),
}

/// Centered error law with standard deviation `sigma`.
///
/// t draws are `Z / √(V/ν)` with `Z` standard normal and `V` an independent
/// χ²(ν), multiplied by `σ / √(ν/(ν−2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    family: NoiseFamily,
    sigma: f64,
    kernel: Kernel,
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(invalid(format!("noise sigma must be finite and nonnegative, got {sigma}")));
        }
        let kernel = match &family {
            NoiseFamily::ScaledCenteredT { dof } => {
                let dof = *dof;
                if !(dof.is_finite() && dof > 4.0) {
                    return Err(Error::MomentCondition { dof });
                }
                let chi = ChiSquared::new(dof).map_err(|e| invalid(e.to_string()))?;
                Kernel::T {
                    chi,
                    dof,
                    scale: ((dof - 2.0) / dof).sqrt(),
                }
            }
            NoiseFamily::Normal => Kernel::Normal,
            NoiseFamily::TwoPoint => Kernel::TwoPoint,
            NoiseFamily::CustomAtoms(atoms) => Kernel::Atoms(standardize(atoms)?),
        };
        Ok(Self { family, sigma, kernel })
    }

    /// Centered t on 5 degrees of freedom.
    pub fn t5(sigma: f64) -> Result<Self> {
        Self::new(NoiseFamily::ScaledCenteredT { dof: 5.0 }, sigma)
    }

    pub fn normal(sigma: f64) -> Result<Self> {
        Self::new(NoiseFamily::Normal, sigma)
    }

    pub fn family(&self) -> &NoiseFamily {
        &self.family
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Same family rescaled to standard deviation `sigma`.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.family.clone(), sigma)
    }

    /// Exact `d2²(f, F₀)` for this law `F₀`.
    ///
    /// Sorted atom `xᵢ` of `f` is coupled with the `i`-th quantile cell of
    /// `F₀`, so `d2² = (1/n)Σxᵢ² − 2Σxᵢ·E[ε; cell i] + σ²`. The partial
    /// first moments have closed forms for the continuous families; the
    /// discrete ones compare atom lists directly.
    pub fn d2_squared_to_law(&self, f: &EmpiricalDistribution<f64>) -> Result<f64> {
        let n = f.len();
        let (quantile, antiderivative): (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>) = match &self.kernel {
            Kernel::Normal => {
                let law = Normal::standard();
                (Box::new(move |u| law.inverse_cdf(u)), Box::new(move |x| -law.pdf(x)))
            }
            Kernel::T { dof, .. } => {
                let dof = *dof;
                let law = StudentsT::new(0.0, 1.0, dof).map_err(|e| invalid(e.to_string()))?;
                (
                    Box::new(move |u| law.inverse_cdf(u)),
                    Box::new(move |x| -(dof + x * x) / (dof - 1.0) * law.pdf(x)),
                )
            }
            Kernel::TwoPoint => return Ok(d2_squared(f, &self.atoms(&[-1.0, 1.0])?)),
            Kernel::Atoms(atoms) => return Ok(d2_squared(f, &self.atoms(atoms)?)),
        };
        let unit_scale = match &self.kernel {
            Kernel::T { scale, .. } => *scale,
            _ => 1.0,
        };
        // E[ε; ε ≤ q] as a function of the cell boundary, with the unit law
        // rescaled by σ·scale.
        let partial = |x: f64| if x.is_finite() { antiderivative(x) } else { 0.0 };
        let mut lower = partial(f64::NEG_INFINITY);
        let mut cross = 0.0;
        for (i, &x) in f.atoms().iter().enumerate() {
            let q = if i + 1 == n { f64::INFINITY } else { quantile((i + 1) as f64 / n as f64) };
            let upper = partial(q);
            cross += x * (upper - lower);
            lower = upper;
        }
        let scale = self.sigma * unit_scale;
        let second = f.atoms().iter().map(|x| x * x).sum::<f64>() / n as f64;
        Ok((second - 2.0 * scale * cross + self.sigma * self.sigma).max(0.0))
    }

    fn atoms(&self, unit: &[f64]) -> Result<EmpiricalDistribution<f64>> {
        EmpiricalDistribution::new(unit.iter().map(|a| self.sigma * a).collect())
    }

    fn unit<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kernel {
            Kernel::T { chi, dof, scale } => {
                let z: f64 = StandardNormal.sample(rng);
                let v = chi.sample(rng);
                z / (v / dof).sqrt() * scale
            }
            Kernel::Normal => StandardNormal.sample(rng),
            Kernel::TwoPoint => {
                if rng.next_u64() >> 63 == 0 {
                    -1.0
                } else {
                    1.0
                }
            }
            Kernel::Atoms(atoms) => atoms[uniform_index(rng, atoms.len())],
        }
    }
}

impl Distribution<f64> for NoiseSpec {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sigma * self.unit(rng)
    }
}

fn standardize(atoms: &[f64]) -> Result<Vec<f64>> {
    if atoms.is_empty() || atoms.iter().any(|a| !a.is_finite()) {
        return Err(invalid("custom atoms must be a nonempty list of finite values"));
    }
    let n = atoms.len() as f64;
    let mean = atoms.iter().sum::<f64>() / n;
    let var = atoms.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::DegenerateData("custom atoms have zero spread".into()));
    }
    let sd = var.sqrt();
    Ok(atoms.iter().map(|a| (a - mean) / sd).collect())
}

/// `n` i.i.d. draws from `spec`.
pub fn sample_noise<R: Rng + ?Sized>(spec: &NoiseSpec, n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| spec.sample(rng)))
}
