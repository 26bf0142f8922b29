use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::Real;

/// Ground truth carried by simulated data.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth<T: Real> {
    pub beta: DVector<T>,
    pub sigma: T,
}

/// Design matrix and response, optionally with the generating coefficients.
///
/// `beta` and `sigma` are bundled in [`Truth`] so they are either both
/// present (simulation mode) or both absent (observed mode).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Real> {
    x: DMatrix<T>,
    y: DVector<T>,
    truth: Option<Truth<T>>,
}

impl<T: Real> Dataset<T> {
    pub fn observed(x: DMatrix<T>, y: DVector<T>) -> Result<Self> {
        check_design(&x)?;
        if y.len() != x.nrows() {
            return Err(invalid(format!(
                "response has length {} but design has {} rows",
                y.len(),
                x.nrows()
            )));
        }
        check_finite(y.iter(), "response")?;
        Ok(Self { x, y, truth: None })
    }

    pub fn simulated(x: DMatrix<T>, y: DVector<T>, beta: DVector<T>, sigma: T) -> Result<Self> {
        let mut data = Self::observed(x, y)?;
        if beta.len() != data.p() {
            return Err(invalid(format!(
                "beta has length {} but design has {} columns",
                beta.len(),
                data.p()
            )));
        }
        check_finite(beta.iter(), "beta")?;
        if !sigma.finite() || sigma < T::zero() {
            return Err(invalid("sigma must be finite and nonnegative"));
        }
        data.truth = Some(Truth { beta, sigma });
        Ok(data)
    }

    pub fn x(&self) -> &DMatrix<T> {
        &self.x
    }

    pub fn y(&self) -> &DVector<T> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn truth(&self) -> Option<&Truth<T>> {
        self.truth.as_ref()
    }

    pub fn beta_true(&self) -> Option<&DVector<T>> {
        self.truth.as_ref().map(|t| &t.beta)
    }

    pub fn sigma_true(&self) -> Option<T> {
        self.truth.as_ref().map(|t| t.sigma)
    }

    /// Same design and truth with a different response.
    pub fn with_response(&self, y: DVector<T>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(invalid("response length does not match design"));
        }
        check_finite(y.iter(), "response")?;
        Ok(Self {
            x: self.x.clone(),
            y,
            truth: self.truth.clone(),
        })
    }

    pub fn into_parts(self) -> (DMatrix<T>, DVector<T>, Option<Truth<T>>) {
        (self.x, self.y, self.truth)
    }
}

pub(crate) fn check_design<T: Real>(x: &DMatrix<T>) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(invalid("design must have at least one row and one column"));
    }
    check_finite(x.iter(), "design")
}

pub(crate) fn check_finite<'a, T: Real>(mut values: impl Iterator<Item = &'a T>, what: &str) -> Result<()> {
    if values.all(|v| v.finite()) {
        Ok(())
    } else {
        Err(invalid(format!("{what} contains nonfinite entries")))
    }
}
