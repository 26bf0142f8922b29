use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::designs::{NoiseFamily, NoiseSpec};
use crate::error::{Error, Result};
use crate::tuning::{log_grid, Prefactors};

/// Error law as written in a config file: `normal`, `two_point`,
/// `t:<dof>` or `atoms:<a>,<b>,...`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseLaw(pub NoiseFamily);

impl fmt::Display for NoiseLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            NoiseFamily::Normal => f.write_str("normal"),
            NoiseFamily::TwoPoint => f.write_str("two_point"),
            NoiseFamily::ScaledCenteredT { dof } => write!(f, "t:{dof}"),
            NoiseFamily::CustomAtoms(atoms) => {
                let parts: Vec<String> = atoms.iter().map(|a| a.to_string()).collect();
                write!(f, "atoms:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for NoiseLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::Config(format!("noise `{s}`: {msg}"));
        let family = match s.split_once(':') {
            None if s == "normal" => NoiseFamily::Normal,
            None if s == "two_point" => NoiseFamily::TwoPoint,
            Some(("t", dof)) => NoiseFamily::ScaledCenteredT {
                dof: dof.trim().parse().map_err(|e| bad(format!("{e}")))?,
            },
            Some(("atoms", list)) => NoiseFamily::CustomAtoms(
                list.split(',')
                    .map(|a| a.trim().parse::<f64>().map_err(|e| bad(format!("{e}"))))
                    .collect::<Result<_>>()?,
            ),
            _ => return Err(bad("expected normal, two_point, t:<dof> or atoms:<list>".into())),
        };
        Ok(NoiseLaw(family))
    }
}

impl Serialize for NoiseLaw {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NoiseLaw {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One coverage-study setting. Every field is required in the file form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Identifier written to the `setting` column and mixed into every seed.
    pub setting: u64,
    pub n: usize,
    pub p: usize,
    pub eta: f64,
    /// Number of designs.
    pub n1: usize,
    /// Responses per design.
    pub n2: usize,
    /// Bootstrap replicates.
    pub b: usize,
    pub level: f64,
    pub sigma: f64,
    pub noise: NoiseLaw,
    pub cv_grid_min: f64,
    pub cv_grid_max: f64,
    pub cv_grid_size: usize,
    pub cv_folds: usize,
    pub pilot_prefactor: f64,
    pub inference_prefactor: f64,
    pub seed: u64,
    pub threads: usize,
    /// Run cross-validation on the first response of each design only and
    /// reuse its penalties for the others.
    pub cv_per_design: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// 20 designs, 500 responses, 500 replicates.
    Desk,
    /// 100 designs, 1000 responses, 1000 replicates.
    Full,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            _ => Err(Error::Config(format!("unknown scale `{s}` (expected desk or full)"))),
        }
    }
}

/// `(p, η)` of settings 1 to 4; all use `n = 100`.
const SETTINGS: [(usize, f64); 4] = [(45, 0.5), (95, 0.5), (45, 1.0), (95, 1.0)];

impl ExperimentConfig {
    /// One of the four standard settings: `n = 100`, t₅ errors with
    /// `σ = 0.1`, level 0.9, five folds over 30 penalties in
    /// `[10⁻⁴n, 10²n]`, prefactors `(5, 0.1)`.
    pub fn preset(setting: usize, scale: Scale) -> Result<Self> {
        let (p, eta) = *setting
            .checked_sub(1)
            .and_then(|i| SETTINGS.get(i))
            .ok_or_else(|| Error::Config(format!("unknown setting {setting} (expected 1 to 4)")))?;
        let (n1, n2, b) = match scale {
            Scale::Desk => (20, 500, 500),
            Scale::Full => (100, 1000, 1000),
        };
        let n = 100;
        let prefactors = Prefactors::default();
        Ok(Self {
            setting: setting as u64,
            n,
            p,
            eta,
            n1,
            n2,
            b,
            level: 0.9,
            sigma: 0.1,
            noise: NoiseLaw(NoiseFamily::ScaledCenteredT { dof: 5.0 }),
            cv_grid_min: 1e-4 * n as f64,
            cv_grid_max: 1e2 * n as f64,
            cv_grid_size: crate::tuning::DEFAULT_GRID_SIZE,
            cv_folds: crate::tuning::DEFAULT_FOLDS,
            pilot_prefactor: prefactors.pilot,
            inference_prefactor: prefactors.inference,
            seed: 1,
            threads: 1,
            cv_per_design: false,
        })
    }

    /// Checks ranges and cross-field consistency.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        for (name, v) in [
            ("n", self.n),
            ("p", self.p),
            ("n1", self.n1),
            ("n2", self.n2),
            ("b", self.b),
            ("cv_grid_size", self.cv_grid_size),
            ("threads", self.threads),
        ] {
            if v == 0 {
                return fail(format!("`{name}` must be at least 1"));
            }
        }
        if self.p >= self.n {
            return fail(format!(
                "p = {} must be below n = {}: the normal and least-squares intervals need n − p ≥ 1",
                self.p, self.n
            ));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return fail(format!("`eta` must be finite and nonnegative, got {}", self.eta));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return fail(format!("`level` must lie in (0, 1), got {}", self.level));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return fail(format!("`sigma` must be finite and nonnegative, got {}", self.sigma));
        }
        if !(self.cv_grid_min > 0.0 && self.cv_grid_max >= self.cv_grid_min && self.cv_grid_max.is_finite()) {
            return fail("cv grid needs 0 < cv_grid_min <= cv_grid_max".into());
        }
        if self.cv_folds < 2 || self.n / self.cv_folds == 0 {
            return fail(format!("`cv_folds` = {} is not usable with n = {}", self.cv_folds, self.n));
        }
        for (name, v) in [("pilot_prefactor", self.pilot_prefactor), ("inference_prefactor", self.inference_prefactor)] {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("`{name}` must be positive, got {v}"));
            }
        }
        self.noise_spec().map(|_| ()).map_err(|e| Error::Config(format!("noise: {e}")))
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec> {
        NoiseSpec::new(self.noise.0.clone(), self.sigma)
    }

    pub fn cv_grid(&self) -> Result<Vec<f64>> {
        log_grid(self.cv_grid_min, self.cv_grid_max, self.cv_grid_size)
    }

    pub fn prefactors(&self) -> Prefactors {
        Prefactors {
            pilot: self.pilot_prefactor,
            inference: self.inference_prefactor,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parses and validates a config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

pub fn write_config(config: &ExperimentConfig, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, config.to_toml()?)?;
    Ok(())
}
