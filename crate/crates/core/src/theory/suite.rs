use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::appendix::{lm_tail_check_seeded, signed_svd, signed_svd_row_law_seeded, wishart_square_seeded};
use super::bounds::{check_mspe_link_seeded, check_theorem1_seeded, Estimator, SampleSizes};
use super::events::{check_design_events_seeded, check_theorem4_seeded};
use super::rates::{rate_d2_empirical_seeded, rate_mspe_seeded, MspeRateSetup};
use super::report::{CheckConfig, CheckReport};
use crate::designs::{
    gaussian_matrix, generate_dataset, make_beta, make_covariance, sample_design, sample_noise, BetaStyle, NoiseFamily,
    NoiseSpec,
};
use crate::error::{invalid, Error, Result};
use crate::harness::{seed_split, ExperimentConfig, Scale};
use crate::linmodel::{argmax_first, Dataset, Spectrum};
use crate::tuning::cv_select_with;

/// A named group of checks run by [`run_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Theorem1,
    MspeLink,
    Rates,
    DesignEvents,
    Theorem4,
    Appendix,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Theorem1,
        Suite::MspeLink,
        Suite::Rates,
        Suite::DesignEvents,
        Suite::Theorem4,
        Suite::Appendix,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::MspeLink => "mspe-link",
            Suite::Rates => "rates",
            Suite::DesignEvents => "design-events",
            Suite::Theorem4 => "theorem4",
            Suite::Appendix => "appendix",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}`")))
    }
}

/// Sizes and parameters of every suite. Missing keys in a file take the
/// defaults below; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    pub threads: usize,

    /// Randomized configurations shared by the bound suites.
    pub sweep_size: usize,
    pub sweep_min_n: usize,
    pub sweep_max_n: usize,
    /// Draws per side of the contrast-law bound.
    pub bound_samples: usize,
    /// Also run the contrast-law bound on one dataset of each standard
    /// setting.
    pub include_settings: bool,
    pub link_reps: usize,
    pub link_m_ref: usize,

    pub mspe_nus: Vec<f64>,
    pub mspe_grid: Vec<usize>,
    pub mspe_trials: usize,
    pub d2_grid: Vec<usize>,
    pub d2_trials: usize,
    pub d2_m_ref: usize,

    pub event_eta: f64,
    pub event_gamma: f64,
    pub event_theta: f64,
    pub event_grid: Vec<usize>,
    pub event_trials: usize,

    pub trend_eta: f64,
    pub trend_gamma: f64,
    pub trend_theta: f64,
    pub trend_grid: Vec<usize>,
    pub trend_designs: usize,
    pub trend_reps: usize,

    pub wishart_p: usize,
    pub wishart_n: usize,
    pub wishart_samples: usize,
    pub svd_matrices: usize,
    pub row_law_n: usize,
    pub row_law_p: usize,
    pub row_law_samples: usize,
    pub tail_t: Vec<f64>,
    pub tail_trials: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            threads: 1,
            sweep_size: 200,
            sweep_min_n: 8,
            sweep_max_n: 40,
            bound_samples: 100_000,
            include_settings: true,
            link_reps: 100,
            link_m_ref: 100_000,
            mspe_nus: vec![0.3, 1.0, 2.0],
            mspe_grid: vec![64, 128, 256, 512, 1024],
            mspe_trials: 20,
            d2_grid: vec![100, 1_000, 10_000, 100_000],
            d2_trials: 20,
            d2_m_ref: 100_000,
            event_eta: 1.0,
            event_gamma: 0.6,
            event_theta: 0.5,
            event_grid: vec![200, 400, 800],
            event_trials: 100,
            trend_eta: 1.0,
            trend_gamma: 0.55,
            trend_theta: 0.5,
            trend_grid: vec![50, 100, 200],
            trend_designs: 100,
            trend_reps: 1000,
            wishart_p: 3,
            wishart_n: 5,
            wishart_samples: 200_000,
            svd_matrices: 50,
            row_law_n: 20,
            row_law_p: 5,
            row_law_samples: 20_000,
            tail_t: vec![0.5, 1.0, 2.0, 3.0, 4.0],
            tail_trials: 100_000,
        }
    }
}

impl SuiteConfig {
    /// Small sizes for smoke runs and determinism checks.
    pub fn quick() -> Self {
        Self {
            sweep_size: 6,
            sweep_max_n: 20,
            bound_samples: 2_000,
            include_settings: false,
            link_reps: 10,
            link_m_ref: 2_000,
            mspe_grid: vec![32, 64],
            mspe_trials: 2,
            d2_grid: vec![50, 200],
            d2_trials: 3,
            d2_m_ref: 2_000,
            event_grid: vec![40, 80],
            event_trials: 5,
            trend_grid: vec![20, 40],
            trend_designs: 3,
            trend_reps: 50,
            wishart_samples: 2_000,
            svd_matrices: 3,
            row_law_samples: 200,
            tail_trials: 2_000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.threads == 0 {
            return fail("`threads` must be at least 1".into());
        }
        if self.sweep_min_n < 4 || self.sweep_max_n < self.sweep_min_n {
            return fail("sweep sizes need 4 <= sweep_min_n <= sweep_max_n".into());
        }
        if self.mspe_nus.iter().any(|&nu| !(nu > 0.0 && nu.is_finite())) {
            return fail("`mspe_nus` must be positive".into());
        }
        if self.tail_t.is_empty() {
            return fail("`tail_t` must not be empty".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

pub fn parse_suite_config(text: &str) -> Result<SuiteConfig> {
    let config: SuiteConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn read_suite_config(path: impl AsRef<Path>) -> Result<SuiteConfig> {
    parse_suite_config(&std::fs::read_to_string(path)?)
}

/// Runs `suite` in a pool of `config.threads` workers. The reports do not
/// depend on the thread count.
pub fn run_suite(suite: Suite, config: &SuiteConfig) -> Result<Vec<CheckReport>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let seed = seed_split(config.seed, &[suite as u64]);
    pool.install(|| match suite {
        Suite::Theorem1 => theorem1_suite(config, seed),
        Suite::MspeLink => mspe_link_suite(config, seed),
        Suite::Rates => rates_suite(config, seed),
        Suite::DesignEvents => check_design_events_seeded(
            config.event_eta,
            config.event_gamma,
            config.event_theta,
            &config.event_grid,
            config.event_trials,
            seed,
        ),
        Suite::Theorem4 => theorem4_suite(config, seed),
        Suite::Appendix => appendix_suite(config, seed),
    })
}

/// One randomized bound configuration.
#[derive(Debug, Clone)]
pub struct SweepCase {
    pub data: Dataset<f64>,
    pub noise: NoiseSpec,
    pub eta: f64,
    pub contrast: DVector<f64>,
    pub rho: f64,
    pub pilot_rho: f64,
}

fn log_uniform(lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = Uniform::new(lo.ln(), hi.ln()).expect("ordered bounds").sample(rng);
    u.exp()
}

/// Case `index` of the randomized sweep: `n` in
/// `[sweep_min_n, sweep_max_n]`, `p` up to `1.5n`, decay in `[0, 2]`,
/// normal, t₅ or two-point errors with `σ ∈ [0.1, 2]`, penalties
/// log-uniform in `[10⁻³n, 10n]`, and either a design row or a Gaussian
/// vector as contrast.
pub fn sweep_case(config: &SuiteConfig, master: u64, index: usize) -> Result<SweepCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_split(master, &[index as u64]));
    let n = Uniform::new_inclusive(config.sweep_min_n, config.sweep_max_n)
        .map_err(|e| invalid(e.to_string()))?
        .sample(&mut rng);
    let p = Uniform::new_inclusive(1, n + n / 2).expect("n >= 1").sample(&mut rng);
    let eta: f64 = Uniform::new_inclusive(0.0, 2.0).expect("ordered").sample(&mut rng);
    let family = match index % 3 {
        0 => NoiseFamily::Normal,
        1 => NoiseFamily::ScaledCenteredT { dof: 5.0 },
        _ => NoiseFamily::TwoPoint,
    };
    let noise = NoiseSpec::new(family, log_uniform(0.1, 2.0, &mut rng))?;
    let scale = n as f64;
    let rho = log_uniform(1e-3 * scale, 10.0 * scale, &mut rng);
    let pilot_rho = log_uniform(1e-3 * scale, 10.0 * scale, &mut rng);
    let cov = make_covariance(p, eta, &mut rng)?;
    let beta = make_beta(p, BetaStyle::UniformUnit)?;
    let data = generate_dataset(n, &cov, &beta, &noise, &mut rng)?;
    let contrast = if index % 2 == 0 {
        data.x().row(index % n).transpose()
    } else {
        gaussian_matrix(p, 1, &mut rng).column(0).into_owned()
    };
    Ok(SweepCase {
        data,
        noise,
        eta,
        contrast,
        rho,
        pilot_rho,
    })
}

fn with_eta(mut report: CheckReport, eta: f64) -> CheckReport {
    report.config.eta = Some(eta);
    report
}

/// One response of standard setting `setting` (design and response from
/// `seed`), its cross-validated penalties and the highest-leverage row.
pub fn setting_case(setting: usize, seed: u64) -> Result<SweepCase> {
    let cfg = ExperimentConfig::preset(setting, Scale::Desk)?;
    let noise = cfg.noise_spec()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cov = make_covariance(cfg.p, cfg.eta, &mut rng)?;
    let x = sample_design(cfg.n, &cov, &mut rng)?;
    let beta = make_beta(cfg.p, BetaStyle::UniformUnit)?;
    let y = &x * &beta + sample_noise(&noise, cfg.n, &mut rng);
    let data = Dataset::simulated(x, y, beta, cfg.sigma)?;
    let plan = cv_select_with(&data, &cfg.cv_grid()?, cfg.cv_folds, cfg.prefactors(), &mut rng)?;
    let target = argmax_first(&Spectrum::new(data.x())?.hat_diagonal()?);
    Ok(SweepCase {
        contrast: data.x().row(target).transpose(),
        data,
        noise,
        eta: cfg.eta,
        rho: plan.inference_rho,
        pilot_rho: plan.pilot_rho,
    })
}

fn theorem1_suite(config: &SuiteConfig, seed: u64) -> Result<Vec<CheckReport>> {
    let m = config.bound_samples;
    let sizes = SampleSizes { m_psi: m, m_phi: m };
    let sweep = seed_split(seed, &[0]);
    let mut reports = Vec::new();
    for i in 0..config.sweep_size {
        let case = sweep_case(config, sweep, i)?;
        let r = check_theorem1_seeded(
            &case.data,
            &case.contrast,
            case.rho,
            case.pilot_rho,
            &case.noise,
            sizes,
            seed_split(seed, &[1, i as u64]),
        )?;
        reports.push(with_eta(r, case.eta));
    }
    if config.include_settings {
        for setting in 1..=4 {
            let case = setting_case(setting, seed_split(config.seed, &[setting as u64]))?;
            let mut r = check_theorem1_seeded(
                &case.data,
                &case.contrast,
                case.rho,
                case.pilot_rho,
                &case.noise,
                sizes,
                seed_split(seed, &[2, setting as u64]),
            )?;
            r.name = format!("theorem1_setting{setting}");
            reports.push(with_eta(r, case.eta));
        }
    }
    Ok(reports)
}

fn mspe_link_suite(config: &SuiteConfig, seed: u64) -> Result<Vec<CheckReport>> {
    // Same sweep as the contrast-law bound: both suites derive it from the
    // theorem1 stream.
    let sweep = seed_split(seed_split(config.seed, &[Suite::Theorem1 as u64]), &[0]);
    let mut reports = Vec::new();
    for i in 0..config.sweep_size {
        let case = sweep_case(config, sweep, i)?;
        let mut estimators = vec![Estimator::Ridge { varrho: case.pilot_rho }, Estimator::Perfect];
        if case.data.p() < case.data.n() {
            estimators.insert(1, Estimator::Ols);
        }
        for (k, est) in estimators.into_iter().enumerate() {
            let r = check_mspe_link_seeded(
                &case.data,
                &case.noise,
                est,
                config.link_reps,
                config.link_m_ref,
                seed_split(seed, &[i as u64, k as u64]),
            )?;
            reports.push(with_eta(r, case.eta));
        }
    }
    Ok(reports)
}

fn rates_suite(config: &SuiteConfig, seed: u64) -> Result<Vec<CheckReport>> {
    let mut reports = Vec::new();
    for (k, &nu) in config.mspe_nus.iter().enumerate() {
        let s = seed_split(seed, &[0, k as u64]);
        let est = rate_mspe_seeded(nu, &config.mspe_grid, config.mspe_trials, MspeRateSetup::default(), s)?;
        let cfg = CheckConfig {
            n: *config.mspe_grid.last().unwrap_or(&0),
            eta: Some(nu),
            seed: s,
            ..CheckConfig::default()
        };
        reports.push(est.to_report(format!("rate_mspe_nu{nu}"), cfg));
    }
    let laws = [("normal", NoiseSpec::normal(1.0)?), ("t5", NoiseSpec::t5(1.0)?)];
    for (k, (name, noise)) in laws.iter().enumerate() {
        let s = seed_split(seed, &[1, k as u64]);
        let est = rate_d2_empirical_seeded(noise, &config.d2_grid, config.d2_trials, config.d2_m_ref, s)?;
        let cfg = CheckConfig {
            n: *config.d2_grid.last().unwrap_or(&0),
            seed: s,
            ..CheckConfig::default()
        };
        reports.push(est.to_report(format!("rate_d2_{name}"), cfg));
    }
    Ok(reports)
}

/// One report per consecutive pair of sizes: `lhs` is the median at the
/// larger size, `rhs` the one at the smaller, and the step holds only when
/// the median strictly drops.
fn theorem4_suite(config: &SuiteConfig, seed: u64) -> Result<Vec<CheckReport>> {
    let noise = NoiseSpec::t5(1.0)?;
    let est = check_theorem4_seeded(
        config.trend_eta,
        config.trend_gamma,
        config.trend_theta,
        &config.trend_grid,
        config.trend_designs,
        config.trend_reps,
        &noise,
        seed,
    )?;
    let mut reports = Vec::new();
    for k in 1..est.n_grid.len() {
        let cfg = CheckConfig {
            n: est.n_grid[k],
            p: est.n_grid[k] / 2,
            eta: Some(config.trend_eta),
            gamma: Some(config.trend_gamma),
            theta: Some(config.trend_theta),
            seed,
        };
        let (lhs, rhs) = (est.values[k], est.values[k - 1]);
        let mut r = CheckReport::new(format!("theorem4_n{}_vs_n{}", est.n_grid[k], est.n_grid[k - 1]), lhs, rhs, 0.0, cfg);
        r.holds = lhs < rhs;
        reports.push(r);
    }
    Ok(reports)
}

/// Largest relative reconstruction error `‖Z − H diag(l) Gᵀ‖_F / ‖Z‖_F`
/// over Gaussian matrices of assorted shapes.
fn svd_reconstruction(config: &SuiteConfig, seed: u64) -> Result<CheckReport> {
    let errors = (0..config.svd_matrices)
        .into_par_iter()
        .map(|s| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed_split(seed, &[s as u64]));
            let p = 1 + s % 7;
            let n = p + s % 11;
            let z = gaussian_matrix(n, p, &mut rng);
            let svd = signed_svd(&z)?;
            let back = &svd.h * DMatrix::from_diagonal(&svd.l) * svd.g.transpose();
            Ok((back - &z).norm() / z.norm())
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = errors.into_iter().fold(0.0, f64::max);
    let cfg = CheckConfig {
        n: config.svd_matrices,
        seed,
        ..CheckConfig::default()
    };
    Ok(CheckReport::new("signed_svd_reconstruction", worst, 1e-10, 0.0, cfg))
}

fn appendix_suite(config: &SuiteConfig, seed: u64) -> Result<Vec<CheckReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_split(seed, &[0]));
    let sigma = make_covariance(config.wishart_p, 1.0, &mut rng)?.sigma();
    let mut reports = vec![
        wishart_square_seeded(&sigma, config.wishart_n, config.wishart_samples, seed_split(seed, &[1]))?,
        svd_reconstruction(config, seed_split(seed, &[2]))?,
        signed_svd_row_law_seeded(config.row_law_n, config.row_law_p, config.row_law_samples, 0.01, seed_split(seed, &[3]))?,
    ];
    // A diagonal form with unequal positive weights.
    let a = DMatrix::from_diagonal(&DVector::from_fn(6, |i, _| 1.0 / (i + 1) as f64));
    reports.extend(lm_tail_check_seeded(&a, &config.tail_t, config.tail_trials, seed_split(seed, &[4]))?);
    Ok(reports)
}
