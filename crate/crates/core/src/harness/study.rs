use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::seed::seed_split;
use crate::designs::{make_beta, make_covariance, sample_design, sample_noise, BetaStyle, NoiseSpec};
use crate::error::{Error, Result};
use crate::linmodel::{argmax_first, Dataset, Spectrum};
use crate::resampling::{normal_interval, rb_interval, Method, OracleLaw};
use crate::tuning::cv_select_with;

/// Coverage and mean width of one interval method over a study.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: Method,
    /// `covered / instances`.
    pub coverage: f64,
    pub width: f64,
    pub covered: usize,
    pub instances: usize,
    pub skips: usize,
}

/// Results of [`run_table1`] for one setting.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub setting: u64,
    pub seed: u64,
    /// One row per method, in [`Method::ALL`] order.
    pub methods: Vec<MethodResult>,
    /// Noise-free data, no usable instance, or a feasible method with only
    /// zero-width intervals; coverage then says nothing.
    pub degenerate: bool,
    /// Free-text provenance written as comment lines.
    pub notes: Vec<String>,
}

impl StudyResult {
    pub fn method(&self, method: Method) -> &MethodResult {
        self.methods.iter().find(|m| m.method == method).expect("every method is present")
    }
}

// Purposes, the last element of a per-response seed path.
const NOISE: u64 = 0;
const FOLDS: u64 = 1;
const RIDGE_RB: u64 = 2;
const OLS_RB: u64 = 3;

/// Outcome of one `(X, Y)` pair for the three feasible methods.
struct Instance {
    estimate: f64,
    covered: [bool; 3],
    widths: [f64; 3],
}

#[derive(Default)]
struct Tally {
    covered: [usize; 4],
    widths: [f64; 4],
    instances: usize,
    skips: usize,
}

impl Tally {
    fn absorb(&mut self, other: &Tally) {
        for k in 0..4 {
            self.covered[k] += other.covered[k];
            self.widths[k] += other.widths[k];
        }
        self.instances += other.instances;
        self.skips += other.skips;
    }
}

struct Design {
    x: nalgebra::DMatrix<f64>,
    beta: DVector<f64>,
    signal: DVector<f64>,
    spectrum: Spectrum<f64>,
    contrast: DVector<f64>,
    target: f64,
}

fn build_design(config: &ExperimentConfig, d: usize) -> Result<Design> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_split(config.seed, &[config.setting, d as u64]));
    let cov = make_covariance(config.p, config.eta, &mut rng)?;
    let x = sample_design(config.n, &cov, &mut rng)?;
    let beta = make_beta(config.p, BetaStyle::UniformUnit)?;
    let spectrum = Spectrum::new(&x)?;
    let target_row = argmax_first(&spectrum.hat_diagonal()?);
    let contrast = x.row(target_row).transpose();
    Ok(Design {
        signal: &x * &beta,
        target: contrast.dot(&beta),
        x,
        beta,
        spectrum,
        contrast,
    })
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    noise: NoiseSpec,
    grid: Vec<f64>,
}

impl Context<'_> {
    fn seed(&self, d: usize, r: usize, purpose: u64) -> u64 {
        seed_split(self.config.seed, &[self.config.setting, d as u64, r as u64, purpose])
    }

    fn dataset(&self, design: &Design, d: usize, r: usize) -> Result<Dataset<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed(d, r, NOISE));
        let y = &design.signal + sample_noise(&self.noise, self.config.n, &mut rng);
        Dataset::simulated(design.x.clone(), y, design.beta.clone(), self.config.sigma)
    }

    /// `(ϱ, ρ)` from cross-validation on response `r`.
    fn penalties(&self, data: &Dataset<f64>, d: usize, r: usize) -> Result<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed(d, r, FOLDS));
        let plan = cv_select_with(data, &self.grid, self.config.cv_folds, self.config.prefactors(), &mut rng)?;
        Ok((plan.pilot_rho, plan.inference_rho))
    }

    fn instance(&self, design: &Design, d: usize, r: usize, shared: Option<(f64, f64)>) -> Result<Instance> {
        let cfg = self.config;
        let data = self.dataset(design, d, r)?;
        let (pilot_rho, rho) = match shared {
            Some(pair) => pair,
            None => self.penalties(&data, d, r)?,
        };
        let c = &design.contrast;
        let s = &design.spectrum;
        let intervals = [
            rb_interval(Method::RidgeRb, s, &data, c, rho, pilot_rho, cfg.b, cfg.level, self.seed(d, r, RIDGE_RB))?,
            normal_interval(s, &data, c, rho, cfg.level)?,
            rb_interval(Method::OlsRb, s, &data, c, 0.0, 0.0, cfg.b, cfg.level, self.seed(d, r, OLS_RB))?,
        ];
        if intervals.iter().any(|ci| !(ci.lower.is_finite() && ci.upper.is_finite())) {
            return Err(Error::DegenerateData("nonfinite interval endpoint".into()));
        }
        Ok(Instance {
            estimate: intervals[0].estimate,
            covered: intervals.map(|ci| ci.contains(design.target)),
            widths: intervals.map(|ci| ci.width()),
        })
    }

    fn run_design(&self, d: usize) -> Result<Tally> {
        let design = build_design(self.config, d)?;
        let shared = if self.config.cv_per_design {
            Some(self.penalties(&self.dataset(&design, d, 0)?, d, 0)?)
        } else {
            None
        };
        let outcomes: Vec<Result<Instance>> = (0..self.config.n2)
            .into_par_iter()
            .map(|r| self.instance(&design, d, r, shared))
            .collect();

        let mut tally = Tally::default();
        let ok: Vec<&Instance> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
        tally.skips = outcomes.len() - ok.len();
        tally.instances = ok.len();
        if ok.is_empty() {
            return Ok(tally);
        }
        // The oracle law is the spread of this design's own estimation errors.
        let law = OracleLaw {
            errors: ok.iter().map(|i| i.estimate - design.target).collect(),
        };
        for inst in &ok {
            let oracle = law.interval(inst.estimate, self.config.level)?;
            tally.covered[0] += usize::from(oracle.contains(design.target));
            tally.widths[0] += oracle.width();
            for k in 0..3 {
                tally.covered[k + 1] += usize::from(inst.covered[k]);
                tally.widths[k + 1] += inst.widths[k];
            }
        }
        Ok(tally)
    }
}

/// Coverage study for one setting.
///
/// For each of `n1` designs the contrast is the row of highest leverage.
/// Each of the `n2` responses gets its own cross-validated `(ϱ, ρ)` (or
/// shares those of the first response with `cv_per_design`), then ridge
/// residual-bootstrap, normal and least-squares residual-bootstrap
/// intervals. The oracle interval at a response uses the quantiles of the
/// estimation errors over all responses of its design. Responses whose
/// intervals fail numerically are counted as skips and left out of every
/// method. Results do not depend on `threads`.
pub fn run_table1(config: &ExperimentConfig) -> Result<StudyResult> {
    config.validate()?;
    let ctx = Context {
        config,
        noise: config.noise_spec()?,
        grid: config.cv_grid()?,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let tallies: Vec<Tally> = pool.install(|| {
        (0..config.n1)
            .into_par_iter()
            .map(|d| ctx.run_design(d))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut total = Tally::default();
    for t in &tallies {
        total.absorb(t);
    }

    let methods: Vec<MethodResult> = Method::ALL
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let m = total.instances.max(1) as f64;
            MethodResult {
                method,
                coverage: total.covered[k] as f64 / m,
                width: total.widths[k] / m,
                covered: total.covered[k],
                instances: total.instances,
                skips: total.skips,
            }
        })
        .collect();
    let degenerate = config.sigma == 0.0 || total.instances == 0 || methods[1..].iter().any(|m| m.width == 0.0);
    let notes = vec![
        format!(
            "setting {}: n={} p={} eta={} n1={} n2={} b={} level={} sigma={} noise={}",
            config.setting, config.n, config.p, config.eta, config.n1, config.n2, config.b, config.level, config.sigma, config.noise
        ),
        format!(
            "setting {}: cv grid {} log-spaced values in [{}, {}], {} folds, prefactors pilot={} inference={}, per_design={}",
            config.setting,
            config.cv_grid_size,
            config.cv_grid_min,
            config.cv_grid_max,
            config.cv_folds,
            config.pilot_prefactor,
            config.inference_prefactor,
            config.cv_per_design
        ),
        format!(
            "setting {}: quantile q_a = sorted[ceil(a*B)] (1-based, clamped to [1, B]); interval [est - q_(1+L)/2, est - q_(1-L)/2]",
            config.setting
        ),
    ];
    Ok(StudyResult {
        setting: config.setting,
        seed: config.seed,
        methods,
        degenerate,
        notes,
    })
}

pub const RESULTS_HEADER: &str = "setting,method,coverage,width,instances,skips,seed";

/// Results as CSV: `#` comment lines, then [`RESULTS_HEADER`] and one row
/// per setting and method.
pub fn results_to_csv(results: &[StudyResult]) -> String {
    let mut out = String::new();
    for r in results {
        for note in &r.notes {
            let _ = writeln!(out, "# {note}");
        }
        if r.degenerate {
            let _ = writeln!(out, "# setting {}: degenerate run, zero-width intervals", r.setting);
        }
    }
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in results {
        for m in &r.methods {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.setting, m.method, m.coverage, m.width, m.instances, m.skips, r.seed
            );
        }
    }
    out
}

pub fn write_results(results: &[StudyResult], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, results_to_csv(results))?;
    Ok(())
}
