use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use ridgeboot::designs::{generate_dataset, make_beta, make_covariance, BetaStyle};
use ridgeboot::harness::{read_config, run_table1, write_results, ExperimentConfig, NoiseLaw, Scale};
use ridgeboot::linmodel::csv::{read_matrix, read_vector, write_matrix, write_vector};
use ridgeboot::linmodel::{leverage_scores, Dataset};
use ridgeboot::resampling::{ci_normal, ci_ols_rb, ci_ridge_rb, Method};
use ridgeboot::theory::{read_suite_config, reports_to_csv, run_suite, Suite, SuiteConfig};
use ridgeboot::tuning::{cv_select_with, log_grid, Prefactors, DEFAULT_FOLDS, DEFAULT_GRID_SIZE};
use ridgeboot::{Dataset64, SimRng};

/// Ridge residual-bootstrap intervals, coverage studies and theory checks.
#[derive(Parser)]
#[command(name = "ridgeboot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Confidence interval for one contrast of observed data.
    Ci(CiArgs),
    /// Coverage study over simulated designs and responses.
    Simulate(SimulateArgs),
    /// Monte Carlo checks of the consistency theory.
    Check(CheckArgs),
    /// Write one simulated dataset as CSV.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    cv_grid_min: Option<f64>,
    #[arg(long)]
    cv_grid_max: Option<f64>,
    #[arg(long)]
    cv_grid_size: Option<usize>,
    #[arg(long)]
    cv_folds: Option<usize>,
}

#[derive(Args)]
struct CiArgs {
    /// Headerless CSV, one row per observation.
    #[arg(long)]
    design: PathBuf,
    /// Single-column CSV.
    #[arg(long)]
    response: PathBuf,
    /// `row:<i>` (0-based), `file:<c.csv>` or `leverage` for the row of
    /// highest leverage.
    #[arg(long)]
    contrast: String,
    #[arg(long, default_value = "ridge_rb")]
    method: Method,
    #[arg(long, default_value_t = 0.9)]
    level: f64,
    #[arg(long = "B", visible_alias = "b", default_value_t = 1000)]
    b: usize,
    /// Inference penalty; chosen by cross-validation when absent.
    #[arg(long)]
    rho: Option<f64>,
    /// Pilot penalty; chosen by cross-validation when absent.
    #[arg(long)]
    pilot_rho: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    grid: GridArgs,
    /// Write the cross-validation scores here.
    #[arg(long)]
    plan_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Config file (TOML, every field required).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// `setting1` to `setting4`; comma-separated for several.
    #[arg(long, value_delimiter = ',')]
    preset: Vec<String>,
    #[arg(long, default_value = "desk")]
    scale: Scale,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Cross-validate once per design instead of once per response.
    #[arg(long)]
    cv_per_design: bool,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long = "B", visible_alias = "b")]
    b: Option<usize>,
    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    dump_config: bool,
    /// Fail when any instance was skipped.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    suite: Suite,
    /// Suite config file (TOML); missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Small sample sizes, for smoke runs.
    #[arg(long, conflicts_with = "config")]
    quick: bool,
    /// Exit nonzero when any check fails.
    #[arg(long)]
    strict: bool,
    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value = "t:5")]
    noise: NoiseLaw,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    design: PathBuf,
    #[arg(long)]
    response: PathBuf,
    /// Also write the true coefficients.
    #[arg(long)]
    beta: Option<PathBuf>,
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn contrast_vector(spec: &str, data: &Dataset64) -> Result<nalgebra::DVector<f64>> {
    if spec == "leverage" {
        let (_, top) = leverage_scores(data.x())?;
        return Ok(data.x().row(top).transpose());
    }
    match spec.split_once(':') {
        Some(("row", i)) => {
            let i: usize = i.parse().with_context(|| format!("contrast row `{i}`"))?;
            if i >= data.n() {
                bail!("contrast row {i} out of range for {} observations", data.n());
            }
            Ok(data.x().row(i).transpose())
        }
        Some(("file", path)) => {
            let c = read_vector(path).with_context(|| format!("reading contrast {path}"))?;
            if c.len() != data.p() {
                bail!("contrast has length {}, design has {} columns", c.len(), data.p());
            }
            Ok(c)
        }
        _ => bail!("contrast must be row:<i>, file:<path> or leverage, got `{spec}`"),
    }
}

fn ci(args: CiArgs) -> Result<()> {
    let x = read_matrix(&args.design).with_context(|| format!("reading design {}", args.design.display()))?;
    let y = read_vector(&args.response).with_context(|| format!("reading response {}", args.response.display()))?;
    let data = Dataset::observed(x, y)?;
    let c = contrast_vector(&args.contrast, &data)?;
    let mut rng = SimRng::seed_from_u64(args.seed);

    let needs_cv = args.method != Method::OlsRb
        && (args.rho.is_none() || (args.method == Method::RidgeRb && args.pilot_rho.is_none()));
    let (mut pilot_rho, mut rho) = (args.pilot_rho, args.rho);
    if needs_cv {
        let n = data.n() as f64;
        let grid = log_grid(
            args.grid.cv_grid_min.unwrap_or(1e-4 * n),
            args.grid.cv_grid_max.unwrap_or(1e2 * n),
            args.grid.cv_grid_size.unwrap_or(DEFAULT_GRID_SIZE),
        )?;
        let plan = cv_select_with(&data, &grid, args.grid.cv_folds.unwrap_or(DEFAULT_FOLDS), Prefactors::default(), &mut rng)?;
        if let Some(path) = &args.plan_out {
            fs::write(path, plan.to_csv()).with_context(|| format!("writing {}", path.display()))?;
        }
        pilot_rho = pilot_rho.or(Some(plan.pilot_rho));
        rho = rho.or(Some(plan.inference_rho));
    }

    let interval = match args.method {
        Method::RidgeRb => ci_ridge_rb(
            &data,
            &c,
            rho.expect("set above"),
            pilot_rho.expect("set above"),
            args.b,
            args.level,
            &mut rng,
        )?,
        Method::Normal => ci_normal(&data, &c, rho.expect("set above"), args.level)?,
        Method::OlsRb => ci_ols_rb(&data, &c, args.b, args.level, &mut rng)?,
        Method::Oracle => bail!("the oracle interval needs the true error law; use `simulate`"),
    };
    let text = format!(
        "method,level,lower,upper,estimate\n{},{},{},{},{}\n",
        interval.method, interval.level, interval.lower, interval.upper, interval.estimate
    );
    emit(&text, args.out.as_deref())
}

fn apply_overrides(config: &mut ExperimentConfig, args: &SimulateArgs) {
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field {
                config.$field = v;
            }
        )*};
    }
    set!(seed, threads, eta, n, p, n1, n2, b);
    if let Some(v) = args.grid.cv_grid_min {
        config.cv_grid_min = v;
    }
    if let Some(v) = args.grid.cv_grid_max {
        config.cv_grid_max = v;
    }
    if let Some(v) = args.grid.cv_grid_size {
        config.cv_grid_size = v;
    }
    if let Some(v) = args.grid.cv_folds {
        config.cv_folds = v;
    }
    if args.cv_per_design {
        config.cv_per_design = true;
    }
}

fn preset_number(name: &str) -> Result<usize> {
    name.strip_prefix("setting")
        .and_then(|k| k.parse().ok())
        .with_context(|| format!("unknown preset `{name}` (expected setting1 to setting4)"))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut configs = match (&args.config, args.preset.is_empty()) {
        (Some(path), true) => vec![read_config(path).with_context(|| format!("reading config {}", path.display()))?],
        (None, false) => args
            .preset
            .iter()
            .map(|name| Ok(ExperimentConfig::preset(preset_number(name)?, args.scale)?))
            .collect::<Result<Vec<_>>>()?,
        _ => bail!("give either --config or --preset"),
    };
    for config in &mut configs {
        apply_overrides(config, &args);
        config.validate()?;
    }
    if args.dump_config {
        let dumped: Vec<String> = configs.iter().map(|c| c.to_toml()).collect::<ridgeboot::Result<_>>()?;
        print!("{}", dumped.join("\n"));
        return Ok(());
    }
    let results = configs.iter().map(run_table1).collect::<ridgeboot::Result<Vec<_>>>()?;
    let skips: usize = results.iter().map(|r| r.methods[0].skips).sum();
    if skips > 0 {
        eprintln!("warning: {skips} instances skipped after numerical failures");
    }
    match &args.out {
        Some(path) => write_results(&results, path).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", ridgeboot::harness::results_to_csv(&results)),
    }
    if args.strict && skips > 0 {
        bail!("{skips} skipped instances");
    }
    Ok(())
}

fn check(args: CheckArgs) -> Result<()> {
    let mut config = match (&args.config, args.quick) {
        (Some(path), _) => read_suite_config(path).with_context(|| format!("reading config {}", path.display()))?,
        (None, true) => SuiteConfig::quick(),
        (None, false) => SuiteConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(threads) = args.threads {
        config.threads = threads;
    }
    if args.dump_config {
        print!("{}", config.to_toml()?);
        return Ok(());
    }
    let reports = run_suite(args.suite, &config)?;
    emit(&reports_to_csv(&reports), args.out.as_deref())?;
    let failed = reports.iter().filter(|r| !r.holds).count();
    eprintln!("{}: {} of {} checks hold", args.suite, reports.len() - failed, reports.len());
    if args.strict && failed > 0 {
        bail!("{failed} checks failed");
    }
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let spec = ridgeboot::designs::NoiseSpec::new(args.noise.0.clone(), args.sigma)?;
    let mut rng = SimRng::seed_from_u64(args.seed);
    let cov = make_covariance(args.p, args.eta, &mut rng)?;
    let beta = make_beta(args.p, BetaStyle::UniformUnit)?;
    let data = generate_dataset(args.n, &cov, &beta, &spec, &mut rng)?;
    write_matrix(&args.design, data.x())?;
    write_vector(&args.response, data.y())?;
    if let Some(path) = &args.beta {
        write_vector(path, &beta)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Ci(args) => ci(args),
        Command::Simulate(args) => simulate(args),
        Command::Check(args) => check(args),
        Command::Generate(args) => generate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
