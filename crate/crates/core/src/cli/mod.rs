//! Batch front end: config loading, seed resolution, experiment runs and
//! report files.

pub mod config;
pub mod presets;
pub mod report;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

pub use config::{ConfigError, DPrimeConfig, ExperimentConfig, NormingChoice};
pub use presets::{list_presets, load_preset, preset_text, PresetInfo};

use crate::engine::{compare, dprime_curve, marginal_report, ExperimentSpec, JointEcdf, Simulation};
use crate::error::Error;
use crate::limits::limit_surface;
use crate::norming::{auto_norming, quantile_norming_for, Norming};
use report::RunReport;

/// Environment variable consulted when neither the command line nor the config sets a seed.
pub const SEED_ENV: &str = "MAXREPLACE_SEED";
pub const DEFAULT_SEED: u64 = 0x5EED;
pub const DEFAULT_OUTPUT_DIR: &str = "maxreplace-out";

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numeric(Error),
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// Process exit status: 2 for configuration errors, 3 for numeric failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => e.fmt(f),
            CliError::Numeric(e) => write!(f, "numeric failure: {e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

/// Engine errors during a run: bad input is a config error, the rest numeric.
fn engine_error(e: Error) -> CliError {
    if e.is_numeric() {
        CliError::Numeric(e)
    } else {
        CliError::Config(ConfigError::from_model("config", e))
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a config from a file path, or from a bundled preset of that name.
pub fn load_config(source: &str) -> Result<ExperimentConfig, CliError> {
    let path = Path::new(source);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(io_error(path))?;
        return Ok(ExperimentConfig::parse(&text)?);
    }
    match load_preset(source) {
        Some(parsed) => Ok(parsed?),
        None => Err(CliError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such config file or preset"),
        }),
    }
}

/// Seed precedence: command line, then config, then the environment, then the default.
pub fn resolve_seed(cli: Option<u64>, config: Option<u64>, env: Option<&str>) -> Result<u64, ConfigError> {
    if let Some(s) = cli.or(config) {
        return Ok(s);
    }
    match env {
        Some(text) => text
            .trim()
            .parse()
            .map_err(|_| ConfigError::new(SEED_ENV, format!("expected an unsigned 64-bit integer, got `{text}`"))),
        None => Ok(DEFAULT_SEED),
    }
}

pub fn resolve_norming(config: &ExperimentConfig) -> Result<Norming, ConfigError> {
    let n = config.n;
    let result = match config.norming {
        NormingChoice::Auto => auto_norming(&config.process, n),
        NormingChoice::Quantile => quantile_norming_for(&config.process, n),
        NormingChoice::Explicit { a, b } => Norming::explicit(a, b, n),
    };
    result.map_err(|e| match e {
        Error::Domain(msg) => ConfigError::new("n", msg),
        Error::UnsupportedMarginal(msg) => ConfigError::new("norming.kind", msg),
        Error::InvalidParameter { field, reason } => {
            ConfigError::new(format!("norming.{}", field.trim_end_matches("_n")), reason)
        }
        other => ConfigError::from_model("norming", other),
    })
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Worker threads; 0 means all available cores.
    pub workers: usize,
    pub out: Option<PathBuf>,
    /// Value of the seed environment variable, if set.
    pub env_seed: Option<String>,
}

impl RunOptions {
    /// Options with the seed environment variable read from the process environment.
    pub fn from_env() -> Self {
        RunOptions {
            env_seed: std::env::var(SEED_ENV).ok(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub seed: u64,
    pub sup_distance: f64,
    pub mc_standard_error: f64,
    pub perturbed_marginal_sup: f64,
    pub original_marginal_sup: f64,
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Runs one experiment and writes its report files.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<RunSummary, CliError> {
    let seed = resolve_seed(options.seed, config.seed, options.env_seed.as_deref())?;
    let workers = if options.workers == 0 { default_workers() } else { options.workers };
    let norming = resolve_norming(config)?;
    let spec = ExperimentSpec {
        process: config.process.clone(),
        selection: config.selection.clone(),
        mode: config.mode,
        n: config.n,
        replications: config.replications,
        grid: config.grid.clone(),
        seed,
        norming: norming.clone(),
    };

    let outcomes = Simulation::from_spec(&spec)
        .and_then(|sim| sim.run(spec.replications, workers))
        .map_err(engine_error)?;
    let ecdf = JointEcdf::from_outcomes(&spec.grid, &outcomes);
    let surface = limit_surface(&spec.grid, &spec.selection.lambda_law, spec.mode).map_err(engine_error)?;
    let comparison = compare(&ecdf, &surface).map_err(engine_error)?;
    let marginals =
        marginal_report(&spec.grid, &outcomes, &spec.selection.lambda_law, spec.mode).map_err(engine_error)?;
    let dprime = match &config.dprime {
        Some(d) => Some(
            dprime_curve(&spec.process, spec.n, &d.ks, d.x_level, &norming, d.replications, seed, workers)
                .map_err(engine_error)?,
        ),
        None => None,
    };

    let report = RunReport::new(config, seed, &norming, &comparison, surface.law, &marginals, &outcomes, dprime);
    let json = serde_json::to_value(&report).map_err(|e| CliError::Numeric(Error::Domain(e.to_string())))?;
    if let Some(path) = report::first_non_finite(&json, "report") {
        return Err(CliError::Numeric(Error::Domain(format!("non-finite value at {path}"))));
    }
    let mut json_text = serde_json::to_string_pretty(&json).map_err(|e| CliError::Numeric(Error::Domain(e.to_string())))?;
    json_text.push('\n');

    let dir = options
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| Path::new(DEFAULT_OUTPUT_DIR).join(&config.name));
    fs::create_dir_all(&dir).map_err(io_error(&dir))?;
    let files = [
        (report::SURFACE_EMPIRICAL, report::surface_csv(&spec.grid, &comparison.empirical)),
        (report::SURFACE_THEORY, report::surface_csv(&spec.grid, &comparison.theoretical)),
        (report::MARGINALS, report::marginals_csv(&marginals)),
        (report::REPORT, json_text),
        (report::PLOT_SCRIPT, report::PLOT_STUB.to_string()),
    ];
    for (name, contents) in files {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(io_error(&path))?;
    }

    Ok(RunSummary {
        output_dir: dir,
        seed,
        sup_distance: comparison.sup_distance,
        mc_standard_error: comparison.mc_standard_error,
        perturbed_marginal_sup: marginals.perturbed_sup_distance,
        original_marginal_sup: marginals.original_sup_distance,
    })
}
