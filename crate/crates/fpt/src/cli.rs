use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use fpt_core::asym::AsymOptions;
use fpt_core::exact::SeriesOptions;
use fpt_core::{McConfig, Quantity};

use crate::commands::{self, SimMethod, Which};
use crate::error::{CliError, EXIT_ERROR, EXIT_OK};
use crate::exec::Rayon;
use crate::report::{self, Artifact, Format, RunConfig, SeedSource, TableRange};
use crate::spec_file;
use crate::validate;

/// Seed used when neither `--seed` nor this variable is set.
pub const SEED_ENV: &str = "FPT_DEFAULT_SEED";

#[derive(Debug, Parser)]
#[command(name = "fpt", version, about = "Exponential moments of random-walk passage, visit and last-exit times")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for simulation; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Critical exponent, minimizer and finiteness verdicts.
    Analyze {
        #[arg(long)]
        dist: PathBuf,
        /// Exponents to classify; repeat or separate with commas.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        a: Vec<f64>,
    },
    /// Tilted law and normalization witness at `(a, gamma)`.
    TiltCheck {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        /// Defaults to the minimal root of `phi(gamma) = exp(-a)`.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Monte Carlo estimate of `E exp(a Q(x))`.
    Simulate {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, default_value_t = 0.0)]
        x: f64,
        #[arg(long, value_parser = parse_quantity)]
        quantity: Quantity,
        #[arg(long, value_enum, default_value = "direct")]
        method: SimMethod,
        /// Dump per-path functionals to this CSV file.
        #[arg(long)]
        emit_paths: Option<PathBuf>,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Exact lattice series.
    Series {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, default_value_t = 0.0)]
        x: f64,
        #[arg(long, value_enum)]
        which: Which,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Asymptotic constant, optionally with a convergence table.
    Asymptote {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        a: f64,
        #[arg(long, value_parser = parse_quantity)]
        quantity: Quantity,
        /// Levels `start:end:step`, both ends included.
        #[arg(long)]
        table: Option<String>,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Checks the closed-form reference walks against the general pipelines.
    Validate {
        #[command(flatten)]
        mc: McArgs,
    },
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long, default_value_t = 100_000)]
    pub paths: u64,
    /// Defaults to $FPT_DEFAULT_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Probability budget of the truncation barrier.
    #[arg(long, default_value_t = 1e-6)]
    pub barrier_epsilon: f64,
    /// Steps after which a path is abandoned.
    #[arg(long, default_value_t = 10_000_000)]
    pub horizon_cap: u64,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    #[arg(long, default_value_t = 1e-12)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_terms: u64,
}

fn parse_quantity(s: &str) -> Result<Quantity, String> {
    s.parse().map_err(|e: fpt_core::Error| e.to_string())
}

fn resolve_seed(flag: Option<u64>) -> Result<(u64, SeedSource), CliError> {
    if let Some(s) = flag {
        return Ok((s, SeedSource::Flag));
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(|s| (s, SeedSource::Env))
            .map_err(|_| CliError::usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok((0, SeedSource::Default)),
    }
}

impl McArgs {
    fn resolve(&self, cfg: &mut RunConfig) -> Result<McConfig, CliError> {
        let (seed, source) = resolve_seed(self.seed)?;
        let mc = McConfig {
            n_paths: self.paths,
            seed,
            barrier_epsilon: self.barrier_epsilon,
            horizon_cap: self.horizon_cap,
            workers: 1,
        };
        mc.validate()?;
        cfg.paths = Some(mc.n_paths);
        cfg.seed = Some(seed);
        cfg.seed_source = Some(source);
        cfg.barrier_epsilon = Some(mc.barrier_epsilon);
        cfg.horizon_cap = Some(mc.horizon_cap);
        Ok(mc)
    }
}

impl SeriesArgs {
    fn resolve(&self, cfg: &mut RunConfig) -> Result<SeriesOptions, CliError> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) || self.max_terms == 0 {
            return Err(CliError::usage("need 0 < rel-tol < 1 and max-terms >= 1"));
        }
        cfg.rel_tol = Some(self.rel_tol);
        cfg.max_terms = Some(self.max_terms);
        Ok(SeriesOptions { rel_tol: self.rel_tol, max_terms: self.max_terms })
    }
}

fn load(dist: &Path, cfg: &mut RunConfig) -> Result<fpt_core::IncrementSpec, CliError> {
    cfg.dist = Some(dist.display().to_string());
    let (file, spec) = spec_file::load(dist)?;
    cfg.spec = Some(file);
    Ok(spec)
}

/// Executes one parsed command; returns the exit status.
pub fn execute(cli: Cli) -> i32 {
    let mut cfg = RunConfig { format: Some(cli.format), ..Default::default() };
    let output = cli.output.clone();
    let outcome = dispatch(cli, &mut cfg).and_then(|(artifact, status)| {
        let bytes = report::render(&cfg, &artifact)?;
        report::emit(&bytes, output.as_deref())?;
        Ok(status)
    });
    match outcome {
        Ok(status) => status,
        Err(e) => {
            let mut doc = e.to_json();
            doc["config"] = serde_json::to_value(&cfg).unwrap_or_default();
            println!("{}", serde_json::to_string_pretty(&doc).unwrap_or_default());
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, cfg: &mut RunConfig) -> Result<(Artifact, i32), CliError> {
    let exec = Rayon::new(cli.workers)?;
    match cli.command {
        Command::Analyze { dist, a } => {
            cfg.command = "analyze".into();
            let spec = load(&dist, cfg)?;
            cfg.a = a.clone();
            Ok((commands::analyze(&spec, &a)?, EXIT_OK))
        }
        Command::TiltCheck { dist, a, gamma } => {
            cfg.command = "tilt-check".into();
            let spec = load(&dist, cfg)?;
            cfg.a = vec![a];
            cfg.gamma = gamma;
            Ok((commands::tilt_check(&spec, a, gamma)?, EXIT_OK))
        }
        Command::Simulate { dist, a, x, quantity, method, emit_paths, mc } => {
            cfg.command = "simulate".into();
            let spec = load(&dist, cfg)?;
            cfg.a = vec![a];
            cfg.x = Some(x);
            cfg.quantity = Some(quantity.name().into());
            cfg.method = Some(format!("{method:?}").to_lowercase());
            cfg.emit_paths = emit_paths.is_some();
            let mc = mc.resolve(cfg)?;
            let art = commands::simulate(&spec, a, x, quantity, method, &mc, &exec, emit_paths.as_deref())?;
            Ok((art, EXIT_OK))
        }
        Command::Series { dist, a, x, which, series } => {
            cfg.command = "series".into();
            let spec = load(&dist, cfg)?;
            cfg.a = vec![a];
            cfg.x = Some(x);
            cfg.which = Some(which.name().into());
            let opts = series.resolve(cfg)?;
            Ok((commands::series(&spec, a, x, which, &opts)?, EXIT_OK))
        }
        Command::Asymptote { dist, a, quantity, table, mc, series } => {
            cfg.command = "asymptote".into();
            let spec = load(&dist, cfg)?;
            cfg.a = vec![a];
            cfg.quantity = Some(quantity.name().into());
            let range = table.as_deref().map(TableRange::parse).transpose()?;
            cfg.table = range;
            let opts = AsymOptions { mc: mc.resolve(cfg)?, series: series.resolve(cfg)?, ..Default::default() };
            Ok((commands::asymptote(&spec, a, quantity, range.as_ref(), &opts, &exec)?, EXIT_OK))
        }
        Command::Validate { mc } => {
            cfg.command = "validate".into();
            let mc = mc.resolve(cfg)?;
            let (checks, all_pass) = validate::run(&mc, &exec)?;
            let status = if all_pass { EXIT_OK } else { EXIT_ERROR };
            Ok((validate::artifact(&checks, all_pass)?, status))
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            EXIT_OK
        }
        Err(e) => {
            let doc = serde_json::json!({
                "error": { "kind": "invalid_argument", "message": e.to_string(), "exit_code": EXIT_ERROR }
            });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap_or_default());
            EXIT_ERROR
        }
    }
}
