//! Command-line front end: single-point bias reports, sweeps written as CSV,
//! and the validation suite.

pub mod config;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use weakbias::dephasing::{bias_point, sweep, sweep_grid, FockCutoff, Spacing, SweepAxis, SweepRecord};
use weakbias::report::to_csv_string;
use weakbias::validate::{self, ValidateOptions};

pub use config::{Preset, Settings};

#[derive(Parser, Debug)]
#[command(name = "weakbias", version, about = "Estimator bias of weak measurements under probe dephasing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Biases of both arms at one parameter point, as a one-row CSV.
    Point(PointArgs),
    /// Biases along one parameter axis, as CSV.
    Sweep(SweepArgs),
    /// Runs the numerical self-checks.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Default)]
pub struct ModelArgs {
    /// Inverse bath temperature ω/kT.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Probe basis rotation angle.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Postselection angle.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// True coupling g0.
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<f64>,
    /// Probe-bath coupling strength.
    #[arg(long = "eps-d", allow_hyphen_values = true)]
    pub eps_d: Option<f64>,
    /// Interaction time.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Fock cutoff: "auto" or a positive integer.
    #[arg(long)]
    pub nmax: Option<FockCutoff>,
    /// Flat key=value file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct PointArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also locate the likelihood maximum numerically.
    #[arg(long)]
    pub oracle: bool,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Swept parameter: delta, g, eps_d, beta or theta.
    #[arg(long)]
    pub axis: Option<SweepAxis>,
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// linear or log.
    #[arg(long)]
    pub spacing: Option<Spacing>,
    /// Axis, range and spacing of one of the ratio figures.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Also locate the likelihood maximum numerically at every point.
    #[arg(long)]
    pub oracle: bool,
    /// Output file, replaced atomically; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct ValidateArgs {
    /// Seed of the randomized setups.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sets every structural tolerance to zero, so the checks must fail.
    #[arg(long, hide = true)]
    pub debug_zero_tolerance: bool,
}

impl ModelArgs {
    fn settings(&self) -> Settings {
        Settings {
            beta: self.beta,
            theta: self.theta,
            delta: self.delta,
            g: self.g,
            eps_d: self.eps_d,
            t: self.t,
            nmax: self.nmax,
            ..Settings::default()
        }
    }
}

/// A failed run, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameter values (exit 2).
    Usage(anyhow::Error),
    /// Model, numerical or I/O failure, or failed checks (exit 1).
    Data(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Data(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(e) | Self::Data(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

type CliResult<T> = Result<T, CliError>;

fn usage(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Usage(e.into())
}

fn data(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Data(e.into())
}

/// Runs one command, writing results to `stdout` unless an output file is
/// configured.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Point(a) => run_point(&a, stdout),
        Command::Sweep(a) => run_sweep(&a, stdout),
        Command::Validate(a) => run_validate(&a, stdout),
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()).map_err(data),
        None => stdout
            .write_all(text.as_bytes())
            .and_then(|_| stdout.flush())
            .context("cannot write to standard output")
            .map_err(data),
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn run_point(args: &PointArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let flags = Settings {
        oracle: args.oracle.then_some(true),
        out: args.out.clone(),
        ..args.model.settings()
    };
    let s = config::resolve(flags, args.model.config.as_deref()).map_err(usage)?;
    let params = s.params();
    params.validate().map_err(usage)?;
    let oracle = s.oracle.unwrap_or(false);
    match bias_point(&params, oracle) {
        Ok(record) => emit(s.out.as_deref(), &to_csv_string(&[record], oracle), stdout),
        Err(e) => {
            let row = SweepRecord::undefined("g", params.g, oracle);
            emit(s.out.as_deref(), &to_csv_string(&[row], oracle), stdout)?;
            Err(data(e))
        }
    }
}

pub fn run_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let flags = Settings {
        axis: args.axis,
        from: args.from,
        to: args.to,
        points: args.points,
        spacing: args.spacing,
        preset: args.preset,
        oracle: args.oracle.then_some(true),
        out: args.out.clone(),
        ..args.model.settings()
    };
    let s = config::resolve(flags, args.model.config.as_deref()).map_err(usage)?;
    let params = s.params();
    params.validate().map_err(usage)?;
    let spec = s.sweep_spec().map_err(usage)?;
    sweep_grid(&spec).map_err(usage)?;
    let oracle = s.oracle.unwrap_or(false);
    let records = sweep(&params, &spec, oracle).map_err(data)?;
    let undefined = records.iter().filter(|r| r.dg_n.is_nan() || r.dg_p.is_nan()).count();
    emit(s.out.as_deref(), &to_csv_string(&records, oracle), stdout)?;
    if let Some(path) = &s.out {
        eprintln!("wrote {} rows to {}", records.len(), path.display());
    }
    if undefined > 0 {
        eprintln!("{undefined} of {} points undefined (nan rows)", records.len());
    }
    Ok(())
}

pub fn run_validate(args: &ValidateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let flags = Settings {
        seed: args.seed,
        ..Settings::default()
    };
    let s = config::resolve(flags, args.config.as_deref()).map_err(usage)?;
    let opts = ValidateOptions {
        seed: s.seed.unwrap_or(0),
        tolerance_scale: if args.debug_zero_tolerance { 0.0 } else { 1.0 },
        ..ValidateOptions::default()
    };
    let report = validate::run(&opts);
    emit(None, &format!("{report}\n"), stdout)?;
    if report.all_passed() {
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|c| c.name).collect();
        Err(data(anyhow!("failed checks: {}", names.join(", "))))
    }
}
