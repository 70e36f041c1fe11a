//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qabpnp_core::image::Fixture;

use crate::commands::{cmd_deconv, cmd_degrade, cmd_metrics, cmd_sweep, cmd_synth, SweepParam};
use crate::config::{RunConfig, OUTPUT_DIR_ENV};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qabpnp", version, about = "Poisson deconvolution with a quantum adaptive basis denoiser")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Shared configuration flags. Precedence, lowest first: built-in defaults,
/// `--config` file, the output directory environment variable, the flags
/// below, then `--set` assignments in order.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Config file of `key = value` lines
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set qab.planck=2` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    #[arg(short, long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FixtureArg {
    Chirp,
    Shapes,
    Rings,
}

impl From<FixtureArg> for Fixture {
    fn from(f: FixtureArg) -> Self {
        match f {
            FixtureArg::Chirp => Fixture::Chirp,
            FixtureArg::Shapes => Fixture::Shapes,
            FixtureArg::Rings => Fixture::Rings,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a built-in test image
    Synth {
        #[arg(long, value_enum, default_value = "chirp")]
        fixture: FixtureArg,
        #[arg(long, default_value_t = 64)]
        size: usize,
        /// Output file (defaults to <output_dir>/<fixture>.pgm)
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Blur and add Poisson noise at the configured SNR
    Degrade {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Restore a degraded image
    Deconv {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Restore once per value of one hyperparameter
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Print `psnr_db,ssim,rmse` of TEST against REFERENCE
    Metrics { reference: PathBuf, test: PathBuf },
}

pub fn resolve_config(args: &ConfigArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))?;
        cfg.apply_text(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    }
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
        cfg.output_dir = PathBuf::from(dir);
    }
    if let Some(p) = &args.input {
        cfg.input = Some(p.clone());
    }
    if let Some(p) = &args.output_dir {
        cfg.output_dir = p.clone();
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    for pair in &args.set {
        cfg.set_pair(pair)
            .map_err(|e| CliError::Usage(format!("--set {pair}: {e}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { fixture, size, out, cfg } => cmd_synth(&resolve_config(&cfg)?, fixture.into(), size, out),
        Command::Degrade { cfg } => cmd_degrade(&resolve_config(&cfg)?),
        Command::Deconv { cfg } => cmd_deconv(&resolve_config(&cfg)?),
        Command::Sweep { param, values, cfg } => cmd_sweep(&resolve_config(&cfg)?, param, &values),
        Command::Metrics { reference, test } => cmd_metrics(&reference, &test),
    }
}

/// Parses `args` (program name first), runs, and maps the outcome to an
/// exit code.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
