//! Command-line front end for the `mdiqkd` library.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit status, writing CSV to `--out` (or stdout) and diagnostics to stderr.

pub mod choice;
pub mod commands;
pub mod config;

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use commands::Outcome;
use config::{beta_from_squared, parse_count, parse_dof_value, Overrides, Settings};
use mdiqkd::channel::theta_from_sin2;
use mdiqkd::QkdError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ABORT: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Qkd(#[from] QkdError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn io(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mdiqkd",
    version,
    about = "Multi-DOF measurement-device-independent QKD: analytic rates and Monte Carlo runs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: CommonOpts,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic key rate versus distance, one CSV row per distance.
    AnalyticSweep,
    /// Seeded Monte Carlo run of the protocol with per-DOF statistics.
    Simulate,
    /// Hyper-Bell decomposition of two product photons.
    Decompose {
        /// Alice's states, e.g. HLI or V,+f,-s
        #[arg(allow_hyphen_values = true)]
        alice: String,
        /// Bob's states, same syntax
        #[arg(allow_hyphen_values = true)]
        bob: String,
    },
}

/// Options shared by every subcommand; they override `--config` values.
#[derive(Debug, Args, Default)]
pub struct CommonOpts {
    /// key = value configuration file
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// CSV destination (default: standard output)
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of rounds; accepts 1e6
    #[arg(long, global = true, value_parser = parse_count)]
    pub rounds: Option<u64>,
    /// Degrees of freedom per photon
    #[arg(long, global = true)]
    pub dofs: Option<usize>,
    #[arg(long, global = true, value_name = "KM")]
    pub d_start: Option<f64>,
    #[arg(long, global = true, value_name = "KM")]
    pub d_end: Option<f64>,
    #[arg(long, global = true, value_name = "KM")]
    pub d_step: Option<f64>,
    /// Channel length for simulate
    #[arg(long, global = true, value_name = "KM")]
    pub distance: Option<f64>,
    /// Source fidelity |beta|^2 of one DOF, repeatable
    #[arg(long, global = true, value_name = "K=V", value_parser = parse_dof_value)]
    pub beta2: Vec<(usize, f64)>,
    /// Channel misalignment sin^2(theta) of one DOF, repeatable
    #[arg(long, global = true, value_name = "K=V", value_parser = parse_dof_value)]
    pub sin2theta: Vec<(usize, f64)>,
    /// Fiber attenuation
    #[arg(long, global = true, value_name = "DB_PER_KM")]
    pub atten: Option<f64>,
    /// Error-correction inefficiency
    #[arg(long, global = true, value_name = "REAL")]
    pub f_ec: Option<f64>,
    /// Check-basis QBER above which a run aborts
    #[arg(long, global = true, value_name = "REAL")]
    pub threshold: Option<f64>,
    /// |beta|^2 = 0.85 and sin^2(theta) = 0.015 in every DOF
    #[arg(long, global = true)]
    pub fig2: bool,
    /// Source imperfection model
    #[arg(long, global = true, value_name = "rotation|mixing", value_parser = config::parse_source_model)]
    pub source_model: Option<mdiqkd::SourceModel>,
    /// Channel rotation convention
    #[arg(long, global = true, value_name = "row|column", value_parser = config::parse_rotation)]
    pub rotation: Option<mdiqkd::RotationConvention>,
}

impl CommonOpts {
    fn overrides(&self) -> Result<Overrides, CliError> {
        let mut o = Overrides {
            n_dofs: self.dofs,
            seed: self.seed,
            rounds: self.rounds,
            d_start: self.d_start,
            d_end: self.d_end,
            d_step: self.d_step,
            distance: self.distance,
            atten: self.atten,
            f_ec: self.f_ec,
            threshold: self.threshold,
            source_model: self.source_model,
            rotation: self.rotation,
            ..Default::default()
        };
        for &(k, b2) in &self.beta2 {
            let beta = beta_from_squared(b2).map_err(CliError::Usage)?;
            if o.beta.insert(k, beta).is_some() {
                return Err(CliError::Usage(format!("--beta2 given twice for DOF {k}")));
            }
        }
        for &(k, s2) in &self.sin2theta {
            if o.theta.insert(k, theta_from_sin2(s2)?).is_some() {
                return Err(CliError::Usage(format!(
                    "--sin2theta given twice for DOF {k}"
                )));
            }
        }
        Ok(o)
    }

    /// Defaults, then the config file, then `--fig2`, then explicit flags.
    pub fn settings(&self) -> Result<Settings, CliError> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(CliError::io(format!("reading {}", path.display())))?;
                Overrides::parse_file(&text)?
            }
            None => Overrides::default(),
        };
        let flags = self.overrides()?;
        let mut settings = Settings::default();
        file.apply(&mut settings);
        if self.fig2 {
            let n = flags.n_dofs.unwrap_or(settings.n_dofs);
            Overrides::fig2(n).apply(&mut settings);
        }
        flags.apply(&mut settings);
        Ok(settings)
    }
}

fn emit(out_path: Option<&Path>, csv: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out_path {
        Some(path) => {
            std::fs::write(path, csv).map_err(CliError::io(format!("writing {}", path.display())))
        }
        None => stdout
            .write_all(csv.as_bytes())
            .map_err(CliError::io("standard output")),
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Outcome, CliError> {
    let settings = cli.opts.settings()?;
    let (csv, outcome) = match &cli.command {
        Command::AnalyticSweep => (commands::analytic_sweep(&settings, stderr)?, Outcome::Done),
        Command::Simulate => commands::simulate(&settings, stderr)?,
        Command::Decompose { alice, bob } => {
            let alice = choice::parse_choice(alice)?;
            let bob = choice::parse_choice(bob)?;
            (commands::decompose(&settings, &alice, &bob)?, Outcome::Done)
        }
    };
    emit(cli.opts.out.as_deref(), &csv, stdout)?;
    Ok(outcome)
}

/// Runs the command line `args` (including the program name) and returns the
/// exit status: 0 success, 1 usage or configuration error, 2 QBER abort,
/// 3 I/O error.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::Aborted) => EXIT_ABORT,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
