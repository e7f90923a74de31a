//! `cmi`: batch front-end for divergence evaluation, inequality verification
//! sweeps, PAC-Bayes bound tables, Monte Carlo certification and coverage
//! experiments.
//!
//! Exit codes: 0 success, 1 verification found violations, 2 invalid input,
//! 3 I/O or malformed file, 4 internal failure.

mod commands;
mod error;
mod inputs;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "cmi",
    version,
    about = "Change-of-measure inequalities toolkit"
)]
pub struct Cli {
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Base seed of every random draw; recorded in the output.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate D_f(Q||P) for two distribution files.
    Divergence(DivergenceArgs),
    /// Check one change-of-measure inequality on files or random triples.
    Verify(VerifyArgs),
    /// Tabulate PAC-Bayes addends over a parameter grid.
    PacTable(PacTableArgs),
    /// Certified interval for E_Q[phi] from samples of P.
    McCertify(McCertifyArgs),
    /// Empirical coverage experiments.
    #[command(subcommand)]
    Coverage(CoverageCommand),
    /// Run a command described by a key=value config file.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct DivergenceArgs {
    /// Divergence token, e.g. kl, pearson-chi2, alpha:1.5.
    #[arg(long)]
    pub kind: String,
    /// Distribution file for Q.
    #[arg(long)]
    pub q: PathBuf,
    /// Distribution file for P.
    #[arg(long)]
    pub p: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Inequality token, e.g. kl-constrained, multiplicative-alpha:1.5.
    #[arg(long)]
    pub id: String,
    /// Number of random triples.
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 2)]
    pub min_support: usize,
    #[arg(long, default_value_t = 16)]
    pub max_support: usize,
    /// Lower end of the phi sampling range.
    #[arg(long, requires = "phi_max", allow_hyphen_values = true)]
    pub phi_min: Option<f64>,
    /// Upper end of the phi sampling range.
    #[arg(long, requires = "phi_min", allow_hyphen_values = true)]
    pub phi_max: Option<f64>,
    /// Distribution file for Q (single-instance mode).
    #[arg(long, requires_all = ["p", "phi"])]
    pub q: Option<PathBuf>,
    /// Distribution file for P (single-instance mode).
    #[arg(long, requires_all = ["q", "phi"])]
    pub p: Option<PathBuf>,
    /// Test-function file (single-instance mode).
    #[arg(long, requires_all = ["q", "p"])]
    pub phi: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PacTableArgs {
    /// Loss-class tokens: bounded:R, subgaussian:sigma, subexp:sigma:beta,
    /// bounded-variance:sigma2.
    #[arg(long, required = true, num_args = 1..)]
    pub loss: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    pub m: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    pub delta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub alpha: Vec<f64>,
    /// D_alpha(Q||P) values; `inf` is accepted.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub div: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct McCertifyArgs {
    /// kl, chi2, pseudo-alpha or pseudo-alpha:ALPHA.
    #[arg(long)]
    pub form: String,
    /// Lipschitz constant of phi.
    #[arg(long = "L")]
    pub lipschitz: f64,
    /// Strong log-concavity parameter of the sampling distribution.
    #[arg(long)]
    pub gamma: f64,
    /// Sample count; must match the samples file.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub delta: f64,
    /// Divergence for the chosen form.
    #[arg(long)]
    pub div: f64,
    /// File with one sample per line.
    #[arg(long)]
    pub samples: PathBuf,
    /// Alpha of the pseudo-alpha form.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// identity, affine:SLOPE:INTERCEPT or clipped:SLOPE:INTERCEPT:LO:HI.
    #[arg(long, default_value = "identity", allow_hyphen_values = true)]
    pub phi: String,
}

#[derive(Debug, Subcommand)]
pub enum CoverageCommand {
    /// PAC-Bayes violation rate of a finite-hypothesis Gibbs experiment.
    Pac(PacCoverageArgs),
    /// Coverage of certified Monte Carlo intervals under Gaussians.
    Mc(McCoverageArgs),
}

#[derive(Debug, Args)]
pub struct PacCoverageArgs {
    #[arg(long, default_value = "bounded:1")]
    pub loss: String,
    /// bernoulli, gaussian:SD or shifted-exp:RATE.
    #[arg(long, default_value = "bernoulli")]
    pub model: String,
    #[arg(long, default_value_t = 20)]
    pub hypotheses: usize,
    /// Smallest per-hypothesis mean loss (or shift).
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub mean_lo: f64,
    /// Largest per-hypothesis mean loss (or shift).
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub mean_hi: f64,
    #[arg(long, default_value_t = 200)]
    pub m: u64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    /// multiplicative, additive or both.
    #[arg(long, default_value = "both")]
    pub form: String,
    /// Inverse temperature of the exponential-weights posterior.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
}

#[derive(Debug, Args)]
pub struct McCoverageArgs {
    /// kl, chi2, pseudo-alpha or pseudo-alpha:ALPHA.
    #[arg(long, default_value = "kl")]
    pub form: String,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub q_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q_var: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub p_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p_var: f64,
    /// identity, affine:SLOPE:INTERCEPT or clipped:SLOPE:INTERCEPT:LO:HI.
    #[arg(long, default_value = "identity", allow_hyphen_values = true)]
    pub phi: String,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 500)]
    pub repeats: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config file with `command=...` and one `key=value` per flag.
    pub config: PathBuf,
}

/// Translates a key=value config into an argument vector. `command` selects
/// the subcommand (`mode=pac|mc` for coverage); every other key becomes the
/// flag `--key`.
fn config_to_args(pairs: &[(String, String)]) -> CliResult<Vec<OsString>> {
    let lookup = |key: &str| {
        pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    };
    let command = lookup("command")
        .ok_or_else(|| CliError::Validation("config is missing the `command` key".into()))?;
    let mut args: Vec<OsString> = vec!["cmi".into()];
    match command {
        "divergence" | "verify" | "pac-table" | "mc-certify" => args.push(command.into()),
        "coverage" => {
            let mode = lookup("mode").ok_or_else(|| {
                CliError::Validation("coverage config needs `mode=pac` or `mode=mc`".into())
            })?;
            if !matches!(mode, "pac" | "mc") {
                return Err(CliError::Validation(format!(
                    "unknown coverage mode {mode:?}"
                )));
            }
            args.push("coverage".into());
            args.push(mode.into());
        }
        other => return Err(CliError::Validation(format!("unknown command {other:?}"))),
    }
    for (k, v) in pairs {
        if k == "command" || (k == "mode" && command == "coverage") {
            continue;
        }
        if k.is_empty() || k.starts_with('-') {
            return Err(CliError::Validation(format!("invalid config key {k:?}")));
        }
        args.push(format!("--{k}").into());
        args.push(v.into());
    }
    Ok(args)
}

fn execute(cli: Cli) -> CliResult<i32> {
    if let Command::Run(run) = &cli.command {
        let pairs = inputs::config(&run.config)?;
        let args = config_to_args(&pairs)?;
        let nested = Cli::try_parse_from(args).map_err(|e| CliError::Validation(e.to_string()))?;
        if matches!(nested.command, Command::Run(_)) {
            return Err(CliError::Validation("configs cannot nest `run`".into()));
        }
        return execute(nested);
    }
    let report = commands::dispatch(&cli)?;
    match &cli.out {
        Some(path) => std::fs::write(path, &report.text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{}", report.text),
    }
    Ok(report.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("cmi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
