//! Shared flags, error-to-exit-code mapping and output formatting.

use std::fmt;
use std::path::Path;

use clap::{Args, ValueEnum};
use noisynb::io::read_dataset;
use noisynb::{EmConfig, Error, MixedDataset};

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input (exit 2).
    Parse(String),
    /// Input that parses but violates a model invariant (exit 3).
    Validation(String),
    /// Anything else (exit 4).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Io(_) => CliError::Parse(e.to_string()),
            Error::DegenerateRow { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Delimited,
}

/// EM settings shared by `train`.
#[derive(Debug, Clone, Args)]
pub struct EmArgs {
    /// Seed for the random EM starts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Relative log-likelihood gain below which EM stops.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Random starts (the Naive Bayes warm start is extra).
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Lower end of the random initial diagonal of the mislabeling matrix.
    #[arg(long, default_value_t = 0.55)]
    pub rho_diag_floor: f64,
    /// Skip the Naive Bayes warm start.
    #[arg(long)]
    pub no_warm_start: bool,
    /// Hold the mislabeling matrix at the identity (plain Naive Bayes by EM).
    #[arg(long)]
    pub fix_rho_identity: bool,
}

impl EmArgs {
    pub fn config(&self) -> CliResult<EmConfig> {
        let config = EmConfig {
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
            restarts: self.restarts,
            rho_diag_floor: self.rho_diag_floor,
            fix_rho_identity: self.fix_rho_identity,
            warm_start: !self.no_warm_start,
        };
        config.validate()?;
        Ok(config)
    }
}

pub fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Parse(format!("{} is not a readable file", path.display())))
    }
}

pub fn load_dataset(path: &Path) -> CliResult<(MixedDataset, noisynb::io::DatasetManifest)> {
    require_file(path)?;
    Ok(read_dataset(path)?)
}

/// Prints rows as an aligned table or as comma-separated values.
pub fn print_rows(format: Format, header: &[&str], rows: &[Vec<String>]) {
    match format {
        Format::Delimited => {
            println!("{}", header.join(","));
            for r in rows {
                println!("{}", r.iter().map(|f| quote(f)).collect::<Vec<_>>().join(","));
            }
        }
        Format::Table => {
            let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
            for r in rows {
                for (w, f) in widths.iter_mut().zip(r) {
                    *w = (*w).max(f.chars().count());
                }
            }
            let line = |cells: Vec<&str>| {
                cells
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:>w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            println!("{}", line(header.to_vec()));
            for r in rows {
                println!("{}", line(r.iter().map(String::as_str).collect()));
            }
        }
    }
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}
