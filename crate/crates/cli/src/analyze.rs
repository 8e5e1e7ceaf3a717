use clap::{Args, Subcommand};
use noisynb::impact::{gap_confusing_class, gap_constant_rho, gap_two_class, Gap};

use crate::common::{print_rows, CliError, CliResult, Format};

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Closed-form effect of label noise on one feature's class evidence.
    Impact(ImpactArgs),
}

#[derive(Debug, Args)]
pub struct ImpactArgs {
    /// `P(X = 1 | Y* = 1)` and `P(X = 1 | Y* = 2)` in the two-class case.
    #[arg(long, num_args = 2, default_values_t = [0.8, 0.2])]
    pub two_class_p: Vec<f64>,
    /// `rho_11` and `rho_12` in the two-class case.
    #[arg(long, num_args = 2, default_values_t = [0.9, 0.1])]
    pub two_class_rho: Vec<f64>,
    /// Classes in the constant-diagonal case.
    #[arg(long, default_value_t = 3)]
    pub constant_k: usize,
    /// Diagonal in the constant-diagonal case.
    #[arg(long, default_value_t = 0.8)]
    pub constant_rho: f64,
    /// Per-class `P(X = 1)` in the constant-diagonal case; defaults to an even
    /// spread from 0.8 down to 0.2.
    #[arg(long, value_delimiter = ',')]
    pub constant_p: Vec<f64>,
    /// Classes in the confusing-class case.
    #[arg(long, default_value_t = 30)]
    pub confusing_k: usize,
    #[arg(long, default_value_t = 0.9)]
    pub confusing_rho: f64,
    /// `P(X = 1)` for class 1; classes 2 and up share `--confusing-p2`.
    #[arg(long, default_value_t = 0.05)]
    pub confusing_p1: f64,
    #[arg(long, default_value_t = 0.6)]
    pub confusing_p2: f64,
}

pub fn run(command: &AnalyzeCommand, format: Format) -> CliResult<()> {
    match command {
        AnalyzeCommand::Impact(args) => impact(args, format),
    }
}

fn impact(args: &ImpactArgs, format: Format) -> CliResult<()> {
    let constant_p = if args.constant_p.is_empty() {
        let k = args.constant_k;
        if k < 2 {
            return Err(CliError::Validation("--constant-k must be at least 2".into()));
        }
        (0..k).map(|i| 0.8 - 0.6 * i as f64 / (k - 1) as f64).collect()
    } else {
        args.constant_p.clone()
    };
    let cases = [
        (
            "two-class",
            gap_two_class(args.two_class_p[0], args.two_class_p[1], args.two_class_rho[0], args.two_class_rho[1])?,
        ),
        ("constant", gap_constant_rho(args.constant_rho, &constant_p, 0, 1)?),
        (
            "confusing",
            gap_confusing_class(args.confusing_k, args.confusing_rho, args.confusing_p1, args.confusing_p2)?,
        ),
    ];
    let rows: Vec<Vec<String>> = cases.iter().map(|(name, gap)| row(name, gap)).collect();
    print_rows(
        format,
        &["case", "value", "clean_gap", "marginal_x1", "inversion", "flags"],
        &rows,
    );
    Ok(())
}

fn row(name: &str, gap: &Gap) -> Vec<String> {
    let flags: Vec<String> = gap.flags.iter().map(ToString::to_string).collect();
    vec![
        name.to_string(),
        format!("{:.6}", gap.value),
        format!("{:.6}", gap.clean),
        format!("{:.6}", gap.marginal_x1),
        gap.is_inversion().to_string(),
        if flags.is_empty() { "-".into() } else { flags.join(";") },
    ]
}
