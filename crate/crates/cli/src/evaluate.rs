use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use clap::Args;
use ndarray::Array2;
use noisynb::io::{read_predictions, write_json, write_roc};
use noisynb::metrics::MetricsReport;

use crate::common::{load_dataset, print_rows, require_file, CliError, CliResult, Format};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predictions written by `predict`.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Gold labels: a dataset file (its `gold_label` column, else `label`) or
    /// another predictions file.
    #[arg(long)]
    pub gold: PathBuf,
    /// Name shown in the report.
    #[arg(long, default_value = "model")]
    pub method_name: String,
    /// Writes per-class ROC points to `<prefix>_class<k>.csv`.
    #[arg(long)]
    pub roc_prefix: Option<PathBuf>,
    /// Writes the full report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn first_header(path: &Path) -> CliResult<String> {
    let mut line = String::new();
    BufReader::new(File::open(path)?).read_line(&mut line)?;
    Ok(line.split(',').next().unwrap_or_default().trim().to_string())
}

fn read_gold(path: &Path) -> CliResult<Vec<usize>> {
    require_file(path)?;
    if first_header(path)? == "predicted" {
        return Ok(read_predictions(path)?.0);
    }
    let (data, _) = load_dataset(path)?;
    let b = data.binary();
    Ok(b.y_true().unwrap_or(b.y_observed()).to_vec())
}

pub fn run(args: &EvaluateArgs, format: Format) -> CliResult<()> {
    require_file(&args.predictions)?;
    let (predicted, scores) = read_predictions(&args.predictions)?;
    let gold = read_gold(&args.gold)?;
    if gold.len() != predicted.len() {
        return Err(CliError::Validation(format!(
            "{} predictions against {} gold labels",
            predicted.len(),
            gold.len()
        )));
    }
    let scores = match scores {
        Some(s) => s,
        None => {
            let k = predicted.iter().chain(&gold).max().map_or(1, |m| m + 1);
            let mut s = Array2::zeros((predicted.len(), k));
            for (i, &p) in predicted.iter().enumerate() {
                s[[i, p]] = 1.0;
            }
            s
        }
    };
    let report = MetricsReport::evaluate(args.method_name.clone(), &predicted, &scores, &gold)?;
    if let Some(prefix) = &args.roc_prefix {
        for path in write_roc(prefix, &report.per_class_roc)? {
            log::info!("wrote {}", path.display());
        }
    }
    if let Some(path) = &args.report {
        write_json(path, &report)?;
    }
    let row = vec![
        report.method_name.clone(),
        format!("{:.2}", report.acc),
        format!("{:.2}", report.macro_auc),
    ];
    print_rows(format, &["method", "acc", "auc"], &[row]);
    Ok(())
}
