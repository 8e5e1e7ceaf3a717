use std::io::{stdout, BufWriter};
use std::path::PathBuf;

use clap::Args;
use noisynb::io::{read_model, write_predictions, write_predictions_to};
use noisynb::predict_batch_mixed;

use crate::common::{load_dataset, require_file, CliError, CliResult};

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Predictions file; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn run(args: &PredictArgs) -> CliResult<()> {
    require_file(&args.model)?;
    let doc = read_model(&args.model)?;
    let (data, _) = load_dataset(&args.data)?;
    let params = doc.params()?;
    let gaussian = doc.gaussian_params()?;
    if data.d1() != params.d() {
        return Err(CliError::Validation(format!(
            "model has {} binary features, data has {}",
            params.d(),
            data.d1()
        )));
    }
    let data = if gaussian.d2() == 0 {
        // binary model: continuous columns, if any, play no part
        noisynb::MixedDataset::new(data.binary().clone(), ndarray::Array2::zeros((data.n(), 0)))?
    } else {
        match doc.gaussian.as_ref().and_then(|g| g.standardization.as_ref()) {
            Some(s) => data.standardize_with(&s.mean, &s.scale)?,
            None => data,
        }
    };
    let rows = predict_batch_mixed(&params, &gaussian, &data)?;
    match &args.output {
        Some(path) => write_predictions(path, &rows)?,
        None => write_predictions_to(BufWriter::new(stdout().lock()), &rows)?,
    }
    Ok(())
}
