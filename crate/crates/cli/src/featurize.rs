use std::fs::File;
use std::path::PathBuf;

use clap::Args;
use ndarray::Array2;
use noisynb::io::{write_dataset, write_dictionary, DatasetMeta};
use noisynb::text::{binarize, build_dictionary, inject_label_noise, Corpus, Tokenizer};
use noisynb::MixedDataset;

use crate::common::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    /// A directory with one subdirectory of `.txt` files per class, or a
    /// `label,text` file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Binary dataset to write.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Dictionary file; defaults to `<output>.dictionary.csv`.
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
    /// Number of terms kept.
    #[arg(long, default_value_t = 1000)]
    pub top_k: usize,
    /// Shortest token kept.
    #[arg(long, default_value_t = 2)]
    pub min_token_len: usize,
    /// Fraction of labels flipped to a different class; the originals become gold labels.
    #[arg(long, default_value_t = 0.0)]
    pub noise_rate: f64,
    /// Seed for label flips.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(args: &FeaturizeArgs) -> CliResult<()> {
    let corpus = if args.input.is_dir() {
        Corpus::from_dir(&args.input)?
    } else if args.input.is_file() {
        Corpus::from_delimited(File::open(&args.input)?)?
    } else {
        return Err(CliError::Parse(format!("{} does not exist", args.input.display())));
    };
    if args.min_token_len == 0 {
        return Err(CliError::Validation("--min-token-len must be at least 1".into()));
    }
    let tokenizer = Tokenizer {
        min_len: args.min_token_len,
    };
    log::info!("{} documents in {} classes", corpus.len(), corpus.k());
    let dict = build_dictionary(&corpus, args.top_k, &tokenizer)?;
    let mut data = binarize(&corpus, &dict, &tokenizer)?;
    if args.noise_rate > 0.0 {
        let gold = data.y_observed().to_vec();
        let noisy = inject_label_noise(&gold, args.noise_rate, corpus.k(), args.seed)?;
        data = data.with_observed(noisy)?.with_true(Some(gold))?;
    }
    let n = data.n();
    let meta = DatasetMeta {
        binary_names: Some(dict.tokens()),
        label_names: Some(corpus.label_names().to_vec()),
        extra: Some(serde_json::json!({
            "top_k": args.top_k,
            "min_token_len": args.min_token_len,
            "noise_rate": args.noise_rate,
            "seed": args.seed,
        })),
        ..DatasetMeta::default()
    };
    write_dataset(&args.output, &MixedDataset::new(data, Array2::zeros((n, 0)))?, &meta)?;
    let dict_path = args
        .dictionary
        .clone()
        .unwrap_or_else(|| args.output.with_extension("dictionary.csv"));
    write_dictionary(&dict_path, &dict)?;
    log::info!("wrote {} terms to {}", dict.len(), dict_path.display());
    Ok(())
}
