use std::path::PathBuf;

use clap::Args;
use ndarray::Array2;
use noisynb::io::{read_json, write_dataset, write_json, write_model, DatasetMeta, ModelDocument};
use noisynb::rng::RNG_ALGORITHM;
use noisynb::sim::{generate_instance, generate_mixed_instance, MixedDesign, Priors, RhoInterval, SimDesign};
use noisynb::MixedDataset;

use crate::common::{require_file, CliResult};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Directory receiving train.csv, test.csv, truth.json and design.json.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Design read from JSON instead of the flags below.
    #[arg(long, conflicts_with_all = ["n", "d", "k", "rho_interval", "unbalanced", "seed"])]
    pub design: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_name = "LO:HI")]
    pub rho_interval: Option<RhoInterval>,
    #[arg(long)]
    pub unbalanced: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Which replication of the design to draw.
    #[arg(long, default_value_t = 0)]
    pub replication: usize,
    /// Gaussian features added per instance.
    #[arg(long, default_value_t = 0)]
    pub d2: usize,
    /// Standard deviation of the Gaussian class means.
    #[arg(long, default_value_t = 1.0)]
    pub mean_spread: f64,
}

impl SimulateArgs {
    fn design(&self) -> CliResult<SimDesign> {
        if let Some(path) = &self.design {
            require_file(path)?;
            return Ok(read_json(path)?);
        }
        let base = SimDesign::default();
        Ok(SimDesign {
            n: self.n.unwrap_or(base.n),
            d: self.d.unwrap_or(base.d),
            k: self.k.unwrap_or(base.k),
            rho_interval: self.rho_interval.unwrap_or(base.rho_interval),
            priors: if self.unbalanced { Priors::Unbalanced } else { Priors::Balanced },
            seed: self.seed.unwrap_or(base.seed),
            ..base
        })
    }
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let design = args.design()?;
    design.validate()?;
    std::fs::create_dir_all(&args.out_dir)?;
    let extra = serde_json::json!({
        "design": design,
        "replication": args.replication,
        "d2": args.d2,
        "rng_algorithm": RNG_ALGORITHM,
        "priors": design.priors.vector(design.k).to_vec(),
    });
    let meta = DatasetMeta {
        extra: Some(extra),
        ..DatasetMeta::default()
    };
    let (train, test, truth) = if args.d2 == 0 {
        let inst = generate_instance(&design, args.replication)?;
        let empty = |n| Array2::zeros((n, 0));
        (
            MixedDataset::new(inst.train.clone(), empty(inst.train.n()))?,
            MixedDataset::new(inst.test.clone(), empty(inst.test.n()))?,
            ModelDocument::new("truth", &inst.true_params),
        )
    } else {
        let mixed = MixedDesign {
            base: design.clone(),
            d2: args.d2,
            mean_spread: args.mean_spread,
        };
        let inst = generate_mixed_instance(&mixed, args.replication)?;
        let truth = ModelDocument::new("truth", &inst.true_params).with_gaussian(&inst.true_gaussian, None);
        (inst.train, inst.test, truth)
    };
    write_dataset(&args.out_dir.join("train.csv"), &train, &meta)?;
    write_dataset(&args.out_dir.join("test.csv"), &test, &meta)?;
    write_model(&args.out_dir.join("truth.json"), &truth)?;
    write_json(&args.out_dir.join("design.json"), &design)?;
    log::info!(
        "wrote {} training and {} test instances to {}",
        train.n(),
        test.n(),
        args.out_dir.display()
    );
    Ok(())
}
