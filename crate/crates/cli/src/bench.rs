use std::path::PathBuf;

use clap::Args;
use noisynb::io::write_json;
use noisynb::rng::RNG_ALGORITHM;
use noisynb::sim::{run_study, Priors, RhoInterval, SimDesign, StudySummary};

use crate::common::{print_rows, CliError, CliResult, Format};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Diagonal intervals `lo:hi`; repeat for several. Defaults to the five standard ones.
    #[arg(long = "rho-interval", value_name = "LO:HI")]
    pub rho_intervals: Vec<RhoInterval>,
    /// Sample sizes; repeat for several.
    #[arg(long = "n", default_values_t = [1000])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub d: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub replications: usize,
    /// Class 1 three times as likely as each other class.
    #[arg(long)]
    pub unbalanced: bool,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub smoothing: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Also write the results table here.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Writes the designs, priors and generator name as JSON.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn run(args: &BenchArgs, format: Format) -> CliResult<()> {
    let intervals = if args.rho_intervals.is_empty() {
        RhoInterval::standard_grid()
    } else {
        args.rho_intervals.clone()
    };
    let base = SimDesign {
        d: args.d,
        k: args.k,
        replications: args.replications,
        priors: if args.unbalanced { Priors::Unbalanced } else { Priors::Balanced },
        seed: args.seed,
        smoothing: args.smoothing,
        em_max_iter: args.max_iter,
        em_tol: args.tol,
        em_restarts: args.restarts,
        ..SimDesign::default()
    };
    let mut designs = Vec::new();
    for &rho_interval in &intervals {
        for &n in &args.sizes {
            let design = SimDesign {
                n,
                rho_interval,
                ..base.clone()
            };
            design.validate()?;
            designs.push(design);
        }
    }
    if let Some(path) = &args.manifest {
        let manifest = serde_json::json!({
            "rng_algorithm": RNG_ALGORITHM,
            "priors": base.priors.vector(base.k).to_vec(),
            "designs": designs,
        });
        write_json(path, &manifest)?;
    }
    let mut summaries = Vec::new();
    let mut failed_cells = 0;
    for design in &designs {
        log::info!("cell {} n = {} ({} replications)", design.rho_interval, design.n, design.replications);
        match run_study(design) {
            Ok((_, summary)) => {
                if summary.failed > 0 {
                    log::warn!("{} replications failed", summary.failed);
                }
                summaries.push(summary);
            }
            Err(e) => {
                log::error!("cell {} n = {} failed: {e}", design.rho_interval, design.n);
                failed_cells += 1;
            }
        }
    }
    if failed_cells == designs.len() {
        return Err(CliError::Internal("every cell failed".into()));
    }
    let header: Vec<&str> = StudySummary::DELIMITED_HEADER.split(',').collect();
    let rows: Vec<Vec<String>> = summaries.iter().map(summary_fields).collect();
    print_rows(format, &header, &rows);
    if let Some(path) = &args.output {
        let mut text = String::from(StudySummary::DELIMITED_HEADER);
        text.push('\n');
        for s in &summaries {
            text.push_str(&s.delimited_row());
            text.push('\n');
        }
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn summary_fields(s: &StudySummary) -> Vec<String> {
    let one = |v: f64| format!("{v:.1}");
    vec![
        s.rho_interval.to_string(),
        s.n.to_string(),
        one(s.nb_mse * 1e3),
        one(s.inb_mse * 1e3),
        one(s.nb_acc),
        one(s.inb_acc),
        one(s.nbt_acc),
        one(s.nb_auc),
        one(s.inb_auc),
        one(s.nbt_auc),
        one(s.delta_acc),
        s.succeeded.to_string(),
        s.failed.to_string(),
    ]
}
