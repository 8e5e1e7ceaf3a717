use std::path::PathBuf;

use clap::{Args, ValueEnum};
use noisynb::io::{write_model, write_trace, ModelDocument, Standardization};
use noisynb::{fit_inb, fit_inb_mixed, fit_nb, fit_nb_mixed};

use crate::common::{load_dataset, CliResult, EmArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Naive Bayes on the observed labels.
    Nb,
    /// Naive Bayes with latent true labels, fit by EM.
    Inb,
    /// Gaussian Naive Bayes on both feature blocks, observed labels.
    GnbMixed,
    /// EM over both feature blocks.
    InbMixed,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Nb => "nb",
            Method::Inb => "inb",
            Method::GnbMixed => "gnb-mixed",
            Method::InbMixed => "inb-mixed",
        }
    }

    fn is_mixed(self) -> bool {
        matches!(self, Method::GnbMixed | Method::InbMixed)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset file (with its manifest alongside).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "inb")]
    pub method: Method,
    /// Model document to write.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Log-likelihood history for EM methods; defaults to `<output>.trace.csv`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Additive smoothing for the Naive Bayes methods.
    #[arg(long, default_value_t = 1.0)]
    pub smoothing: f64,
    /// Z-score the continuous features with the training statistics first.
    #[arg(long)]
    pub standardize: bool,
    #[command(flatten)]
    pub em: EmArgs,
}

pub fn run(args: &TrainArgs) -> CliResult<()> {
    let (data, manifest) = load_dataset(&args.data)?;
    if !args.method.is_mixed() && data.d2() > 0 {
        log::warn!("ignoring {} continuous columns for method {}", data.d2(), args.method.name());
    }
    let standardization = (args.standardize && args.method.is_mixed()).then(|| {
        let (mean, scale) = data.column_stats();
        Standardization { mean, scale }
    });
    let data = match &standardization {
        Some(s) => data.standardize_with(&s.mean, &s.scale)?,
        None => data,
    };
    let binary = data.binary();
    log::info!(
        "training {} on n = {}, d = {}, d2 = {}, K = {}",
        args.method.name(),
        data.n(),
        data.d1(),
        data.d2(),
        data.k()
    );
    let (mut doc, trace) = match args.method {
        Method::Nb => (ModelDocument::new("nb", &fit_nb(binary, args.smoothing)?), None),
        Method::Inb => {
            let fit = fit_inb(binary, &args.em.config()?)?;
            let mut doc = ModelDocument::new("inb", &fit.params);
            doc.trace = Some((&fit.trace).into());
            doc.identifiability = Some((&fit.identifiability).into());
            (doc, Some(fit.trace))
        }
        Method::GnbMixed => {
            let (params, gauss) = fit_nb_mixed(&data, args.smoothing)?;
            let doc = ModelDocument::new("gnb-mixed", &params)
                .with_gaussian(&gauss, Some(manifest.continuous_names()));
            (doc, None)
        }
        Method::InbMixed => {
            let fit = fit_inb_mixed(&data, &args.em.config()?)?;
            let mut doc = ModelDocument::new("inb-mixed", &fit.params)
                .with_gaussian(&fit.gaussian, Some(manifest.continuous_names()));
            doc.trace = Some((&fit.trace).into());
            doc.identifiability = Some((&fit.identifiability).into());
            (doc, Some(fit.trace))
        }
    };
    if let (Some(g), Some(s)) = (doc.gaussian.as_mut(), standardization) {
        g.standardization = Some(s);
    }
    doc.feature_names = Some(manifest.binary_names());
    doc.label_names = manifest.label_names.clone();
    write_model(&args.output, &doc)?;
    if let Some(trace) = trace {
        let path = args
            .trace
            .clone()
            .unwrap_or_else(|| args.output.with_extension("trace.csv"));
        write_trace(&path, &trace)?;
        log::info!(
            "EM: {} iterations, converged = {}, final log-likelihood {}",
            trace.iterations,
            trace.converged,
            trace.final_loglik()
        );
    }
    Ok(())
}
