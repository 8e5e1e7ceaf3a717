//! Naive Bayes for mislabeled training data.
//!
//! True labels are latent; observed labels are noisy copies drawn through a
//! K×K mislabeling matrix that is estimated jointly with the Naive Bayes
//! parameters by EM. The crate also ships the simulation harness, a text
//! featurizer, analytic mislabeling-impact calculators and evaluation metrics.

pub mod assignment;
pub mod dataset;
pub mod em;
pub mod error;
pub mod gaussian;
pub mod impact;
pub mod io;
pub mod math;
pub mod metrics;
pub mod nb;
pub mod params;
pub mod rng;
pub mod sim;
pub mod text;

pub use dataset::{LabeledDataset, MixedDataset};
pub use em::{
    e_step, enforce_identifiability, fit_inb, init_params, m_step, observed_loglik, run_em,
    EmConfig, EmTrace, Identifiability, InbFit, MStepReport, Responsibilities,
};
pub use error::{Error, Result};
pub use gaussian::{
    e_step_mixed, fit_inb_mixed, fit_nb_mixed, m_step_mixed, observed_loglik_mixed,
    predict_batch_mixed, GaussianParams, MixedFit,
};
pub use nb::{complete_loglik, fit_nb, posterior_true_label, predict_batch, CompleteLoglik};
pub use params::{ModelParams, PosteriorRow};
