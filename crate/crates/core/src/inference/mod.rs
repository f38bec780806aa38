//! Hierarchical logistic regression fitted by Hamiltonian Monte Carlo.

pub mod design;
pub mod diagnostics;
pub mod formula;
pub mod model;
pub mod nuts;
pub mod pmap;
pub mod summary;

use thiserror::Error;

pub use design::{build_design_matrix, DesignMatrix, GroupBlock};
pub use diagnostics::{rhat_and_ess, Diagnostics};
pub use formula::{GroupFactor, Grouping, ModelSpec, Predictor, Term};
pub use model::{HierarchicalLogit, LogDensity, ParamKind, ParamName, Priors};
pub use nuts::{sample, Algorithm, PosteriorDraws, SamplerConfig};
pub use pmap::p_map;
pub use summary::{summarize, CoefficientSummary, FitSummary};

use crate::coding::TrialRecord;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("no analyzable rows")]
    EmptyData,
    #[error("unknown level `{level}` for predictor {predictor}")]
    UnknownLevel { predictor: String, level: String },
    #[error("design: {0}")]
    Design(String),
    #[error("parameter vector has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite gradient in {parameter}")]
    NonFiniteGradient { parameter: String },
    #[error("sampler: {0}")]
    Sampler(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("insufficient draws: {0}")]
    InsufficientDraws(String),
    #[error("degenerate draws: {0}")]
    Degenerate(String),
}

/// A fitted model: the posterior, its draws and the fixed-effect summary.
#[derive(Debug, Clone)]
pub struct Fit {
    pub model: HierarchicalLogit,
    pub draws: PosteriorDraws,
    pub summary: FitSummary,
}

pub fn fit_design(design: DesignMatrix, priors: Priors, config: &SamplerConfig) -> Result<Fit, InferenceError> {
    let model = HierarchicalLogit::new(design, priors)?;
    let draws = sample(&model, config)?;
    let summary = summarize(&draws)?;
    Ok(Fit { model, draws, summary })
}

/// Build the design from coded records and fit it.
pub fn fit_records(
    records: &[TrialRecord],
    spec: &ModelSpec,
    priors: Priors,
    config: &SamplerConfig,
) -> Result<Fit, InferenceError> {
    fit_design(build_design_matrix(records, spec)?, priors, config)
}
