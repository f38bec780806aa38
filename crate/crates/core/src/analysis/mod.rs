//! Experiment model bindings, descriptive tables, variance tests and reports.

pub mod bindings;
pub mod levene;
pub mod proportions;
pub mod report;

use thiserror::Error;

pub use bindings::{model_spec_for, ExperimentModelBinding};
pub use levene::{levene_test, pairwise_levene, Center, LeveneResult, PairwiseLevene};
pub use proportions::{condition_proportions, participant_means, per_participant_variance, ProportionRow, ProportionTable};
pub use report::{describe, pmap_flag, render_report, Descriptives, Fingerprint, Report};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("need at least 2 participants with analyzable trials, got {0}")]
    TooFewParticipants(usize),
    #[error("levene: {0}")]
    Levene(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
