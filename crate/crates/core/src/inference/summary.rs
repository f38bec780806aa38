//! Posterior summaries of the fixed coefficients.

use serde::{Deserialize, Serialize};

use super::diagnostics::diagnose_series;
use super::model::ParamKind;
use super::nuts::PosteriorDraws;
use super::pmap::{p_map, MIN_DRAWS};
use super::InferenceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub q2_5: f64,
    pub q97_5: f64,
    pub rhat: f64,
    pub ess_bulk: f64,
    pub mcse_mean: f64,
    /// Absent when there are too few draws for a density estimate.
    pub p_map: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub coefficients: Vec<CoefficientSummary>,
    pub chains: usize,
    pub draws_per_chain: usize,
    pub pooled_draws: usize,
    pub divergences: usize,
    pub warnings: Vec<String>,
}

impl FitSummary {
    pub fn get(&self, name: &str) -> Option<&CoefficientSummary> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summarize one parameter from its per-chain series.
pub fn summarize_series(name: &str, chains: &[Vec<f64>]) -> Result<CoefficientSummary, InferenceError> {
    let pooled: Vec<f64> = chains.concat();
    if pooled.len() < 2 {
        return Err(InferenceError::InsufficientDraws("need at least two draws".into()));
    }
    let n = pooled.len() as f64;
    let mean = pooled.iter().sum::<f64>() / n;
    let sd = (pooled.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let diag = diagnose_series(chains)?;
    let p_map = if pooled.len() >= MIN_DRAWS && sd > 0.0 { Some(p_map(&pooled)?) } else { None };
    Ok(CoefficientSummary {
        name: name.to_string(),
        mean,
        sd,
        median: quantile(&sorted, 0.5),
        q2_5: quantile(&sorted, 0.025),
        q97_5: quantile(&sorted, 0.975),
        rhat: diag.rhat,
        ess_bulk: diag.ess_bulk,
        mcse_mean: diag.mcse_mean,
        p_map,
    })
}

/// One row per fixed coefficient, in design column order.
pub fn summarize(draws: &PosteriorDraws) -> Result<FitSummary, InferenceError> {
    let coefficients = draws
        .indices_of_kind(ParamKind::Fixed)
        .into_iter()
        .map(|i| summarize_series(&draws.params[i].name, &draws.series(i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FitSummary {
        coefficients,
        chains: draws.n_chains,
        draws_per_chain: draws.draws_per_chain,
        pooled_draws: draws.total_draws(),
        divergences: draws.divergences(),
        warnings: draws.warnings.clone(),
    })
}
