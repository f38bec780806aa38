//! Analysis reports in markdown and JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::bindings::model_spec_for;
use super::levene::PairwiseLevene;
use super::proportions::{per_participant_variance, ProportionTable};
use crate::coding::{self, Parsed, PhaseFilter, TrialRecord};
use crate::inference::design::analyzable;
use crate::inference::{CoefficientSummary, FitSummary, Priors, SamplerConfig};
use crate::stimuli::{Experiment, Phase};

/// Significance flag for a p_MAP value.
pub fn pmap_flag(p: f64) -> &'static str {
    if p < 0.001 {
        "< .001"
    } else if p < 0.01 {
        "< .01"
    } else if p < 0.05 {
        "< .05"
    } else if p < 0.1 {
        "< .1"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub n_records: usize,
    pub n_critical: usize,
    pub n_analyzed: usize,
    /// Yes share on ambiguous reference questions, non-excluded trials.
    pub target_yes_rate: Option<f64>,
    pub content_accuracy: Option<f64>,
    pub exclusion_rate: Option<f64>,
    pub participant_variance: Option<f64>,
    /// Every analyzed target question received the same answer.
    pub zero_response_variance: bool,
}

pub fn describe(records: &[TrialRecord]) -> Descriptives {
    let analyzed: Vec<&TrialRecord> = records.iter().filter(|r| analyzable(r)).collect();
    let uniform = analyzed.first().is_some_and(|first| {
        first.ref_parsed != Parsed::Unparseable && analyzed.iter().all(|r| r.ref_parsed == first.ref_parsed)
    });
    Descriptives {
        n_records: records.len(),
        n_critical: records.iter().filter(|r| r.phase == Phase::Critical).count(),
        n_analyzed: analyzed.len(),
        target_yes_rate: coding::yes_rate(records, PhaseFilter::Only(Phase::Critical)).ok(),
        content_accuracy: coding::content_accuracy(records).ok(),
        exclusion_rate: coding::exclusion_rate(records).ok(),
        participant_variance: per_participant_variance(records).ok(),
        zero_response_variance: uniform,
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub root_seed: u64,
    pub sampler: Option<SamplerConfig>,
    pub priors: Option<Priors>,
    pub temperatures: BTreeMap<String, f64>,
    pub settings: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    #[serde(flatten)]
    pub summary: CoefficientSummary,
    pub flag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerReport {
    pub chains: usize,
    pub draws_per_chain: usize,
    pub pooled_draws: usize,
    pub divergences: usize,
    pub max_rhat: f64,
    pub min_ess_bulk: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: Experiment,
    pub binding: String,
    pub coefficients: Vec<CoefficientRow>,
    pub sampler: Option<SamplerReport>,
    pub proportions: ProportionTable,
    pub descriptives: Descriptives,
    pub levene: Vec<PairwiseLevene>,
    pub flags: Vec<String>,
    pub fingerprint: Fingerprint,
}

pub fn render_report(
    experiment: Experiment,
    fit: Option<&FitSummary>,
    proportions: &ProportionTable,
    descriptives: &Descriptives,
    levene: &[PairwiseLevene],
    fingerprint: &Fingerprint,
) -> Report {
    let coefficients = fit
        .map(|f| {
            f.coefficients
                .iter()
                .map(|c| CoefficientRow {
                    summary: c.clone(),
                    flag: c.p_map.map_or("", pmap_flag).to_string(),
                })
                .collect()
        })
        .unwrap_or_default();
    let sampler = fit.map(|f| SamplerReport {
        chains: f.chains,
        draws_per_chain: f.draws_per_chain,
        pooled_draws: f.pooled_draws,
        divergences: f.divergences,
        max_rhat: f.coefficients.iter().map(|c| c.rhat).fold(f64::NEG_INFINITY, f64::max),
        min_ess_bulk: f.coefficients.iter().map(|c| c.ess_bulk).fold(f64::INFINITY, f64::min),
        warnings: f.warnings.clone(),
    });
    let mut flags = Vec::new();
    if descriptives.zero_response_variance {
        let answer = match descriptives.target_yes_rate {
            Some(r) if r >= 1.0 => "yes",
            Some(r) if r <= 0.0 => "no",
            _ => "the same answer",
        };
        flags.push(format!("zero response variance: every target question was answered {answer}"));
    }
    if descriptives.participant_variance == Some(0.0) {
        flags.push("zero between-participant variance in mean referent code".to_string());
    }
    Report {
        experiment,
        binding: model_spec_for(experiment).canonical_form(),
        coefficients,
        sampler,
        proportions: proportions.clone(),
        descriptives: descriptives.clone(),
        levene: levene.to_vec(),
        flags,
        fingerprint: fingerprint.clone(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} analysis\n", self.experiment);
        let _ = writeln!(s, "## Model\n\n```\n{}```\n", self.binding);

        if !self.flags.is_empty() {
            let _ = writeln!(s, "## Flags\n");
            for f in &self.flags {
                let _ = writeln!(s, "- {f}");
            }
            s.push('\n');
        }

        let _ = writeln!(s, "## Fixed effects\n");
        if self.coefficients.is_empty() {
            let _ = writeln!(s, "No model was fitted.\n");
        } else {
            let _ = writeln!(s, "| term | mean | sd | 2.5% | 97.5% | R-hat | bulk ESS | p_MAP | |");
            let _ = writeln!(s, "|---|---:|---:|---:|---:|---:|---:|---:|---|");
            for c in &self.coefficients {
                let m = &c.summary;
                let _ = writeln!(
                    s,
                    "| {} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} | {:.0} | {} | {} |",
                    m.name,
                    m.mean,
                    m.sd,
                    m.q2_5,
                    m.q97_5,
                    m.rhat,
                    m.ess_bulk,
                    m.p_map.map_or_else(|| "n/a".to_string(), |p| format!("{p:.4}")),
                    c.flag
                );
            }
            s.push('\n');
        }

        if let Some(d) = &self.sampler {
            let _ = writeln!(s, "## Sampler\n");
            let _ = writeln!(s, "- chains: {}", d.chains);
            let _ = writeln!(s, "- post-warmup draws per chain: {}", d.draws_per_chain);
            let _ = writeln!(s, "- pooled draws: {}", d.pooled_draws);
            let _ = writeln!(s, "- divergent transitions: {}", d.divergences);
            let _ = writeln!(s, "- max R-hat (fixed effects): {:.4}", d.max_rhat);
            let _ = writeln!(s, "- min bulk ESS (fixed effects): {:.0}", d.min_ess_bulk);
            for w in &d.warnings {
                let _ = writeln!(s, "- warning: {w}");
            }
            s.push('\n');
        }

        let _ = writeln!(s, "## Proportion of referent code 1 by condition\n");
        if self.proportions.is_empty() {
            let _ = writeln!(s, "No analyzable trials.\n");
        } else {
            let _ = writeln!(s, "| exposure | question focus | verb class | proportion | trials |");
            let _ = writeln!(s, "|---|---|---|---:|---:|");
            for r in &self.proportions.rows {
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {:.3} | {} |",
                    r.exposure_condition,
                    r.ref_focus,
                    r.verb_class.map_or("all", |v| v.label()),
                    r.proportion,
                    r.count
                );
            }
            s.push('\n');
        }

        let d = &self.descriptives;
        let _ = writeln!(s, "## Descriptives\n");
        let _ = writeln!(s, "- trial records: {}", d.n_records);
        let _ = writeln!(s, "- critical trials: {} ({} analyzed)", d.n_critical, d.n_analyzed);
        let _ = writeln!(s, "- target-question yes rate: {}", opt(d.target_yes_rate));
        let _ = writeln!(s, "- content-question accuracy: {}", opt(d.content_accuracy));
        let _ = writeln!(s, "- exclusion rate: {}", opt(d.exclusion_rate));
        let _ = writeln!(s, "- per-participant variance of mean referent code: {}", opt(d.participant_variance));
        s.push('\n');

        if !self.levene.is_empty() {
            let _ = writeln!(s, "## Variance comparisons (pairwise two-group Levene tests)\n");
            let _ = writeln!(s, "| a | b | var a | var b | center | W | df | p |");
            let _ = writeln!(s, "|---|---|---:|---:|---|---:|---|---:|");
            for l in &self.levene {
                let r = &l.result;
                let _ = writeln!(
                    s,
                    "| {} | {} | {:.4} | {:.4} | {} | {:.4} | ({}, {}) | {:.4} |",
                    l.a, l.b, l.var_a, l.var_b, r.center, r.w, r.df1, r.df2, r.p
                );
            }
            s.push('\n');
        }

        let f = &self.fingerprint;
        let _ = writeln!(s, "## Configuration\n");
        let _ = writeln!(s, "- root seed: {}", f.root_seed);
        if let Some(p) = &f.priors {
            for line in p.describe() {
                let _ = writeln!(s, "- prior {line}");
            }
        }
        if let Some(c) = &f.sampler {
            let _ = writeln!(
                s,
                "- sampler: {}, {} chains x {} iterations ({} warmup), target_accept {}, max tree depth {}, seed {}",
                c.algorithm, c.chains, c.iterations, c.warmup, c.target_accept, c.max_tree_depth, c.seed
            );
        }
        for (k, v) in &f.settings {
            let _ = writeln!(s, "- {k}: {v}");
        }
        if !f.temperatures.is_empty() {
            let temps: Vec<String> = f.temperatures.iter().map(|(p, t)| format!("{p}={t:.3}")).collect();
            let _ = writeln!(s, "- temperatures: {}", temps.join(", "));
        }
        s
    }
}
