//! Condition proportions and per-participant response variability.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::coding::TrialRecord;
use crate::inference::design::analyzable;
use crate::stimuli::{Experiment, ExposureCondition, QuestionFocus, VerbClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionRow {
    pub exposure_condition: ExposureCondition,
    pub ref_focus: QuestionFocus,
    pub verb_class: Option<VerbClass>,
    /// Mean referent code.
    pub proportion: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionTable {
    pub by_verb_class: bool,
    pub rows: Vec<ProportionRow>,
}

impl ProportionTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_count(&self) -> usize {
        self.rows.iter().map(|r| r.count).sum()
    }

    /// Count-weighted mean over all rows.
    pub fn overall(&self) -> Option<f64> {
        let n = self.total_count();
        (n > 0).then(|| self.rows.iter().map(|r| r.proportion * r.count as f64).sum::<f64>() / n as f64)
    }

    pub fn get(
        &self,
        exposure: ExposureCondition,
        focus: QuestionFocus,
        verb_class: Option<VerbClass>,
    ) -> Option<&ProportionRow> {
        self.rows
            .iter()
            .find(|r| r.exposure_condition == exposure && r.ref_focus == focus && r.verb_class == verb_class)
    }

    pub fn write_csv_to(&self, out: impl Write) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["exposure_condition", "ref_focus", "verb_class", "proportion", "count"])?;
        for r in &self.rows {
            w.write_record([
                r.exposure_condition.label(),
                r.ref_focus.label(),
                r.verb_class.map_or("", VerbClass::label),
                &format!("{:.6}", r.proportion),
                &r.count.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean referent code per exposure x focus, split by verb class except in E1a.
/// Groups without trials are absent.
pub fn condition_proportions(records: &[TrialRecord], experiment: Experiment) -> ProportionTable {
    let by_verb_class = experiment != Experiment::E1a;
    let mut groups: BTreeMap<(ExposureCondition, QuestionFocus, Option<VerbClass>), (usize, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| analyzable(r)) {
        let key = (r.exposure_condition, r.ref_focus, by_verb_class.then_some(r.verb_class));
        let e = groups.entry(key).or_default();
        e.0 += usize::from(r.referent_code.unwrap_or(0));
        e.1 += 1;
    }
    ProportionTable {
        by_verb_class,
        rows: groups
            .into_iter()
            .map(|((exposure_condition, ref_focus, verb_class), (ones, count))| ProportionRow {
                exposure_condition,
                ref_focus,
                verb_class,
                proportion: ones as f64 / count as f64,
                count,
            })
            .collect(),
    }
}

/// Mean referent code of each participant over analyzable trials.
pub fn participant_means(records: &[TrialRecord]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| analyzable(r)) {
        let e = acc.entry(&r.participant_id).or_default();
        e.0 += f64::from(r.referent_code.unwrap_or(0));
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k.to_string(), s / n as f64)).collect()
}

/// Sample variance (n - 1 denominator) of per-participant mean referent codes.
pub fn per_participant_variance(records: &[TrialRecord]) -> Result<f64, AnalysisError> {
    let means: Vec<f64> = participant_means(records).into_values().collect();
    if means.len() < 2 {
        return Err(AnalysisError::TooFewParticipants(means.len()));
    }
    let n = means.len() as f64;
    let m = means.iter().sum::<f64>() / n;
    Ok(means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}
