//! The regression model attached to each experiment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::inference::formula::{CodingMap, GroupFactor, Grouping, ModelSpec, Predictor};
use crate::stimuli::Experiment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentModelBinding {
    pub experiment: Experiment,
    pub spec: ModelSpec,
    /// Which answer counts as 1 in the response.
    pub response_definition: String,
}

fn codes(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn grouping(factor: GroupFactor, crossed: &[Predictor]) -> Grouping {
    Grouping { factor, crossed: crossed.to_vec(), correlated: true }
}

pub fn model_spec_for(experiment: Experiment) -> ExperimentModelBinding {
    use Predictor::*;
    let half = |a: &str, b: &str| codes(&[(a, 0.5), (b, -0.5)]);
    let (fixed, item, participant, coding, response) = match experiment {
        Experiment::E1a => (
            vec![QtypeC, PC],
            vec![QtypeC, PC],
            vec![QtypeC],
            CodingMap::from([
                (QtypeC, half("subject", "nonsubject")),
                (PC, codes(&[("subject", 0.51), ("nonsubject", -0.49)])),
            ]),
            "subject = 1, nonsubject = 0",
        ),
        Experiment::E2a => (
            vec![QtypeC, PC, Vc],
            vec![PC, QtypeC],
            vec![QtypeC, Vc],
            CodingMap::from([
                (QtypeC, half("subject", "nonsubject")),
                (PC, half("subject", "nonsubject")),
                (Vc, half("gs", "sg")),
            ]),
            "subject = 1, nonsubject = 0",
        ),
        Experiment::E2b => (
            vec![PC, Vc, QtypeC],
            vec![PC, QtypeC],
            vec![Vc, QtypeC],
            CodingMap::from([
                (QtypeC, half("goal", "source")),
                (PC, half("goal", "source")),
                (Vc, half("gs", "sg")),
            ]),
            "goal = 1, source = 0",
        ),
    };
    ExperimentModelBinding {
        experiment,
        spec: ModelSpec {
            fixed_crossed: fixed,
            coding_map: coding,
            groupings: vec![grouping(GroupFactor::Item, &item), grouping(GroupFactor::Participant, &participant)],
            response: "Rc".to_string(),
        },
        response_definition: response.to_string(),
    }
}

impl ExperimentModelBinding {
    /// Stable line-oriented text form of the binding.
    pub fn canonical_form(&self) -> String {
        let spec = &self.spec;
        let mut out = String::new();
        let _ = writeln!(out, "experiment: {}", self.experiment);
        let _ = writeln!(out, "formula: {}", spec.formula());
        let _ = writeln!(out, "response: {} ({})", spec.response, self.response_definition);
        let _ = writeln!(out, "fixed: {}", spec.column_names().join(", "));
        for (predictor, levels) in &spec.coding_map {
            let body: Vec<String> = levels.iter().map(|(level, v)| format!("{level} = {v}")).collect();
            let _ = writeln!(out, "coding {predictor}: {}", body.join(", "));
        }
        for g in &spec.groupings {
            let terms: Vec<String> = g.terms().iter().map(|t| t.name()).collect();
            let corr = if g.correlated { "correlated" } else { "uncorrelated" };
            let _ = writeln!(out, "group {} ({corr}): {}", g.factor.name(), terms.join(", "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn participant_and_item_slopes() {
        let e1a = model_spec_for(Experiment::E1a);
        assert_eq!(e1a.spec.groupings[1].crossed, vec![Predictor::QtypeC]);
        let e2a = model_spec_for(Experiment::E2a);
        assert!(!e2a.spec.groupings[0].crossed.contains(&Predictor::Vc));
        assert!(!e2a.spec.groupings[1].crossed.contains(&Predictor::PC));
        for b in [e1a, e2a, model_spec_for(Experiment::E2b)] {
            assert!(b.spec.uncoded_predictors().is_empty());
        }
    }

    #[test]
    fn spec_round_trips_through_toml() {
        for e in Experiment::ALL {
            let b = model_spec_for(*e);
            let text = toml::to_string(&b).unwrap();
            let back: ExperimentModelBinding = toml::from_str(&text).unwrap();
            assert_eq!(back, b);
        }
    }
}
