//! Model specifications: coded predictors, interaction terms and grouping blocks.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coding::TrialRecord;

/// Predictors available to the experiment models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Predictor {
    /// Reference-question focus.
    QtypeC,
    /// Exposure condition.
    PC,
    /// Verb class.
    Vc,
}

impl Predictor {
    pub fn name(self) -> &'static str {
        match self {
            Predictor::QtypeC => "QtypeC",
            Predictor::PC => "PC",
            Predictor::Vc => "Vc",
        }
    }

    /// Level label of this predictor on a trial record.
    pub fn level(self, record: &TrialRecord) -> &'static str {
        match self {
            Predictor::QtypeC => record.ref_focus.label(),
            Predictor::PC => record.exposure_condition.label(),
            Predictor::Vc => record.verb_class.label(),
        }
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A product of predictors; the empty product is the intercept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term(pub Vec<Predictor>);

impl Term {
    pub fn intercept() -> Self {
        Term(Vec::new())
    }

    pub fn is_intercept(&self) -> bool {
        self.0.is_empty()
    }

    pub fn name(&self) -> String {
        if self.0.is_empty() {
            "Intercept".to_string()
        } else {
            self.0.iter().map(|p| p.name()).collect::<Vec<_>>().join(":")
        }
    }
}

/// Expand `a*b*c` into main effects followed by interactions of increasing
/// order, each order in formula order: a, b, c, a:b, a:c, b:c, a:b:c.
pub fn expand_crossed(factors: &[Predictor]) -> Vec<Term> {
    let n = factors.len();
    let mut subsets: Vec<Vec<usize>> = (1u32..(1 << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subsets
        .into_iter()
        .map(|s| Term(s.into_iter().map(|i| factors[i]).collect()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupFactor {
    Participant,
    Item,
}

impl GroupFactor {
    pub fn name(self) -> &'static str {
        match self {
            GroupFactor::Participant => "participant",
            GroupFactor::Item => "item",
        }
    }

    pub fn level(self, record: &TrialRecord) -> &str {
        match self {
            GroupFactor::Participant => &record.participant_id,
            GroupFactor::Item => &record.item_id,
        }
    }
}

/// Random effects for one grouping factor. Every grouping has an intercept;
/// `crossed` lists the predictors whose full crossing supplies the slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grouping {
    pub factor: GroupFactor,
    pub crossed: Vec<Predictor>,
    pub correlated: bool,
}

impl Grouping {
    /// Slope terms, intercept excluded.
    pub fn slope_terms(&self) -> Vec<Term> {
        expand_crossed(&self.crossed)
    }

    /// Intercept followed by the slope terms.
    pub fn terms(&self) -> Vec<Term> {
        std::iter::once(Term::intercept()).chain(self.slope_terms()).collect()
    }
}

/// Level-to-value contrast codes per predictor.
pub type CodingMap = BTreeMap<Predictor, BTreeMap<String, f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Predictors crossed in the fixed part, in formula order. The intercept is implicit.
    pub fixed_crossed: Vec<Predictor>,
    pub coding_map: CodingMap,
    pub groupings: Vec<Grouping>,
    pub response: String,
}

impl ModelSpec {
    pub fn fixed_terms(&self) -> Vec<Term> {
        expand_crossed(&self.fixed_crossed)
    }

    /// Intercept first, then the fixed terms.
    pub fn column_names(&self) -> Vec<String> {
        std::iter::once(Term::intercept())
            .chain(self.fixed_terms())
            .map(|t| t.name())
            .collect()
    }

    /// Predictors used anywhere in the model that lack a coding entry.
    pub fn uncoded_predictors(&self) -> Vec<Predictor> {
        let mut used: Vec<Predictor> = self.fixed_crossed.clone();
        for g in &self.groupings {
            used.extend(&g.crossed);
        }
        used.sort();
        used.dedup();
        used.into_iter().filter(|p| !self.coding_map.contains_key(p)).collect()
    }

    /// Compact formula, e.g. `Rc ~ QtypeC*PC + (1 + QtypeC | participant)`.
    pub fn formula(&self) -> String {
        let star = |ps: &[Predictor]| ps.iter().map(|p| p.name()).collect::<Vec<_>>().join("*");
        let mut out = format!("{} ~ {}", self.response, star(&self.fixed_crossed));
        if self.fixed_crossed.is_empty() {
            out.push('1');
        }
        for g in &self.groupings {
            let bar = if g.correlated { "|" } else { "||" };
            if g.crossed.is_empty() {
                out.push_str(&format!(" + (1 {bar} {})", g.factor.name()));
            } else {
                out.push_str(&format!(" + (1 + {} {bar} {})", star(&g.crossed), g.factor.name()));
            }
        }
        out
    }
}
