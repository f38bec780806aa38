//! Numeric design matrices built from coded trial records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::formula::{GroupFactor, ModelSpec, Predictor, Term};
use super::InferenceError;
use crate::coding::TrialRecord;
use crate::stimuli::Phase;

/// Group-level design for one grouping factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupBlock {
    pub factor: GroupFactor,
    pub correlated: bool,
    /// Intercept first, then slope terms.
    pub term_names: Vec<String>,
    /// Sorted level labels.
    pub levels: Vec<String>,
    /// Level index of each row.
    pub level_of_row: Vec<usize>,
    /// Row-major n x K.
    pub z: Vec<f64>,
}

impl GroupBlock {
    pub fn n_terms(&self) -> usize {
        self.term_names.len()
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn name(&self) -> &'static str {
        self.factor.name()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub column_names: Vec<String>,
    /// Row-major n x p fixed-effect design.
    pub x: Vec<f64>,
    pub y: Vec<u8>,
    pub blocks: Vec<GroupBlock>,
}

impl DesignMatrix {
    /// Assemble from raw parts, checking shapes.
    pub fn new(
        column_names: Vec<String>,
        x: Vec<f64>,
        y: Vec<u8>,
        blocks: Vec<GroupBlock>,
    ) -> Result<Self, InferenceError> {
        let n = y.len();
        let p = column_names.len();
        let bad = |m: String| Err(InferenceError::Design(m));
        if n == 0 {
            return Err(InferenceError::EmptyData);
        }
        if x.len() != n * p {
            return bad(format!("X has {} entries, expected {n} x {p}", x.len()));
        }
        if y.iter().any(|&v| v > 1) {
            return bad("response must be 0 or 1".into());
        }
        for b in &blocks {
            let k = b.term_names.len();
            if k == 0 || b.z.len() != n * k || b.level_of_row.len() != n {
                return bad(format!("group block `{}` has inconsistent shape", b.name()));
            }
            if b.level_of_row.iter().any(|&l| l >= b.levels.len()) {
                return bad(format!("group block `{}` has an out-of-range level", b.name()));
            }
        }
        if x.iter().chain(blocks.iter().flat_map(|b| b.z.iter())).any(|v| !v.is_finite()) {
            return bad("design contains non-finite values".into());
        }
        Ok(DesignMatrix { column_names, x, y, blocks })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_fixed(&self) -> usize {
        self.column_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_fixed();
        &self.x[i * p..(i + 1) * p]
    }

    /// Drop all group-level blocks.
    pub fn fixed_only(&self) -> DesignMatrix {
        DesignMatrix { blocks: Vec::new(), ..self.clone() }
    }
}

fn code(spec: &ModelSpec, predictor: Predictor, record: &TrialRecord) -> Result<f64, InferenceError> {
    let level = predictor.level(record);
    spec.coding_map
        .get(&predictor)
        .ok_or_else(|| InferenceError::Design(format!("no coding for predictor {predictor}")))?
        .get(level)
        .copied()
        .ok_or_else(|| InferenceError::UnknownLevel {
            predictor: predictor.name().to_string(),
            level: level.to_string(),
        })
}

fn term_value(spec: &ModelSpec, term: &Term, record: &TrialRecord) -> Result<f64, InferenceError> {
    term.0.iter().try_fold(1.0, |acc, &p| Ok(acc * code(spec, p, record)?))
}

/// Rows that enter the model: critical phase, not excluded, with a referent code.
pub fn analyzable(record: &TrialRecord) -> bool {
    record.phase == Phase::Critical && !record.excluded && record.referent_code.is_some()
}

/// Build fixed and group-level designs. Records outside the analyzable set
/// are skipped; an empty remainder is an error.
pub fn build_design_matrix(records: &[TrialRecord], spec: &ModelSpec) -> Result<DesignMatrix, InferenceError> {
    let rows: Vec<&TrialRecord> = records.iter().filter(|r| analyzable(r)).collect();
    if rows.is_empty() {
        return Err(InferenceError::EmptyData);
    }
    let fixed: Vec<Term> = std::iter::once(Term::intercept()).chain(spec.fixed_terms()).collect();
    let mut x = Vec::with_capacity(rows.len() * fixed.len());
    let mut y = Vec::with_capacity(rows.len());
    for r in &rows {
        for t in &fixed {
            x.push(term_value(spec, t, r)?);
        }
        y.push(r.referent_code.unwrap_or(0));
    }
    let mut blocks = Vec::new();
    for g in &spec.groupings {
        let terms = g.terms();
        let index: BTreeMap<&str, usize> = {
            let mut names: Vec<&str> = rows.iter().map(|r| g.factor.level(r)).collect();
            names.sort_unstable();
            names.dedup();
            names.into_iter().enumerate().map(|(i, n)| (n, i)).collect()
        };
        let mut z = Vec::with_capacity(rows.len() * terms.len());
        for r in &rows {
            for t in &terms {
                z.push(term_value(spec, t, r)?);
            }
        }
        blocks.push(GroupBlock {
            factor: g.factor,
            correlated: g.correlated,
            term_names: terms.iter().map(Term::name).collect(),
            level_of_row: rows.iter().map(|r| index[g.factor.level(r)]).collect(),
            levels: index.keys().map(|s| s.to_string()).collect(),
            z,
        });
    }
    DesignMatrix::new(fixed.iter().map(Term::name).collect(), x, y, blocks)
}
