//! Levene's test for equal variances across groups.

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::special::f_survival;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Center {
    /// Brown-Forsythe variant.
    Median,
    Mean,
}

impl std::fmt::Display for Center {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Center::Median => "median",
            Center::Mean => "mean",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeveneResult {
    pub w: f64,
    pub df1: f64,
    pub df2: f64,
    pub p: f64,
    pub center: Center,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn levene_test(groups: &[Vec<f64>], center: Center) -> Result<LeveneResult, AnalysisError> {
    let k = groups.len();
    if k < 2 {
        return Err(AnalysisError::Levene(format!("need at least 2 groups, got {k}")));
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(AnalysisError::Levene(format!("every group needs at least 2 observations, got {}", g.len())));
    }
    if groups.iter().flatten().any(|v| !v.is_finite()) {
        return Err(AnalysisError::Levene("observations must be finite".into()));
    }
    let deviations: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let c = match center {
                Center::Median => median(g),
                Center::Mean => mean(g),
            };
            g.iter().map(|x| (x - c).abs()).collect()
        })
        .collect();
    let n_total: usize = groups.iter().map(Vec::len).sum();
    let group_means: Vec<f64> = deviations.iter().map(|z| mean(z)).collect();
    // sum_i n_i (m_i - grand)^2 written over pairs, so equal group means give exactly zero.
    let mut between = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            let d = group_means[i] - group_means[j];
            between += deviations[i].len() as f64 * deviations[j].len() as f64 * d * d;
        }
    }
    between /= n_total as f64;
    let within: f64 = deviations
        .iter()
        .zip(&group_means)
        .map(|(z, m)| z.iter().map(|v| (v - m).powi(2)).sum::<f64>())
        .sum();
    let df1 = (k - 1) as f64;
    let df2 = (n_total - k) as f64;
    let (w, p) = if between == 0.0 {
        (0.0, 1.0)
    } else if within == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let w = (df2 / df1) * between / within;
        (w, f_survival(w, df1, df2))
    };
    Ok(LeveneResult { w, df1, df2, p, center })
}

/// Two-group test between every pair of labelled samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseLevene {
    pub a: String,
    pub b: String,
    pub var_a: f64,
    pub var_b: f64,
    pub result: LeveneResult,
}

pub fn pairwise_levene(samples: &[(String, Vec<f64>)], center: Center) -> Result<Vec<PairwiseLevene>, AnalysisError> {
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
    };
    let mut out = Vec::new();
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let (a, xa) = &samples[i];
            let (b, xb) = &samples[j];
            out.push(PairwiseLevene {
                a: a.clone(),
                b: b.clone(),
                var_a: var(xa),
                var_b: var(xb),
                result: levene_test(&[xa.clone(), xb.clone()], center)?,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_groups() {
        let g = vec![1.0, 2.0, 4.0, 7.0];
        let r = levene_test(&[g.clone(), g], Center::Median).unwrap();
        assert_eq!((r.w, r.p), (0.0, 1.0));
        // Means whose grand average does not round back to the group mean.
        let g = vec![0.2, 0.5, 0.9, 0.4, 0.7];
        for center in [Center::Median, Center::Mean] {
            let r = levene_test(&[g.clone(), g.clone(), g.clone()], center).unwrap();
            assert_eq!((r.w, r.p), (0.0, 1.0));
        }
    }

    #[test]
    fn preconditions() {
        assert!(levene_test(&[vec![1.0], vec![1.0, 2.0, 3.0, 4.0, 5.0]], Center::Median).is_err());
        assert!(levene_test(&[vec![1.0, 2.0]], Center::Mean).is_err());
    }

    #[test]
    fn frozen_reference_values() {
        // Three groups checked against a widely used statistics library.
        let a = vec![8.88, 9.12, 9.04, 8.98, 9.00, 9.08, 9.01, 8.85, 9.06, 8.99];
        let b = vec![8.88, 8.95, 9.29, 9.44, 9.15, 9.58, 8.36, 9.18, 8.67, 9.05];
        let c = vec![8.95, 9.12, 8.95, 8.85, 9.03, 8.84, 9.07, 8.98, 8.86, 8.98];
        let r = levene_test(&[a.clone(), b.clone(), c.clone()], Center::Median).unwrap();
        assert!((r.w - 7.584952754501659).abs() < 1e-9, "{}", r.w);
        assert!((r.p - 0.002431505967249681).abs() < 1e-9, "{}", r.p);
        let r = levene_test(&[a, b, c], Center::Mean).unwrap();
        assert!((r.w - 7.905194483442054).abs() < 1e-9, "{}", r.w);
        assert!((r.p - 0.001983795817472731).abs() < 1e-9, "{}", r.p);
    }
}
