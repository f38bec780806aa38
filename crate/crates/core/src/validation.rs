//! Built-in oracle suites: gradient checks, a grid-integration fit, parameter
//! recovery, p_MAP sanity and a Levene check.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::analysis::{levene_test, model_spec_for, Center};
use crate::coding::{Parsed, TrialRecord};
use crate::inference::{
    build_design_matrix, fit_design, DesignMatrix, GroupBlock, GroupFactor, HierarchicalLogit, LogDensity, Predictor, Priors,
    SamplerConfig,
};
use crate::seeding;
use crate::stimuli::{Experiment, Phase, QuestionFocus, VerbClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Gradient,
    Grid,
    Recovery,
    Pmap,
    Levene,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Gradient, Suite::Grid, Suite::Recovery, Suite::Pmap, Suite::Levene];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gradient => "gradient",
            Suite::Grid => "grid",
            Suite::Recovery => "recovery",
            Suite::Pmap => "pmap",
            Suite::Levene => "levene",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}` (expected one of gradient, grid, recovery, pmap, levene)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationOptions {
    pub seed: u64,
    pub sampler: SamplerConfig,
    pub replications: usize,
    pub gradient_cases: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions { seed: 1, sampler: SamplerConfig::default(), replications: 20, gradient_cases: 100 }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Random design with +-0.5 coded group terms; blocks are (terms, levels, correlated).
pub fn random_design(rng: &mut ChaCha8Rng, n: usize, p: usize, blocks: &[(usize, usize, bool)]) -> DesignMatrix {
    let mut x = Vec::with_capacity(n * p);
    for _ in 0..n {
        x.push(1.0);
        for _ in 1..p {
            x.push(rng.random_range(-1.0..1.0));
        }
    }
    let y = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
    let blocks = blocks
        .iter()
        .map(|&(k, levels, correlated)| GroupBlock {
            factor: GroupFactor::Item,
            correlated,
            term_names: (0..k).map(|i| format!("t{i}")).collect(),
            levels: (0..levels).map(|i| format!("g{i}")).collect(),
            level_of_row: (0..n).map(|i| i % levels).collect(),
            z: (0..n)
                .flat_map(|_| (0..k).map(|t| if t == 0 { 1.0 } else { 0.5 }).collect::<Vec<_>>())
                .map(|v| if v == 0.5 && rng.random_bool(0.5) { -0.5 } else { v })
                .collect(),
        })
        .collect();
    DesignMatrix::new((0..p).map(|i| format!("c{i}")).collect(), x, y, blocks)
        .expect("random design has consistent shapes")
}

/// Largest finite-difference discrepancy, relative to max(1, |fd|).
pub fn gradient_error(model: &HierarchicalLogit, theta: &[f64], h: f64) -> f64 {
    let mut grad = vec![0.0; model.dim()];
    let mut scratch = vec![0.0; model.dim()];
    model.logp_grad(theta, &mut grad);
    let mut worst: f64 = 0.0;
    let mut point = theta.to_vec();
    for i in 0..theta.len() {
        point[i] = theta[i] + h;
        let up = model.logp_grad(&point, &mut scratch);
        point[i] = theta[i] - h;
        let dn = model.logp_grad(&point, &mut scratch);
        point[i] = theta[i];
        let fd = (up - dn) / (2.0 * h);
        worst = worst.max((grad[i] - fd).abs() / fd.abs().max(1.0));
    }
    worst
}

/// Intercept plus one standard-normal covariate, outcomes from known coefficients.
pub fn simulate_simple_logistic(seed: u64, n: usize, intercept: f64, slope: f64) -> DesignMatrix {
    let mut rng = seeding::stream(seed, "validation/simple-logistic");
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi = normal(&mut rng);
        let p = 1.0 / (1.0 + (-(intercept + slope * xi)).exp());
        x.extend([1.0, xi]);
        y.push(u8::from(rng.random_bool(p)));
    }
    DesignMatrix::new(vec!["Intercept".into(), "x".into()], x, y, Vec::new()).expect("valid shapes")
}

/// Posterior means of a fixed-effects-only model with two coefficients by
/// midpoint quadrature on a square grid centered at `center`.
pub fn grid_posterior_means(dm: &DesignMatrix, priors: Priors, center: [f64; 2], half_width: f64, n: usize) -> [f64; 2] {
    let model = HierarchicalLogit::new(dm.fixed_only(), priors).expect("valid priors");
    let step = 2.0 * half_width / n as f64;
    let mut logs = Vec::with_capacity(n * n);
    let mut grad = [0.0; 2];
    for i in 0..n {
        for j in 0..n {
            let b = [center[0] - half_width + (i as f64 + 0.5) * step, center[1] - half_width + (j as f64 + 0.5) * step];
            logs.push((b, model.logp_grad(&b, &mut grad)));
        }
    }
    let max = logs.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
    let (mut w, mut m0, mut m1) = (0.0, 0.0, 0.0);
    for (b, l) in logs {
        let e = (l - max).exp();
        w += e;
        m0 += e * b[0];
        m1 += e * b[1];
    }
    [m0 / w, m1 / w]
}

/// Ground truth for the E1a-shaped recovery simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryTruth {
    /// Intercept, QtypeC, PC, QtypeC:PC.
    pub beta: [f64; 4],
    pub item_sd: [f64; 4],
    pub participant_sd: [f64; 2],
}

impl Default for RecoveryTruth {
    fn default() -> Self {
        RecoveryTruth { beta: [0.3, 0.8, 1.0, -0.5], item_sd: [0.4, 0.3, 0.2, 0.2], participant_sd: [0.6, 0.4] }
    }
}

/// Critical-trial records for an E1a-shaped cohort: exposure alternates by
/// participant, question focus is balanced within participant and item.
pub fn simulate_e1a_records(seed: u64, participants: usize, items: usize, truth: &RecoveryTruth) -> Vec<TrialRecord> {
    let binding = model_spec_for(Experiment::E1a);
    let coding = &binding.spec.coding_map;
    let code = |p, level: &str| coding[&p][level];
    let mut rng = seeding::stream(seed, "validation/recovery");
    let item_fx: Vec<[f64; 4]> = (0..items)
        .map(|_| std::array::from_fn(|k| truth.item_sd[k] * normal(&mut rng)))
        .collect();
    let part_fx: Vec<[f64; 2]> = (0..participants)
        .map(|_| std::array::from_fn(|k| truth.participant_sd[k] * normal(&mut rng)))
        .collect();
    let conditions = Experiment::E1a.conditions();
    let foci = Experiment::E1a.foci();
    let mut out = Vec::with_capacity(participants * items);
    for (i, pf) in part_fx.iter().enumerate() {
        let condition = conditions[i % 2];
        for (j, itf) in item_fx.iter().enumerate() {
            let focus = foci[(i + j) % 2];
            let q = code(Predictor::QtypeC, focus.label());
            let pc = code(Predictor::PC, condition.label());
            let b = &truth.beta;
            let eta = (b[0] + itf[0] + pf[0])
                + (b[1] + itf[1] + pf[1]) * q
                + (b[2] + itf[2]) * pc
                + (b[3] + itf[3]) * q * pc;
            let rc = u8::from(rng.random_bool(1.0 / (1.0 + (-eta).exp())));
            let says_yes = (focus == QuestionFocus::Subject) == (rc == 1);
            let parsed = if says_yes { Parsed::Yes } else { Parsed::No };
            out.push(TrialRecord {
                participant_id: format!("sim-p{:02}", i + 1),
                item_id: format!("sim-crit-{:02}", j + 1),
                phase: Phase::Critical,
                verb_class: VerbClass::Joint,
                exposure_condition: condition,
                ref_focus: focus,
                content_raw: "yes".into(),
                content_parsed: Parsed::Yes,
                content_correct: true,
                ref_raw: if says_yes { "yes".into() } else { "no".into() },
                ref_parsed: parsed,
                referent_code: Some(rc),
                excluded: false,
            });
        }
    }
    out
}

/// Outcome of one recovery replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub seed: u64,
    /// Per fixed coefficient: does the central 90% interval cover the truth.
    pub covered: Vec<bool>,
    pub max_rhat: f64,
    pub min_ess_bulk: f64,
    pub divergences: usize,
}

pub fn recovery_replication(
    seed: u64,
    truth: &RecoveryTruth,
    sampler: &SamplerConfig,
) -> Result<Replication, crate::inference::InferenceError> {
    let records = simulate_e1a_records(seed, 24, 12, truth);
    let dm = build_design_matrix(&records, &model_spec_for(Experiment::E1a).spec)?;
    let config = SamplerConfig { seed: seeding::derive_seed(seed, "validation/recovery/sampler"), ..sampler.clone() };
    let fit = fit_design(dm, Priors::default(), &config)?;
    let mut covered = Vec::new();
    for (c, &b) in fit.summary.coefficients.iter().zip(&truth.beta) {
        let idx = fit.draws.index_of(&c.name).expect("coefficient present");
        let mut pooled = fit.draws.pooled(idx);
        pooled.sort_by(f64::total_cmp);
        let lo = crate::inference::summary::quantile(&pooled, 0.05);
        let hi = crate::inference::summary::quantile(&pooled, 0.95);
        covered.push(lo <= b && b <= hi);
    }
    Ok(Replication {
        seed,
        covered,
        max_rhat: fit.summary.coefficients.iter().map(|c| c.rhat).fold(f64::NEG_INFINITY, f64::max),
        min_ess_bulk: fit.summary.coefficients.iter().map(|c| c.ess_bulk).fold(f64::INFINITY, f64::min),
        divergences: fit.summary.divergences,
    })
}

/// Direct evaluation of the Levene statistic and its F upper tail.
fn levene_direct(groups: &[Vec<f64>], center: Center) -> (f64, f64) {
    let k = groups.len() as f64;
    let n: f64 = groups.iter().map(|g| g.len() as f64).sum();
    let z: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let mut s = g.clone();
            s.sort_by(f64::total_cmp);
            let c = match center {
                Center::Mean => g.iter().sum::<f64>() / g.len() as f64,
                Center::Median if s.len() % 2 == 1 => s[s.len() / 2],
                Center::Median => 0.5 * (s[s.len() / 2 - 1] + s[s.len() / 2]),
            };
            g.iter().map(|x| (x - c).abs()).collect()
        })
        .collect();
    let zbar_i: Vec<f64> = z.iter().map(|zi| zi.iter().sum::<f64>() / zi.len() as f64).collect();
    let zbar = z.iter().flatten().sum::<f64>() / n;
    let num: f64 = z.iter().zip(&zbar_i).map(|(zi, m)| zi.len() as f64 * (m - zbar).powi(2)).sum();
    let den: f64 = z.iter().zip(&zbar_i).map(|(zi, m)| zi.iter().map(|v| (v - m).powi(2)).sum::<f64>()).sum();
    let w = (n - k) / (k - 1.0) * num / den;
    let p = FisherSnedecor::new(k - 1.0, n - k).map(|f| f.sf(w)).unwrap_or(f64::NAN);
    (w, p)
}

fn run_gradient(opts: &ValidationOptions) -> SuiteReport {
    let mut rng = seeding::stream(opts.seed, "validation/gradient");
    let mut worst: f64 = 0.0;
    for _ in 0..opts.gradient_cases {
        let n = rng.random_range(5..40);
        let p = rng.random_range(1..5);
        let blocks: Vec<(usize, usize, bool)> = (0..rng.random_range(0..3))
            .map(|_| (rng.random_range(1..5), rng.random_range(1..6), rng.random_bool(0.75)))
            .collect();
        let dm = random_design(&mut rng, n, p, &blocks);
        let model = HierarchicalLogit::new(dm, Priors::default()).expect("default priors are valid");
        let theta: Vec<f64> = (0..model.dim()).map(|_| normal(&mut rng)).collect();
        worst = worst.max(gradient_error(&model, &theta, 1e-5));
    }
    SuiteReport {
        suite: Suite::Gradient,
        passed: worst < 1e-4,
        details: vec![format!("{} random instances, max relative error {worst:.2e} (limit 1e-4)", opts.gradient_cases)],
    }
}

fn run_grid(opts: &ValidationOptions) -> SuiteReport {
    let dm = simulate_simple_logistic(opts.seed, 50, 0.4, 1.2);
    let config = SamplerConfig { seed: opts.seed, ..opts.sampler.clone() };
    let (passed, details) = match fit_design(dm.clone(), Priors::default(), &config) {
        Ok(fit) => {
            let hmc = [fit.summary.coefficients[0].mean, fit.summary.coefficients[1].mean];
            let grid = grid_posterior_means(&dm, Priors::default(), hmc, 4.0, 800);
            let err = (hmc[0] - grid[0]).abs().max((hmc[1] - grid[1]).abs());
            (
                err < 0.05,
                vec![
                    format!("sampler means ({:.4}, {:.4}); grid means ({:.4}, {:.4})", hmc[0], hmc[1], grid[0], grid[1]),
                    format!("max abs difference {err:.4} (limit 0.05); pooled draws {}", fit.summary.pooled_draws),
                ],
            )
        }
        Err(e) => (false, vec![format!("fit failed: {e}")]),
    };
    SuiteReport { suite: Suite::Grid, passed, details }
}

fn run_recovery(opts: &ValidationOptions) -> SuiteReport {
    let truth = RecoveryTruth::default();
    let mut covered = [0usize; 4];
    let mut details = Vec::new();
    let mut ok = true;
    for r in 0..opts.replications {
        let seed = seeding::derive_seed(opts.seed, &format!("validation/recovery/{r}"));
        match recovery_replication(seed, &truth, &opts.sampler) {
            Ok(rep) => {
                for (c, hit) in covered.iter_mut().zip(&rep.covered) {
                    *c += usize::from(*hit);
                }
                if rep.max_rhat >= 1.01 || rep.min_ess_bulk <= 400.0 {
                    ok = false;
                    details.push(format!(
                        "replication {r}: max R-hat {:.4}, min bulk ESS {:.0}",
                        rep.max_rhat, rep.min_ess_bulk
                    ));
                }
            }
            Err(e) => {
                ok = false;
                details.push(format!("replication {r} failed: {e}"));
            }
        }
    }
    let needed = (opts.replications * 4).div_ceil(5);
    let names = model_spec_for(Experiment::E1a).spec.column_names();
    for (name, c) in names.iter().zip(covered) {
        details.push(format!("{name}: 90% interval covered truth in {c}/{}", opts.replications));
        ok &= c >= needed;
    }
    SuiteReport { suite: Suite::Recovery, passed: ok, details }
}

fn run_pmap(opts: &ValidationOptions) -> SuiteReport {
    let mut rng = seeding::stream(opts.seed, "validation/pmap");
    let centered: Vec<f64> = (0..18_000).map(|_| normal(&mut rng)).collect();
    let shifted: Vec<f64> = (0..18_000).map(|_| 4.0 + normal(&mut rng)).collect();
    let a = crate::inference::p_map(&centered);
    let b = crate::inference::p_map(&shifted);
    let passed = matches!(a, Ok(v) if v >= 0.9) && matches!(b, Ok(v) if v < 0.001);
    let show = |r: Result<f64, _>| r.map_or_else(|e: crate::inference::InferenceError| e.to_string(), |v| format!("{v:.3e}"));
    SuiteReport {
        suite: Suite::Pmap,
        passed,
        details: vec![
            format!("centered at 0: {} (need >= 0.9)", show(a)),
            format!("centered at 4: {} (need < 0.001; normal density ratio exp(-8) = {:.2e})", show(b), (-8f64).exp()),
        ],
    }
}

fn run_levene(opts: &ValidationOptions) -> SuiteReport {
    let mut rng = seeding::stream(opts.seed, "validation/levene");
    let mut worst_w: f64 = 0.0;
    let mut worst_p: f64 = 0.0;
    for _ in 0..50 {
        let k = rng.random_range(2..5);
        let groups: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let n = rng.random_range(3..15);
                let sd = rng.random_range(0.5..3.0);
                (0..n).map(|_| sd * normal(&mut rng)).collect()
            })
            .collect();
        for center in [Center::Median, Center::Mean] {
            let (w, p) = levene_direct(&groups, center);
            match levene_test(&groups, center) {
                Ok(r) => {
                    worst_w = worst_w.max((r.w - w).abs());
                    worst_p = worst_p.max((r.p - p).abs());
                }
                Err(_) => worst_w = f64::INFINITY,
            }
        }
    }
    let same = vec![1.0, 3.0, 4.0, 9.0];
    let identical = levene_test(&[same.clone(), same], Center::Median).map(|r| (r.w, r.p));
    let passed = worst_w < 1e-10 && worst_p < 1e-8 && matches!(identical, Ok((w, p)) if w == 0.0 && p == 1.0);
    SuiteReport {
        suite: Suite::Levene,
        passed,
        details: vec![
            format!("100 random comparisons: max |dW| {worst_w:.2e}, max |dp| {worst_p:.2e}"),
            match identical {
                Ok((w, p)) => format!("identical groups: W = {w}, p = {p}"),
                Err(e) => format!("identical groups: {e}"),
            },
        ],
    }
}

pub fn run_suite(suite: Suite, opts: &ValidationOptions) -> SuiteReport {
    match suite {
        Suite::Gradient => run_gradient(opts),
        Suite::Grid => run_grid(opts),
        Suite::Recovery => run_recovery(opts),
        Suite::Pmap => run_pmap(opts),
        Suite::Levene => run_levene(opts),
    }
}
