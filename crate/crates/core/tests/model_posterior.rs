mod common;

use common::{normal, random_design, rng};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use refprime::inference::{sample, HierarchicalLogit, LogDensity, Priors, SamplerConfig};

fn log1p_exp(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Central finite differences with step 1e-5; relative error scaled by max(1, |fd|).
fn max_gradient_error(model: &HierarchicalLogit, theta: &[f64]) -> f64 {
    let (_, grad) = model.log_posterior_and_gradient(theta).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let mut up = theta.to_vec();
        let mut dn = theta.to_vec();
        up[i] += h;
        dn[i] -= h;
        let fd = (model.log_posterior_and_gradient(&up).unwrap().0 - model.log_posterior_and_gradient(&dn).unwrap().0)
            / (2.0 * h);
        worst = worst.max((grad[i] - fd).abs() / fd.abs().max(1.0));
    }
    worst
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut r = rng(101);
    for case in 0..100 {
        let n = r.random_range(5..40);
        let p = r.random_range(1..5);
        let mut blocks = Vec::new();
        for _ in 0..r.random_range(0..3) {
            blocks.push((r.random_range(1..5), r.random_range(1..6), r.random_bool(0.75)));
        }
        let dm = random_design(&mut r, n, p, &blocks);
        let priors = Priors { lkj_shape: if case % 3 == 0 { 2.0 } else { 1.0 }, ..Priors::default() };
        let model = HierarchicalLogit::new(dm, priors).unwrap();
        let theta: Vec<f64> = (0..model.dim()).map(|_| normal(&mut r)).collect();
        let err = max_gradient_error(&model, &theta);
        assert!(err < 1e-4, "case {case}: max relative error {err}");
    }
}

#[test]
fn log_posterior_is_invariant_to_row_order() {
    let mut r = rng(7);
    let dm = random_design(&mut r, 30, 3, &[(3, 5, true), (2, 4, true)]);
    let model = HierarchicalLogit::new(dm.clone(), Priors::default()).unwrap();
    let mut perm: Vec<usize> = (0..30).collect();
    for i in (1..30).rev() {
        perm.swap(i, r.random_range(0..=i));
    }
    let mut shuffled = dm.clone();
    for (dst, &src) in perm.iter().enumerate() {
        shuffled.x[dst * 3..dst * 3 + 3].copy_from_slice(dm.row(src));
        shuffled.y[dst] = dm.y[src];
        for (b, orig) in shuffled.blocks.iter_mut().zip(&dm.blocks) {
            let k = orig.n_terms();
            b.z[dst * k..dst * k + k].copy_from_slice(&orig.z[src * k..src * k + k]);
            b.level_of_row[dst] = orig.level_of_row[src];
        }
    }
    let other = HierarchicalLogit::new(shuffled, Priors::default()).unwrap();
    for _ in 0..10 {
        let theta: Vec<f64> = (0..model.dim()).map(|_| normal(&mut r)).collect();
        let a = model.log_posterior_and_gradient(&theta).unwrap();
        let b = other.log_posterior_and_gradient(&theta).unwrap();
        assert!((a.0 - b.0).abs() < 1e-9 * a.0.abs().max(1.0));
        for (ga, gb) in a.1.iter().zip(&b.1) {
            assert!((ga - gb).abs() < 1e-9);
        }
    }
}

/// Centered density pieces that depend on beta and the group effects:
/// likelihood, Cauchy priors and multivariate normal group effects.
/// Returns the value together with the log Jacobian of z -> b.
fn centered_terms(model: &HierarchicalLogit, theta: &[f64]) -> (f64, f64) {
    let dm = model.design();
    let p = dm.n_fixed();
    let mut constrained = Vec::new();
    model.constrain(theta, &mut constrained);
    let mut eta: Vec<f64> = (0..dm.n_rows()).map(|i| dm.row(i).iter().zip(&theta[..p]).map(|(a, b)| a * b).sum()).collect();
    let mut value: f64 = theta[..p]
        .iter()
        .map(|b| -(std::f64::consts::PI * 2.5).ln() - (b / 2.5).powi(2).ln_1p())
        .sum();
    let mut log_jac = 0.0;
    let mut pos = p;
    for (block, lay) in dm.blocks.iter().zip(model.layouts()) {
        let k = lay.n_terms;
        let tau = &constrained[pos..pos + k];
        pos += k;
        let mut omega = DMatrix::<f64>::identity(k, k);
        if lay.n_corr > 0 {
            for i in 1..k {
                for j in 0..i {
                    omega[(i, j)] = constrained[pos];
                    omega[(j, i)] = constrained[pos];
                    pos += 1;
                }
            }
        }
        let z = &constrained[pos..pos + k * lay.n_levels];
        pos += k * lay.n_levels;
        let l_omega = omega.clone().cholesky().unwrap().l();
        let d_tau = DMatrix::from_diagonal(&DVector::from_column_slice(tau));
        let sigma = &d_tau * &omega * &d_tau;
        let sigma_chol = sigma.clone().cholesky().unwrap();
        let log_det_sigma = 2.0 * sigma_chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let mut effects = Vec::with_capacity(lay.n_levels);
        for j in 0..lay.n_levels {
            let b = &d_tau * &l_omega * DVector::from_column_slice(&z[j * k..(j + 1) * k]);
            let quad = b.dot(&sigma_chol.solve(&b));
            value += -0.5 * quad - 0.5 * log_det_sigma - 0.5 * k as f64 * (2.0 * std::f64::consts::PI).ln();
            effects.push(b);
        }
        log_jac += lay.n_levels as f64 * 0.5 * log_det_sigma;
        for (i, e) in eta.iter_mut().enumerate() {
            let b = &effects[block.level_of_row[i]];
            *e += (0..k).map(|t| block.z[i * k + t] * b[t]).sum::<f64>();
        }
    }
    value += eta.iter().zip(&dm.y).map(|(&e, &y)| f64::from(y) * e - log1p_exp(e)).sum::<f64>();
    (value, log_jac)
}

#[test]
fn non_centered_matches_centered_up_to_jacobian() {
    let mut r = rng(55);
    let dm = random_design(&mut r, 40, 3, &[(3, 6, true), (2, 5, false), (4, 3, true)]);
    let model = HierarchicalLogit::new(dm, Priors::default()).unwrap();
    let layouts = model.layouts().to_vec();
    for _ in 0..5 {
        let base: Vec<f64> = (0..model.dim()).map(|_| 0.7 * normal(&mut r)).collect();
        let mut offsets = Vec::new();
        for _ in 0..6 {
            // Resample beta and z; keep scales and correlations fixed.
            let mut theta = base.clone();
            for v in theta[..3].iter_mut() {
                *v = 2.0 * normal(&mut r);
            }
            for lay in &layouts {
                for v in theta[lay.z..lay.z + lay.n_terms * lay.n_levels].iter_mut() {
                    *v = normal(&mut r);
                }
            }
            let (nc, _) = model.log_posterior_and_gradient(&theta).unwrap();
            let (c, log_jac) = centered_terms(&model, &theta);
            offsets.push(nc - (c + log_jac));
        }
        for o in &offsets {
            assert!((o - offsets[0]).abs() < 1e-8, "{offsets:?}");
        }
    }
}

#[test]
fn identical_inputs_give_identical_draws() {
    let mut rng = rng(77);
    let dm = random_design(&mut rng, 40, 2, &[(2, 5, true)]);
    let model = HierarchicalLogit::new(dm, Priors::default()).unwrap();
    let config = SamplerConfig { chains: 2, iterations: 300, warmup: 150, seed: 4, ..Default::default() };
    let a = sample(&model, &config).unwrap();
    let b = sample(&model, &config).unwrap();
    assert_eq!(a, b);
    let c = sample(&model, &SamplerConfig { seed: 5, ..config }).unwrap();
    assert_ne!(a.values, c.values);
}
