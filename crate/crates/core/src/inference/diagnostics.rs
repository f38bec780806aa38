//! Split-chain, rank-normalized R-hat and effective sample size.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::nuts::PosteriorDraws;
use super::InferenceError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub rhat: f64,
    pub ess_bulk: f64,
    /// ESS of the untransformed draws, used for the Monte Carlo error of the mean.
    pub ess_mean: f64,
    pub mcse_mean: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Halve each chain, dropping the middle draw of odd-length chains.
fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let half = c.len() / 2;
        out.push(c[..half].to_vec());
        out.push(c[c.len() - half..].to_vec());
    }
    out
}

/// Average ranks (1-based) with ties sharing their mean rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Replace pooled draws by normal scores of their fractional ranks.
fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let pooled: Vec<f64> = chains.concat();
    let s = pooled.len() as f64;
    let ranks = average_ranks(&pooled);
    let normal = Normal::standard();
    let mut it = ranks.into_iter();
    chains
        .iter()
        .map(|c| {
            c.iter()
                .map(|_| normal.inverse_cdf((it.next().unwrap_or(0.0) - 0.375) / (s + 0.25)))
                .collect()
        })
        .collect()
}

fn rhat_basic(chains: &[Vec<f64>]) -> f64 {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let b = n * sample_var(&means);
    let w = mean(&chains.iter().map(|c| sample_var(c)).collect::<Vec<_>>());
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

/// Autocovariances at all lags (biased, divisor n) via zero-padded FFT.
fn autocovariance(x: &[f64], planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - m, 0.0)).collect();
    buf.resize(size, Complex::new(0.0, 0.0));
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    buf.iter().take(n).map(|c| c.re / (size as f64 * n as f64)).collect()
}

/// Multi-chain ESS with Geyer's initial monotone sequence.
fn ess_basic(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains[0].len();
    let mut planner = FftPlanner::new();
    let acov: Vec<Vec<f64>> = chains.iter().map(|c| autocovariance(c, &mut planner)).collect();
    let chain_means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let nf = n as f64;
    let mean_var = acov.iter().map(|a| a[0] * nf / (nf - 1.0)).sum::<f64>() / m as f64;
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        var_plus += sample_var(&chain_means);
    }
    let total = (m * n) as f64;
    if !(var_plus > 0.0) || !var_plus.is_finite() {
        return f64::NAN;
    }
    let mean_acov = |lag: usize| acov.iter().map(|a| a[lag]).sum::<f64>() / m as f64;

    let mut rho = vec![0.0; n];
    let mut rho_even = 1.0;
    rho[0] = rho_even;
    let mut rho_odd = 1.0 - (mean_var - mean_acov(1)) / var_plus;
    rho[1] = rho_odd;
    let mut s = 1;
    while s + 4 < n && rho_even + rho_odd > 0.0 {
        rho_even = 1.0 - (mean_var - mean_acov(s + 1)) / var_plus;
        rho_odd = 1.0 - (mean_var - mean_acov(s + 2)) / var_plus;
        if rho_even + rho_odd >= 0.0 {
            rho[s + 1] = rho_even;
            rho[s + 2] = rho_odd;
        }
        s += 2;
    }
    let max_s = s;
    if rho_even > 0.0 && max_s + 1 < n {
        rho[max_s + 1] = rho_even;
    }
    let mut t = 1;
    while t + 3 <= max_s {
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t] {
            rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0;
            rho[t + 2] = rho[t + 1];
        }
        t += 2;
    }
    let tail = if max_s + 1 < n { rho[max_s + 1] } else { 0.0 };
    let tau = -1.0 + 2.0 * rho[..max_s].iter().sum::<f64>() + tail;
    (total / tau).min(total * total.log10())
}

/// Diagnostics for one parameter given as one series per chain.
pub fn diagnose_series(chains: &[Vec<f64>]) -> Result<Diagnostics, InferenceError> {
    if chains.len() < 2 {
        return Err(InferenceError::InsufficientDraws(format!("need at least 2 chains, got {}", chains.len())));
    }
    let n = chains[0].len();
    if n < 4 || chains.iter().any(|c| c.len() != n) {
        return Err(InferenceError::InsufficientDraws(
            "need at least 4 draws per chain and equal chain lengths".into(),
        ));
    }
    let pooled: Vec<f64> = chains.concat();
    let sd = sample_var(&pooled).sqrt();
    if sd == 0.0 || !sd.is_finite() {
        let spread = chains.iter().map(|c| c[0]).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        let rhat = if spread.0 == spread.1 { 1.0 } else { f64::INFINITY };
        return Ok(Diagnostics { rhat, ess_bulk: f64::NAN, ess_mean: f64::NAN, mcse_mean: 0.0 });
    }
    let split = split_chains(chains);
    let z = rank_normalize(&split);
    let median = {
        let mut s = pooled.clone();
        s.sort_by(f64::total_cmp);
        let k = s.len();
        if k % 2 == 1 {
            s[k / 2]
        } else {
            0.5 * (s[k / 2 - 1] + s[k / 2])
        }
    };
    let folded: Vec<Vec<f64>> = split.iter().map(|c| c.iter().map(|v| (v - median).abs()).collect()).collect();
    let z_folded = rank_normalize(&folded);
    let rhat = rhat_basic(&z).max(rhat_basic(&z_folded));
    let ess_bulk = ess_basic(&z);
    let ess_mean = ess_basic(&split);
    Ok(Diagnostics { rhat, ess_bulk, ess_mean, mcse_mean: sd / ess_mean.sqrt() })
}

/// Per-parameter diagnostics, in parameter order.
pub fn rhat_and_ess(draws: &PosteriorDraws) -> Result<Vec<Diagnostics>, InferenceError> {
    (0..draws.n_params()).map(|i| diagnose_series(&draws.series(i))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn noise(chains: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seeding::rng_from_seed(seed);
        (0..chains).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect()
    }

    #[test]
    fn white_noise_is_converged_and_efficient() {
        let d = diagnose_series(&noise(4, 1000, 1)).unwrap();
        assert!((0.99..=1.01).contains(&d.rhat), "{}", d.rhat);
        assert!(d.ess_bulk > 3000.0 && d.ess_bulk < 5500.0, "{}", d.ess_bulk);
    }

    #[test]
    fn autocorrelated_chain_has_reduced_ess() {
        // AR(1) with phi = 0.9 has ESS ratio (1 - phi) / (1 + phi).
        let mut rng = seeding::rng_from_seed(2);
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                let mut x = 0.0;
                (0..5000)
                    .map(|_| {
                        let e: f64 = rng.sample(StandardNormal);
                        x = 0.9 * x + e;
                        x
                    })
                    .collect()
            })
            .collect();
        let d = diagnose_series(&chains).unwrap();
        let expected = 20000.0 * 0.1 / 1.9;
        assert!((d.ess_mean / expected - 1.0).abs() < 0.3, "{} vs {expected}", d.ess_mean);
    }

    #[test]
    fn separated_chains_have_large_rhat() {
        let mut chains = noise(2, 500, 3);
        for v in chains[1].iter_mut() {
            *v += 10.0;
        }
        assert!(diagnose_series(&chains).unwrap().rhat > 1.1);
        let constant = vec![vec![0.0; 100], vec![1.0; 100]];
        assert!(diagnose_series(&constant).unwrap().rhat > 1.1);
    }

    #[test]
    fn preconditions() {
        assert!(diagnose_series(&noise(1, 100, 4)).is_err());
        assert!(diagnose_series(&noise(2, 3, 4)).is_err());
    }

    #[test]
    fn ranks_share_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }
}
