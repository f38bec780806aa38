//! Log posterior of the hierarchical Bernoulli-logit model and its gradient.
//!
//! Unconstrained parameter layout: fixed coefficients, then for each group
//! block its log standard deviations, the canonical partial correlations
//! (atanh scale, row-major over the strict lower triangle; correlated blocks
//! with more than one term only), and the standardized offsets z (level-major).
//! Group effects are `b_j = diag(tau) L z_j` with `L` the Cholesky factor of
//! the block correlation matrix.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use super::design::DesignMatrix;
use super::InferenceError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Priors {
    /// Cauchy(0, scale) on every fixed coefficient.
    pub fixed_scale: f64,
    /// Half-Student-t(df, 0, scale) on group standard deviations.
    pub sd_df: f64,
    pub sd_scale: f64,
    /// LKJ shape on each block correlation matrix.
    pub lkj_shape: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Priors { fixed_scale: 2.5, sd_df: 3.0, sd_scale: 2.5, lkj_shape: 1.0 }
    }
}

impl Priors {
    pub fn validate(&self) -> Result<(), InferenceError> {
        for (name, v) in [
            ("fixed_scale", self.fixed_scale),
            ("sd_df", self.sd_df),
            ("sd_scale", self.sd_scale),
            ("lkj_shape", self.lkj_shape),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(InferenceError::Config(format!("prior {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> [String; 3] {
        [
            format!("fixed: cauchy(0, {})", self.fixed_scale),
            format!("sd: half-student-t({}, 0, {})", self.sd_df, self.sd_scale),
            format!("cor: lkj({})", self.lkj_shape),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Fixed,
    GroupSd,
    Correlation,
    Offset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamName {
    pub name: String,
    pub kind: ParamKind,
}

/// Offsets of one group block inside the unconstrained vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    pub n_terms: usize,
    pub n_levels: usize,
    pub log_sd: usize,
    pub corr: usize,
    pub n_corr: usize,
    pub z: usize,
}

/// Something the sampler can explore.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;
    /// Log density at `q`; writes the gradient into `grad`.
    fn logp_grad(&self, q: &[f64], grad: &mut [f64]) -> f64;
    /// Name of an unconstrained coordinate, for error messages.
    fn coordinate_name(&self, i: usize) -> String {
        format!("theta[{i}]")
    }
    fn output_names(&self) -> Vec<ParamName>;
    /// Map an unconstrained point to the reported parameters.
    fn constrain(&self, q: &[f64], out: &mut Vec<f64>);
}

pub(crate) fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 - tanh(y)^2)` without cancellation.
pub(crate) fn log1m_tanh_sq(y: f64) -> f64 {
    let a = y.abs();
    2.0 * (LN_2 - a - (-2.0 * a).exp().ln_1p())
}

/// Cholesky factor of a correlation matrix from canonical partial correlations.
#[derive(Debug, Clone)]
pub(crate) struct CholCorr {
    pub k: usize,
    /// tanh of the unconstrained values.
    pub w: Vec<f64>,
    /// Row-major k x k lower triangle.
    pub l: Vec<f64>,
}

impl CholCorr {
    pub fn identity(k: usize) -> Self {
        let mut l = vec![0.0; k * k];
        for i in 0..k {
            l[i * k + i] = 1.0;
        }
        CholCorr { k, w: Vec::new(), l }
    }

    pub fn new(y: &[f64], k: usize) -> Self {
        debug_assert_eq!(y.len(), k * (k.saturating_sub(1)) / 2);
        let w: Vec<f64> = y.iter().map(|v| v.tanh()).collect();
        let mut l = vec![0.0; k * k];
        l[0] = 1.0;
        let mut idx = 0;
        for i in 1..k {
            let mut log_rem = 0.0f64;
            for m in 0..i {
                l[i * k + m] = w[idx + m] * (0.5 * log_rem).exp();
                log_rem += log1m_tanh_sq(y[idx + m]);
            }
            l[i * k + i] = (0.5 * log_rem).exp();
            idx += i;
        }
        CholCorr { k, w, l }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.k + j]
    }

    /// Correlation matrix entries below the diagonal, row-major.
    pub fn correlations(&self) -> Vec<f64> {
        let k = self.k;
        let mut out = Vec::with_capacity(k * (k - 1) / 2);
        for i in 1..k {
            for j in 0..i {
                out.push((0..=j).map(|m| self.at(i, m) * self.at(j, m)).sum());
            }
        }
        out
    }
}

/// LKJ log density of the Cholesky factor plus the log Jacobian of the
/// tanh/partial-correlation transform, as a function of the unconstrained
/// values. Adds the gradient into `grad`.
pub(crate) fn lkj_cholesky_term(y: &[f64], k: usize, shape: f64, grad: &mut [f64]) -> f64 {
    let mut lp = 0.0;
    let mut idx = 0;
    for i in 1..k {
        for m in 0..i {
            let c = 1.0 + 0.5 * ((k - i - 1) as f64 + 2.0 * (shape - 1.0)) + 0.5 * (i - 1 - m) as f64;
            let v = y[idx + m];
            lp += c * log1m_tanh_sq(v);
            grad[idx + m] += -2.0 * c * v.tanh();
        }
        idx += i;
    }
    lp
}

/// Half-Student-t log density of `tau = exp(u)` plus the log Jacobian `u`,
/// with its derivative in `u`.
pub(crate) fn half_t_log_sd(u: f64, df: f64, scale: f64) -> (f64, f64) {
    let tau = u.exp();
    let s = (tau / scale).powi(2) / df;
    let norm = LN_2 + ln_gamma_half_t(df) - 0.5 * (df * PI).ln() - scale.ln();
    let lp = norm - 0.5 * (df + 1.0) * s.ln_1p() + u;
    let d = -(df + 1.0) * s / (1.0 + s) + 1.0;
    (lp, d)
}

fn ln_gamma_half_t(df: f64) -> f64 {
    crate::special::ln_gamma(0.5 * (df + 1.0)) - crate::special::ln_gamma(0.5 * df)
}

pub(crate) fn cauchy_log(beta: f64, scale: f64) -> (f64, f64) {
    let lp = -(PI * scale).ln() - (beta / scale).powi(2).ln_1p();
    (lp, -2.0 * beta / (scale * scale + beta * beta))
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// The non-centered hierarchical Bernoulli-logit posterior.
#[derive(Debug, Clone)]
pub struct HierarchicalLogit {
    design: DesignMatrix,
    priors: Priors,
    layouts: Vec<BlockLayout>,
    dim: usize,
}

impl HierarchicalLogit {
    pub fn new(design: DesignMatrix, priors: Priors) -> Result<Self, InferenceError> {
        priors.validate()?;
        let mut offset = design.n_fixed();
        let mut layouts = Vec::with_capacity(design.blocks.len());
        for b in &design.blocks {
            let k = b.n_terms();
            let n_corr = if b.correlated { k * (k - 1) / 2 } else { 0 };
            let layout = BlockLayout {
                n_terms: k,
                n_levels: b.n_levels(),
                log_sd: offset,
                corr: offset + k,
                n_corr,
                z: offset + k + n_corr,
            };
            offset = layout.z + k * b.n_levels();
            layouts.push(layout);
        }
        Ok(HierarchicalLogit { design, priors, layouts, dim: offset })
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn priors(&self) -> &Priors {
        &self.priors
    }

    pub fn layouts(&self) -> &[BlockLayout] {
        &self.layouts
    }

    fn chol(&self, layout: &BlockLayout, theta: &[f64]) -> CholCorr {
        if layout.n_corr == 0 {
            CholCorr::identity(layout.n_terms)
        } else {
            CholCorr::new(&theta[layout.corr..layout.corr + layout.n_corr], layout.n_terms)
        }
    }

    /// Log posterior and gradient with a dimension check.
    pub fn log_posterior_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>), InferenceError> {
        if theta.len() != self.dim {
            return Err(InferenceError::Dimension { expected: self.dim, got: theta.len() });
        }
        let mut grad = vec![0.0; self.dim];
        let lp = self.evaluate(theta, &mut grad);
        Ok((lp, grad))
    }

    /// Log likelihood alone, without gradient.
    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        let eta = self.linear_predictor(theta);
        eta.iter()
            .zip(&self.design.y)
            .map(|(&e, &y)| f64::from(y) * e - log1p_exp(e))
            .sum()
    }

    /// Natural-scale group effects `b` of block `g`, level-major.
    pub fn group_effects(&self, theta: &[f64], g: usize) -> Vec<f64> {
        let lay = &self.layouts[g];
        let k = lay.n_terms;
        let chol = self.chol(lay, theta);
        let mut out = vec![0.0; lay.n_levels * k];
        for j in 0..lay.n_levels {
            let z = &theta[lay.z + j * k..lay.z + (j + 1) * k];
            for r in 0..k {
                let lz: f64 = (0..=r).map(|m| chol.at(r, m) * z[m]).sum();
                out[j * k + r] = theta[lay.log_sd + r].exp() * lz;
            }
        }
        out
    }

    pub fn linear_predictor(&self, theta: &[f64]) -> Vec<f64> {
        let dm = &self.design;
        let p = dm.n_fixed();
        let beta = &theta[..p];
        let mut eta: Vec<f64> = (0..dm.n_rows())
            .map(|i| dm.row(i).iter().zip(beta).map(|(a, b)| a * b).sum())
            .collect();
        for (g, block) in dm.blocks.iter().enumerate() {
            let k = block.n_terms();
            let b = self.group_effects(theta, g);
            for (i, e) in eta.iter_mut().enumerate() {
                let l = block.level_of_row[i];
                *e += (0..k).map(|r| block.z[i * k + r] * b[l * k + r]).sum::<f64>();
            }
        }
        eta
    }

    fn evaluate(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        let dm = &self.design;
        let n = dm.n_rows();
        let p = dm.n_fixed();
        let pr = &self.priors;

        let mut eta: Vec<f64> = (0..n)
            .map(|i| dm.row(i).iter().zip(&theta[..p]).map(|(a, b)| a * b).sum())
            .collect();

        struct BlockState {
            tau: Vec<f64>,
            chol: CholCorr,
            lz: Vec<f64>,
        }
        let mut states = Vec::with_capacity(self.layouts.len());
        for (block, lay) in dm.blocks.iter().zip(&self.layouts) {
            let k = lay.n_terms;
            let tau: Vec<f64> = theta[lay.log_sd..lay.log_sd + k].iter().map(|u| u.exp()).collect();
            let chol = self.chol(lay, theta);
            let mut lz = vec![0.0; lay.n_levels * k];
            for j in 0..lay.n_levels {
                let z = &theta[lay.z + j * k..lay.z + (j + 1) * k];
                for r in 0..k {
                    lz[j * k + r] = (0..=r).map(|m| chol.at(r, m) * z[m]).sum();
                }
            }
            for (i, e) in eta.iter_mut().enumerate() {
                let l = block.level_of_row[i];
                let zi = &block.z[i * k..(i + 1) * k];
                *e += (0..k).map(|r| zi[r] * tau[r] * lz[l * k + r]).sum::<f64>();
            }
            states.push(BlockState { tau, chol, lz });
        }

        let mut lp = 0.0;
        let mut resid = vec![0.0; n];
        for i in 0..n {
            let y = f64::from(dm.y[i]);
            lp += y * eta[i] - log1p_exp(eta[i]);
            resid[i] = y - sigmoid(eta[i]);
        }
        for i in 0..n {
            for (g, x) in grad[..p].iter_mut().zip(dm.row(i)) {
                *g += x * resid[i];
            }
        }

        for ((block, lay), st) in dm.blocks.iter().zip(&self.layouts).zip(&states) {
            let k = lay.n_terms;
            let mut gsum = vec![0.0; lay.n_levels * k];
            for i in 0..n {
                let l = block.level_of_row[i];
                for r in 0..k {
                    gsum[l * k + r] += resid[i] * block.z[i * k + r];
                }
            }
            let mut gl = vec![0.0; k * k];
            for j in 0..lay.n_levels {
                let z = &theta[lay.z + j * k..lay.z + (j + 1) * k];
                for r in 0..k {
                    let gr = gsum[j * k + r];
                    if gr == 0.0 {
                        continue;
                    }
                    grad[lay.log_sd + r] += gr * st.lz[j * k + r] * st.tau[r];
                    for m in 0..=r {
                        grad[lay.z + j * k + m] += gr * st.tau[r] * st.chol.at(r, m);
                        gl[r * k + m] += gr * st.tau[r] * z[m];
                    }
                }
            }
            if lay.n_corr > 0 {
                let y = &theta[lay.corr..lay.corr + lay.n_corr];
                let mut idx = 0;
                for i in 1..k {
                    // Suffix sums of gL[i, j] * L[i, j] for j > m.
                    let mut tail = gl[i * k + i] * st.chol.at(i, i);
                    for m in (0..i).rev() {
                        let w = st.chol.w[idx + m];
                        let r_m = if w != 0.0 {
                            st.chol.at(i, m) / w
                        } else {
                            (0.5 * y[idx..idx + m].iter().map(|&v| log1m_tanh_sq(v)).sum::<f64>()).exp()
                        };
                        grad[lay.corr + idx + m] += gl[i * k + m] * r_m * (1.0 - w * w) - w * tail;
                        tail += gl[i * k + m] * st.chol.at(i, m);
                    }
                    idx += i;
                }
            }
        }

        for c in 0..p {
            let (v, d) = cauchy_log(theta[c], pr.fixed_scale);
            lp += v;
            grad[c] += d;
        }
        for lay in &self.layouts {
            for r in 0..lay.n_terms {
                let (v, d) = half_t_log_sd(theta[lay.log_sd + r], pr.sd_df, pr.sd_scale);
                lp += v;
                grad[lay.log_sd + r] += d;
            }
            if lay.n_corr > 0 {
                let range = lay.corr..lay.corr + lay.n_corr;
                lp += lkj_cholesky_term(&theta[range.clone()], lay.n_terms, pr.lkj_shape, &mut grad[range]);
            }
            for i in lay.z..lay.z + lay.n_terms * lay.n_levels {
                lp -= 0.5 * theta[i] * theta[i] + LN_SQRT_2PI;
                grad[i] -= theta[i];
            }
        }
        lp
    }
}

impl LogDensity for HierarchicalLogit {
    fn dim(&self) -> usize {
        self.dim
    }

    fn logp_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        self.evaluate(q, grad)
    }

    fn coordinate_name(&self, i: usize) -> String {
        let p = self.design.n_fixed();
        if i < p {
            return format!("b_{}", self.design.column_names[i]);
        }
        for (block, lay) in self.design.blocks.iter().zip(&self.layouts) {
            let g = block.name();
            if i < lay.corr {
                return format!("log_sd_{g}__{}", block.term_names[i - lay.log_sd]);
            }
            if i < lay.z {
                return format!("cor_unconstrained_{g}[{}]", i - lay.corr);
            }
            let end = lay.z + lay.n_terms * lay.n_levels;
            if i < end {
                let off = i - lay.z;
                let (j, r) = (off / lay.n_terms, off % lay.n_terms);
                return format!("z_{g}[{},{}]", block.levels[j], block.term_names[r]);
            }
        }
        format!("theta[{i}]")
    }

    fn output_names(&self) -> Vec<ParamName> {
        let mut out: Vec<ParamName> = self
            .design
            .column_names
            .iter()
            .map(|c| ParamName { name: format!("b_{c}"), kind: ParamKind::Fixed })
            .collect();
        for (block, lay) in self.design.blocks.iter().zip(&self.layouts) {
            let g = block.name();
            for t in &block.term_names {
                out.push(ParamName { name: format!("sd_{g}__{t}"), kind: ParamKind::GroupSd });
            }
            if lay.n_corr > 0 {
                for i in 1..lay.n_terms {
                    for j in 0..i {
                        out.push(ParamName {
                            name: format!("cor_{g}__{}__{}", block.term_names[j], block.term_names[i]),
                            kind: ParamKind::Correlation,
                        });
                    }
                }
            }
            for level in &block.levels {
                for t in &block.term_names {
                    out.push(ParamName { name: format!("z_{g}[{level},{t}]"), kind: ParamKind::Offset });
                }
            }
        }
        out
    }

    fn constrain(&self, q: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&q[..self.design.n_fixed()]);
        for lay in &self.layouts {
            out.extend(q[lay.log_sd..lay.log_sd + lay.n_terms].iter().map(|u| u.exp()));
            if lay.n_corr > 0 {
                out.extend(self.chol(lay, q).correlations());
            }
            out.extend_from_slice(&q[lay.z..lay.z + lay.n_terms * lay.n_levels]);
        }
    }
}
