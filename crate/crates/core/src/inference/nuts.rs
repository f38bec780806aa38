//! Hamiltonian Monte Carlo with a no-U-turn trajectory (multinomial variant),
//! dual-averaging step size adaptation and windowed diagonal metric adaptation.
//! A fixed-length leapfrog sampler is available as a fallback.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{LogDensity, ParamKind, ParamName};
use super::InferenceError;
use crate::seeding;
use crate::stimuli::Experiment;

const MAX_DELTA_H: f64 = 1000.0;
const INIT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Nuts,
    /// Fixed number of leapfrog steps per iteration.
    StaticHmc,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Nuts => "nuts",
            Algorithm::StaticHmc => "static_hmc",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub chains: usize,
    /// Total iterations per chain, warmup included.
    pub iterations: usize,
    pub warmup: usize,
    pub target_accept: f64,
    pub max_tree_depth: usize,
    pub algorithm: Algorithm,
    /// Leapfrog steps per iteration for the static sampler.
    pub n_leapfrog: usize,
    pub seed: u64,
    /// Post-warmup divergence rate above which a warning is attached.
    pub max_divergence_rate: f64,
    /// Initial values are uniform on (-init_radius, init_radius).
    pub init_radius: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 6,
            iterations: 4000,
            warmup: 1000,
            target_accept: 0.95,
            max_tree_depth: 10,
            algorithm: Algorithm::Nuts,
            n_leapfrog: 32,
            seed: 0,
            max_divergence_rate: 0.0,
            init_radius: 2.0,
        }
    }
}

impl SamplerConfig {
    pub fn for_experiment(experiment: Experiment) -> Self {
        SamplerConfig {
            target_accept: match experiment {
                Experiment::E1a => 0.95,
                Experiment::E2a => 0.98,
                Experiment::E2b => 0.999,
            },
            ..Default::default()
        }
    }

    pub fn draws_per_chain(&self) -> usize {
        self.iterations.saturating_sub(self.warmup)
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        let bad = |m: &str| Err(InferenceError::Config(m.to_string()));
        if self.chains == 0 {
            return bad("chains must be at least 1");
        }
        if self.warmup >= self.iterations {
            return bad("warmup must be smaller than iterations");
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return bad("target_accept must lie in (0, 1)");
        }
        if self.max_tree_depth == 0 || self.n_leapfrog == 0 {
            return bad("tree depth and leapfrog count must be positive");
        }
        if !(self.init_radius.is_finite() && self.init_radius >= 0.0) {
            return bad("init_radius must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub chain: usize,
    pub step_size: f64,
    pub inv_metric: Vec<f64>,
    pub divergences: usize,
    pub max_depth_hits: usize,
    pub mean_accept: f64,
    pub leapfrog_steps: u64,
}

/// Post-warmup draws, stored chain-major then draw-major then parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub params: Vec<ParamName>,
    pub n_chains: usize,
    pub draws_per_chain: usize,
    pub values: Vec<f64>,
    pub chain_stats: Vec<ChainStats>,
    pub warnings: Vec<String>,
}

impl PosteriorDraws {
    /// Build from per-chain series of a single parameter set; mainly for tests.
    pub fn from_chains(params: Vec<ParamName>, chains: Vec<Vec<Vec<f64>>>) -> Result<Self, InferenceError> {
        let n_chains = chains.len();
        let draws_per_chain = chains.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n_chains * draws_per_chain * params.len());
        for chain in &chains {
            if chain.len() != draws_per_chain {
                return Err(InferenceError::Config("chains differ in length".into()));
            }
            for draw in chain {
                if draw.len() != params.len() {
                    return Err(InferenceError::Config("draw width does not match parameter table".into()));
                }
                values.extend_from_slice(draw);
            }
        }
        Ok(PosteriorDraws { params, n_chains, draws_per_chain, values, chain_stats: Vec::new(), warnings: Vec::new() })
    }

    /// Single-parameter draws given as one series per chain.
    pub fn from_series(name: &str, kind: ParamKind, series: Vec<Vec<f64>>) -> Result<Self, InferenceError> {
        let chains = series.into_iter().map(|c| c.into_iter().map(|v| vec![v]).collect()).collect();
        Self::from_chains(vec![ParamName { name: name.to_string(), kind }], chains)
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn total_draws(&self) -> usize {
        self.n_chains * self.draws_per_chain
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn get(&self, chain: usize, draw: usize, param: usize) -> f64 {
        self.values[(chain * self.draws_per_chain + draw) * self.n_params() + param]
    }

    pub fn chain_series(&self, param: usize, chain: usize) -> Vec<f64> {
        (0..self.draws_per_chain).map(|d| self.get(chain, d, param)).collect()
    }

    /// All chains of one parameter.
    pub fn series(&self, param: usize) -> Vec<Vec<f64>> {
        (0..self.n_chains).map(|c| self.chain_series(param, c)).collect()
    }

    /// Chains concatenated in chain order.
    pub fn pooled(&self, param: usize) -> Vec<f64> {
        self.series(param).concat()
    }

    pub fn indices_of_kind(&self, kind: ParamKind) -> Vec<usize> {
        (0..self.n_params()).filter(|&i| self.params[i].kind == kind).collect()
    }

    pub fn divergences(&self) -> usize {
        self.chain_stats.iter().map(|s| s.divergences).sum()
    }
}

#[derive(Clone)]
struct Point {
    q: Vec<f64>,
    p: Vec<f64>,
    g: Vec<f64>,
    logp: f64,
}

struct Hamiltonian<'a, D: LogDensity> {
    target: &'a D,
    inv_metric: Vec<f64>,
}

impl<D: LogDensity> Hamiltonian<'_, D> {
    fn update(&self, pt: &mut Point) -> Result<(), InferenceError> {
        pt.logp = self.target.logp_grad(&pt.q, &mut pt.g);
        if pt.logp.is_finite() {
            if let Some(i) = pt.g.iter().position(|v| !v.is_finite()) {
                return Err(InferenceError::NonFiniteGradient { parameter: self.target.coordinate_name(i) });
            }
        }
        Ok(())
    }

    fn energy(&self, pt: &Point) -> f64 {
        let kinetic: f64 = pt.p.iter().zip(&self.inv_metric).map(|(p, m)| m * p * p).sum::<f64>() * 0.5;
        let h = -pt.logp + kinetic;
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    fn p_sharp(&self, pt: &Point) -> Vec<f64> {
        pt.p.iter().zip(&self.inv_metric).map(|(p, m)| m * p).collect()
    }

    fn leapfrog(&self, pt: &mut Point, eps: f64) -> Result<(), InferenceError> {
        for (p, g) in pt.p.iter_mut().zip(&pt.g) {
            *p += 0.5 * eps * g;
        }
        for ((q, p), m) in pt.q.iter_mut().zip(&pt.p).zip(&self.inv_metric) {
            *q += eps * m * p;
        }
        self.update(pt)?;
        for (p, g) in pt.p.iter_mut().zip(&pt.g) {
            *p += 0.5 * eps * g;
        }
        Ok(())
    }

    fn sample_momentum(&self, pt: &mut Point, rng: &mut ChaCha8Rng) {
        for (p, m) in pt.p.iter_mut().zip(&self.inv_metric) {
            let n: f64 = rng.sample(StandardNormal);
            *p = n / m.sqrt();
        }
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn criterion(p_sharp_minus: &[f64], p_sharp_plus: &[f64], rho: &[f64]) -> bool {
    dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0
}

struct TreeAccum {
    n_leapfrog: u64,
    sum_metro: f64,
    divergent: bool,
}

struct Edges {
    p_sharp_beg: Vec<f64>,
    p_sharp_end: Vec<f64>,
    p_beg: Vec<f64>,
    p_end: Vec<f64>,
    rho: Vec<f64>,
}

impl Edges {
    fn zeros(d: usize) -> Self {
        Edges {
            p_sharp_beg: vec![0.0; d],
            p_sharp_end: vec![0.0; d],
            p_beg: vec![0.0; d],
            p_end: vec![0.0; d],
            rho: vec![0.0; d],
        }
    }
}

struct Transition {
    accept_stat: f64,
    depth: usize,
    n_leapfrog: u64,
    divergent: bool,
}

struct Sampler<'a, D: LogDensity> {
    ham: Hamiltonian<'a, D>,
    eps: f64,
    max_depth: usize,
    rng: ChaCha8Rng,
}

impl<D: LogDensity> Sampler<'_, D> {
    /// Extend the trajectory from `z` by `2^depth` leapfrog steps in direction `sign`.
    #[allow(clippy::too_many_arguments)]
    fn build_tree(
        &mut self,
        depth: usize,
        z: &mut Point,
        z_propose: &mut Point,
        edges: &mut Edges,
        h0: f64,
        sign: f64,
        log_sum_weight: &mut f64,
        acc: &mut TreeAccum,
    ) -> Result<bool, InferenceError> {
        if depth == 0 {
            self.ham.leapfrog(z, sign * self.eps)?;
            acc.n_leapfrog += 1;
            let h = self.ham.energy(z);
            if h - h0 > MAX_DELTA_H {
                acc.divergent = true;
            }
            *log_sum_weight = log_sum_exp(*log_sum_weight, h0 - h);
            acc.sum_metro += if h0 - h > 0.0 { 1.0 } else { (h0 - h).exp() };
            z_propose.clone_from(z);
            edges.p_sharp_beg = self.ham.p_sharp(z);
            edges.p_sharp_end.clone_from(&edges.p_sharp_beg);
            for (r, p) in edges.rho.iter_mut().zip(&z.p) {
                *r += p;
            }
            edges.p_beg.clone_from(&z.p);
            edges.p_end.clone_from(&z.p);
            return Ok(!acc.divergent);
        }
        let d = z.q.len();

        let mut init = Edges::zeros(d);
        let mut lsw_init = f64::NEG_INFINITY;
        if !self.build_tree(depth - 1, z, z_propose, &mut init, h0, sign, &mut lsw_init, acc)? {
            return Ok(false);
        }

        let mut z_propose_final = z.clone();
        let mut fin = Edges::zeros(d);
        let mut lsw_final = f64::NEG_INFINITY;
        if !self.build_tree(depth - 1, z, &mut z_propose_final, &mut fin, h0, sign, &mut lsw_final, acc)? {
            return Ok(false);
        }

        let lsw_subtree = log_sum_exp(lsw_init, lsw_final);
        *log_sum_weight = log_sum_exp(*log_sum_weight, lsw_subtree);
        if lsw_final > lsw_subtree || self.rng.random::<f64>() < (lsw_final - lsw_subtree).exp() {
            std::mem::swap(z_propose, &mut z_propose_final);
        }

        let rho_subtree = add(&init.rho, &fin.rho);
        for (r, s) in edges.rho.iter_mut().zip(&rho_subtree) {
            *r += s;
        }
        let mut persist = criterion(&init.p_sharp_beg, &fin.p_sharp_end, &rho_subtree);
        persist &= criterion(&init.p_sharp_beg, &fin.p_sharp_beg, &add(&init.rho, &fin.p_beg));
        persist &= criterion(&init.p_sharp_end, &fin.p_sharp_end, &add(&fin.rho, &init.p_end));

        edges.p_sharp_beg = init.p_sharp_beg;
        edges.p_beg = init.p_beg;
        edges.p_sharp_end = fin.p_sharp_end;
        edges.p_end = fin.p_end;
        Ok(persist)
    }

    fn nuts_transition(&mut self, current: &mut Point) -> Result<Transition, InferenceError> {
        let d = current.q.len();
        let mut start = current.clone();
        self.ham.sample_momentum(&mut start, &mut self.rng);
        let h0 = self.ham.energy(&start);

        let mut z_fwd = start.clone();
        let mut z_bck = start.clone();
        let mut z_sample = start.clone();
        let mut z_propose = start.clone();

        let p_sharp0 = self.ham.p_sharp(&start);
        let mut p_fwd_bck = start.p.clone();
        let mut p_bck_fwd = start.p.clone();
        let (mut ps_fwd_fwd, mut ps_fwd_bck) = (p_sharp0.clone(), p_sharp0.clone());
        let (mut ps_bck_fwd, mut ps_bck_bck) = (p_sharp0.clone(), p_sharp0);
        let mut rho = start.p.clone();
        let mut log_sum_weight = 0.0;
        let mut acc = TreeAccum { n_leapfrog: 0, sum_metro: 0.0, divergent: false };
        let mut depth = 0;

        while depth < self.max_depth {
            let mut edges = Edges::zeros(d);
            let mut lsw_subtree = f64::NEG_INFINITY;
            let rho_fwd;
            let rho_bck;
            let valid;
            if self.rng.random::<f64>() > 0.5 {
                rho_bck = rho.clone();
                p_bck_fwd.clone_from(&p_fwd_bck);
                ps_bck_fwd.clone_from(&ps_fwd_bck);
                valid = self.build_tree(depth, &mut z_fwd, &mut z_propose, &mut edges, h0, 1.0, &mut lsw_subtree, &mut acc)?;
                ps_fwd_bck = edges.p_sharp_beg;
                ps_fwd_fwd = edges.p_sharp_end;
                p_fwd_bck = edges.p_beg;
                rho_fwd = edges.rho;
            } else {
                rho_fwd = rho.clone();
                p_fwd_bck.clone_from(&p_bck_fwd);
                ps_fwd_bck.clone_from(&ps_bck_fwd);
                valid = self.build_tree(depth, &mut z_bck, &mut z_propose, &mut edges, h0, -1.0, &mut lsw_subtree, &mut acc)?;
                ps_bck_fwd = edges.p_sharp_beg;
                ps_bck_bck = edges.p_sharp_end;
                p_bck_fwd = edges.p_beg;
                rho_bck = edges.rho;
            }
            if !valid {
                break;
            }
            depth += 1;
            if lsw_subtree > log_sum_weight || self.rng.random::<f64>() < (lsw_subtree - log_sum_weight).exp() {
                z_sample.clone_from(&z_propose);
            }
            log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);
            rho = add(&rho_bck, &rho_fwd);
            let mut persist = criterion(&ps_bck_bck, &ps_fwd_fwd, &rho);
            persist &= criterion(&ps_bck_bck, &ps_fwd_bck, &add(&rho_bck, &p_fwd_bck));
            persist &= criterion(&ps_bck_fwd, &ps_fwd_fwd, &add(&rho_fwd, &p_bck_fwd));
            if !persist {
                break;
            }
        }
        *current = z_sample;
        Ok(Transition {
            accept_stat: if acc.n_leapfrog > 0 { acc.sum_metro / acc.n_leapfrog as f64 } else { 0.0 },
            depth,
            n_leapfrog: acc.n_leapfrog,
            divergent: acc.divergent,
        })
    }

    fn static_transition(&mut self, current: &mut Point, steps: usize) -> Result<Transition, InferenceError> {
        let mut z = current.clone();
        self.ham.sample_momentum(&mut z, &mut self.rng);
        let h0 = self.ham.energy(&z);
        let mut divergent = false;
        let mut taken = 0;
        for _ in 0..steps {
            self.ham.leapfrog(&mut z, self.eps)?;
            taken += 1;
            if self.ham.energy(&z) - h0 > MAX_DELTA_H {
                divergent = true;
                break;
            }
        }
        let h = self.ham.energy(&z);
        let accept_stat = if divergent { 0.0 } else { (h0 - h).exp().min(1.0) };
        if !divergent && self.rng.random::<f64>() < accept_stat {
            *current = z;
        }
        Ok(Transition { accept_stat, depth: 0, n_leapfrog: taken, divergent })
    }

    /// Double or halve the step size until one leapfrog step crosses an
    /// acceptance probability of 0.8.
    fn init_stepsize(&mut self, current: &Point) -> Result<(), InferenceError> {
        let mut direction = 0.0;
        loop {
            let mut z = current.clone();
            self.ham.sample_momentum(&mut z, &mut self.rng);
            let h0 = self.ham.energy(&z);
            self.ham.leapfrog(&mut z, self.eps)?;
            let delta = h0 - self.ham.energy(&z);
            let up = delta > 0.8f64.ln();
            if direction == 0.0 {
                direction = if up { 1.0 } else { -1.0 };
            } else if (direction > 0.0 && !up) || (direction < 0.0 && up) {
                return Ok(());
            }
            self.eps = if direction > 0.0 { 2.0 * self.eps } else { 0.5 * self.eps };
            if self.eps > 1e7 {
                return Err(InferenceError::Sampler("step size diverged; posterior may be improper".into()));
            }
            if self.eps == 0.0 {
                return Err(InferenceError::Sampler("step size collapsed to zero".into()));
            }
        }
    }
}

struct DualAveraging {
    mu: f64,
    delta: f64,
    counter: f64,
    s_bar: f64,
    x_bar: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(eps: f64, delta: f64) -> Self {
        DualAveraging { mu: (10.0 * eps).ln(), delta, counter: 0.0, s_bar: 0.0, x_bar: 0.0 }
    }

    fn restart(&mut self, eps: f64) {
        self.mu = (10.0 * eps).ln();
        self.counter = 0.0;
        self.s_bar = 0.0;
        self.x_bar = 0.0;
    }

    fn learn(&mut self, accept_stat: f64) -> f64 {
        self.counter += 1.0;
        let a = accept_stat.min(1.0);
        let eta = 1.0 / (self.counter + Self::T0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.delta - a);
        let x = self.mu - self.s_bar * self.counter.sqrt() / Self::GAMMA;
        let x_eta = self.counter.powf(-Self::KAPPA);
        self.x_bar = (1.0 - x_eta) * self.x_bar + x_eta * x;
        x.exp()
    }

    fn final_stepsize(&self) -> f64 {
        self.x_bar.exp()
    }
}

/// Windowed variance estimation for the diagonal metric.
struct MetricWindows {
    num_warmup: usize,
    init_buffer: usize,
    term_buffer: usize,
    window_size: usize,
    next_window: usize,
    counter: usize,
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
    enabled: bool,
}

impl MetricWindows {
    fn new(num_warmup: usize, dim: usize) -> Self {
        let (mut init, mut term, mut base) = (75usize, 50usize, 25usize);
        let enabled = num_warmup >= 20;
        if init + base + term > num_warmup {
            init = (0.15 * num_warmup as f64) as usize;
            term = (0.1 * num_warmup as f64) as usize;
            base = num_warmup.saturating_sub(init + term);
        }
        MetricWindows {
            num_warmup,
            init_buffer: init,
            term_buffer: term,
            window_size: base,
            next_window: init + base - 1,
            counter: 0,
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
            enabled,
        }
    }

    fn in_window(&self) -> bool {
        self.counter >= self.init_buffer
            && self.counter < self.num_warmup - self.term_buffer
            && self.counter != self.num_warmup
    }

    fn end_of_window(&self) -> bool {
        self.counter == self.next_window && self.counter != self.num_warmup
    }

    fn compute_next_window(&mut self) {
        let last = self.num_warmup - self.term_buffer - 1;
        if self.next_window == last {
            return;
        }
        self.window_size *= 2;
        self.next_window = self.counter + self.window_size;
        if self.next_window != last && self.next_window + 2 * self.window_size >= self.num_warmup - self.term_buffer {
            self.next_window = last;
        }
    }

    /// Returns the new inverse metric at the end of a window.
    fn learn(&mut self, q: &[f64]) -> Option<Vec<f64>> {
        if !self.enabled {
            return None;
        }
        if self.in_window() {
            self.n += 1;
            for i in 0..q.len() {
                let delta = q[i] - self.mean[i];
                self.mean[i] += delta / self.n as f64;
                self.m2[i] += delta * (q[i] - self.mean[i]);
            }
        }
        let mut out = None;
        if self.end_of_window() {
            self.compute_next_window();
            let n = self.n as f64;
            if self.n > 1 {
                out = Some(
                    self.m2
                        .iter()
                        .map(|m2| (n / (n + 5.0)) * (m2 / (n - 1.0)) + 1e-3 * (5.0 / (n + 5.0)))
                        .collect(),
                );
            }
            self.n = 0;
            self.mean.fill(0.0);
            self.m2.fill(0.0);
        }
        self.counter += 1;
        out
    }
}

fn initial_point<D: LogDensity>(
    ham: &Hamiltonian<'_, D>,
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Point, InferenceError> {
    let d = ham.target.dim();
    let mut last_err = None;
    for _ in 0..INIT_ATTEMPTS {
        let q: Vec<f64> = (0..d)
            .map(|_| if radius > 0.0 { rng.random_range(-radius..radius) } else { 0.0 })
            .collect();
        let mut pt = Point { q, p: vec![0.0; d], g: vec![0.0; d], logp: 0.0 };
        match ham.update(&mut pt) {
            Ok(()) if pt.logp.is_finite() => return Ok(pt),
            Ok(()) => {}
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| {
        InferenceError::Sampler(format!("no finite initial point after {INIT_ATTEMPTS} attempts"))
    }))
}

struct ChainOutput {
    draws: Vec<f64>,
    stats: ChainStats,
}

fn run_chain<D: LogDensity>(target: &D, config: &SamplerConfig, chain: usize) -> Result<ChainOutput, InferenceError> {
    let d = target.dim();
    let mut rng = seeding::stream(config.seed, &format!("sampler/chain/{chain}"));
    let ham = Hamiltonian { target, inv_metric: vec![1.0; d] };
    let mut current = initial_point(&ham, config.init_radius, &mut rng)?;
    let mut sampler = Sampler { ham, eps: 1.0, max_depth: config.max_tree_depth, rng };
    sampler.init_stepsize(&current)?;
    let mut da = DualAveraging::new(sampler.eps, config.target_accept);
    let mut windows = MetricWindows::new(config.warmup, d);

    let n_out = target.output_names().len();
    let mut draws = Vec::with_capacity(config.draws_per_chain() * n_out);
    let mut buf = Vec::with_capacity(n_out);
    let (mut divergences, mut depth_hits, mut accept_sum, mut leapfrogs) = (0usize, 0usize, 0.0, 0u64);

    for it in 0..config.iterations {
        let t = match config.algorithm {
            Algorithm::Nuts => sampler.nuts_transition(&mut current)?,
            Algorithm::StaticHmc => sampler.static_transition(&mut current, config.n_leapfrog)?,
        };
        leapfrogs += t.n_leapfrog;
        if it < config.warmup {
            sampler.eps = da.learn(t.accept_stat);
            if let Some(inv) = windows.learn(&current.q) {
                sampler.ham.inv_metric = inv;
                sampler.init_stepsize(&current)?;
                da.restart(sampler.eps);
            }
            if it + 1 == config.warmup {
                sampler.eps = da.final_stepsize();
            }
        } else {
            divergences += usize::from(t.divergent);
            depth_hits += usize::from(t.depth >= config.max_tree_depth);
            accept_sum += t.accept_stat;
            target.constrain(&current.q, &mut buf);
            draws.extend_from_slice(&buf);
        }
    }
    let kept = config.draws_per_chain().max(1) as f64;
    Ok(ChainOutput {
        draws,
        stats: ChainStats {
            chain,
            step_size: sampler.eps,
            inv_metric: sampler.ham.inv_metric,
            divergences,
            max_depth_hits: depth_hits,
            mean_accept: accept_sum / kept,
            leapfrog_steps: leapfrogs,
        },
    })
}

/// Run all chains (in parallel when threads are available) and merge them in chain order.
pub fn sample<D: LogDensity>(target: &D, config: &SamplerConfig) -> Result<PosteriorDraws, InferenceError> {
    config.validate()?;
    let outputs: Vec<Result<ChainOutput, InferenceError>> =
        (0..config.chains).into_par_iter().map(|c| run_chain(target, config, c)).collect();
    let mut values = Vec::new();
    let mut chain_stats = Vec::with_capacity(config.chains);
    for out in outputs {
        let out = out?;
        values.extend(out.draws);
        chain_stats.push(out.stats);
    }
    let mut warnings = Vec::new();
    let total = config.chains * config.draws_per_chain();
    let divergences: usize = chain_stats.iter().map(|s| s.divergences).sum();
    let rate = divergences as f64 / total as f64;
    if rate > config.max_divergence_rate {
        let msg = format!("{divergences} of {total} post-warmup transitions diverged ({:.2}%)", 100.0 * rate);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let depth_hits: usize = chain_stats.iter().map(|s| s.max_depth_hits).sum();
    if depth_hits > 0 && config.algorithm == Algorithm::Nuts {
        let msg = format!("{depth_hits} of {total} transitions hit the maximum tree depth {}", config.max_tree_depth);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(PosteriorDraws {
        params: target.output_names(),
        n_chains: config.chains,
        draws_per_chain: config.draws_per_chain(),
        values,
        chain_stats,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent normals with given means and scales.
    struct Gaussian {
        mean: Vec<f64>,
        sd: Vec<f64>,
    }

    impl LogDensity for Gaussian {
        fn dim(&self) -> usize {
            self.mean.len()
        }
        fn logp_grad(&self, q: &[f64], g: &mut [f64]) -> f64 {
            let mut lp = 0.0;
            for i in 0..q.len() {
                let z = (q[i] - self.mean[i]) / self.sd[i];
                lp -= 0.5 * z * z;
                g[i] = -z / self.sd[i];
            }
            lp
        }
        fn output_names(&self) -> Vec<ParamName> {
            (0..self.dim()).map(|i| ParamName { name: format!("x{i}"), kind: ParamKind::Fixed }).collect()
        }
        fn constrain(&self, q: &[f64], out: &mut Vec<f64>) {
            out.clear();
            out.extend_from_slice(q);
        }
    }

    fn moments(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
    }

    #[test]
    fn recovers_badly_scaled_gaussian() {
        let target = Gaussian { mean: vec![1.0, -3.0, 0.0], sd: vec![0.01, 1.0, 20.0] };
        let cfg = SamplerConfig { chains: 2, iterations: 2000, warmup: 1000, seed: 3, ..Default::default() };
        let draws = sample(&target, &cfg).unwrap();
        assert_eq!(draws.total_draws(), 2000);
        for i in 0..3 {
            let (m, s) = moments(&draws.pooled(i));
            assert!((m - target.mean[i]).abs() < 0.15 * target.sd[i], "mean {i}: {m}");
            assert!((s / target.sd[i] - 1.0).abs() < 0.15, "sd {i}: {s}");
        }
        // Adapted metric tracks the scales.
        let inv = &draws.chain_stats[0].inv_metric;
        assert!(inv[2] / inv[0] > 1e4);
    }

    #[test]
    fn static_fallback_and_determinism() {
        let target = Gaussian { mean: vec![0.5, 0.5], sd: vec![1.0, 2.0] };
        let cfg = SamplerConfig {
            chains: 2,
            iterations: 1500,
            warmup: 500,
            algorithm: Algorithm::StaticHmc,
            n_leapfrog: 8,
            seed: 9,
            ..Default::default()
        };
        let a = sample(&target, &cfg).unwrap();
        let (m, _) = moments(&a.pooled(1));
        assert!((m - 0.5).abs() < 0.4);
        assert_eq!(a, sample(&target, &cfg).unwrap());
    }

    #[test]
    fn windows_cover_warmup() {
        let mut w = MetricWindows::new(1000, 1);
        let mut ends = Vec::new();
        for i in 0..1000 {
            if w.learn(&[i as f64]).is_some() {
                ends.push(i);
            }
        }
        assert_eq!(ends, vec![99, 149, 249, 449, 949]);
        let mut short = MetricWindows::new(100, 1);
        assert_eq!((short.init_buffer, short.term_buffer, short.window_size), (15, 10, 75));
        assert!((0..100).filter_map(|i| short.learn(&[i as f64])).count() >= 1);
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig { warmup: 4000, ..Default::default() }.validate().is_err());
        assert!(SamplerConfig { target_accept: 1.0, ..Default::default() }.validate().is_err());
        assert_eq!(SamplerConfig::default().draws_per_chain() * 6, 18_000);
        assert_eq!(SamplerConfig::for_experiment(Experiment::E2b).target_accept, 0.999);
    }
}
