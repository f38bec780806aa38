//! p_MAP: posterior density at zero relative to the density at the mode.

use super::InferenceError;

pub const MIN_DRAWS: usize = 1000;
const GRID_POINTS: usize = 512;

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Gaussian kernel density estimate with Silverman's rule-of-thumb bandwidth.
#[derive(Debug, Clone)]
pub struct Kde {
    sorted: Vec<f64>,
    bandwidth: f64,
}

impl Kde {
    pub fn new(draws: &[f64]) -> Result<Self, InferenceError> {
        if draws.iter().any(|v| !v.is_finite()) {
            return Err(InferenceError::Degenerate("draws contain non-finite values".into()));
        }
        let mut sorted = draws.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        if sorted.len() < 2 {
            return Err(InferenceError::Degenerate("need at least two draws".into()));
        }
        let mean = sorted.iter().sum::<f64>() / n;
        let sd = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
        let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        let bandwidth = 0.9 * spread * n.powf(-0.2);
        if !(bandwidth > 0.0) {
            return Err(InferenceError::Degenerate("draws have zero variance".into()));
        }
        Ok(Kde { sorted, bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Density at `x` by direct summation over draws within 8 bandwidths.
    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let lo = self.sorted.partition_point(|&v| v < x - 8.0 * h);
        let hi = self.sorted.partition_point(|&v| v <= x + 8.0 * h);
        let sum: f64 = self.sorted[lo..hi]
            .iter()
            .fold(0.0, |acc, &v| {
                let u = (x - v) / h;
                acc + (-0.5 * u * u).exp()
            });
        sum / (self.sorted.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// Location of the highest density: grid search refined by golden-section search.
    pub fn mode(&self) -> f64 {
        let h = self.bandwidth;
        let lo = self.sorted[0] - 3.0 * h;
        let hi = self.sorted[self.sorted.len() - 1] + 3.0 * h;
        let step = (hi - lo) / (GRID_POINTS - 1) as f64;
        let best = (0..GRID_POINTS)
            .map(|i| lo + step * i as f64)
            .map(|x| (x, self.density(x)))
            .fold((lo, f64::NEG_INFINITY), |acc, (x, d)| if d > acc.1 { (x, d) } else { acc });
        let (mut a, mut b) = (best.0 - step, best.0 + step);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut fc, mut fd) = (self.density(c), self.density(d));
        for _ in 0..60 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = self.density(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = self.density(d);
            }
        }
        let refined = 0.5 * (a + b);
        if self.density(refined) >= best.1 {
            refined
        } else {
            best.0
        }
    }
}

/// Ratio of the estimated density at 0 to the density at the mode, in [0, 1].
pub fn p_map(draws: &[f64]) -> Result<f64, InferenceError> {
    if draws.len() < MIN_DRAWS {
        return Err(InferenceError::InsufficientDraws(format!(
            "p_MAP needs at least {MIN_DRAWS} draws, got {}",
            draws.len()
        )));
    }
    let kde = Kde::new(draws)?;
    let at_mode = kde.density(kde.mode());
    Ok((kde.density(0.0) / at_mode).clamp(0.0, 1.0))
}
