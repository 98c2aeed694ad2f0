//! Posterior comparison: gridded reference densities, kernel-density KL
//! divergence, weighted summaries, replicated studies and extremal
//! coefficient curves.

mod extremal;
mod study;

pub use extremal::{extremal_curve, station_offsets, ExtremalCurve, ExtremalPoint};
pub use study::{run_study, MethodOutcome, StudyConfig, StudyResult, TrialRecord};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::samplers::WeightedSample;

/// A density tabulated on the uniform grid lo, lo + step, ….
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityTable {
    pub lo: f64,
    pub step: f64,
    pub density: Vec<f64>,
}

fn trapezoid(step: f64, v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let inner: f64 = v[1..v.len() - 1].iter().sum();
    step * (inner + 0.5 * (v[0] + v[v.len() - 1]))
}

impl DensityTable {
    /// Normalizes exp(log_density) by the trapezoid rule.
    pub fn from_log_density(lo: f64, step: f64, log_density: &[f64]) -> Result<Self> {
        let top = log_density
            .iter()
            .copied()
            .filter(|v| !v.is_nan())
            .fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(Error::InvalidInput("log density is nowhere finite".into()));
        }
        let raw: Vec<f64> = log_density
            .iter()
            .map(|v| if v.is_nan() { 0.0 } else { (v - top).exp() })
            .collect();
        Self::from_unnormalized(lo, step, raw)
    }

    pub fn from_unnormalized(lo: f64, step: f64, density: Vec<f64>) -> Result<Self> {
        if density.len() < 2 || !(step > 0.0) {
            return Err(Error::InvalidInput("density table needs ≥ 2 points and a positive step".into()));
        }
        let z = trapezoid(step, &density);
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::InvalidInput("density does not integrate to a positive number".into()));
        }
        Ok(DensityTable {
            lo,
            step,
            density: density.into_iter().map(|d| d / z).collect(),
        })
    }

    /// Tabulates `f` on `points` evenly spaced points spanning [lo, hi].
    pub fn from_fn(lo: f64, hi: f64, points: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if points < 2 || !(hi > lo) {
            return Err(Error::InvalidInput("invalid grid".into()));
        }
        let step = (hi - lo) / (points - 1) as f64;
        Self::from_unnormalized(lo, step, (0..points).map(|i| f(lo + i as f64 * step)).collect())
    }

    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }

    pub fn integral(&self) -> f64 {
        trapezoid(self.step, &self.density)
    }

    pub fn mean(&self) -> f64 {
        let v: Vec<f64> = (0..self.len()).map(|i| self.x(i) * self.density[i]).collect();
        trapezoid(self.step, &v)
    }

    pub fn sd(&self) -> f64 {
        let m = self.mean();
        let v: Vec<f64> = (0..self.len())
            .map(|i| (self.x(i) - m).powi(2) * self.density[i])
            .collect();
        trapezoid(self.step, &v).sqrt()
    }

    pub fn mode(&self) -> f64 {
        let i = self
            .density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i);
        self.x(i)
    }
}

/// Floor applied to the kernel density before taking logs.
pub const KDE_FLOOR: f64 = 1e-12;

/// Weighted Gaussian kernel density estimate of one component on the grid
/// of `grid`, with Silverman's bandwidth 0.9·min(sd, IQR/1.34)·ESS^{−1/5}.
pub fn kde_on_grid(grid: &DensityTable, values: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    let w: Vec<f64> = weights.iter().map(|v| v / total).collect();
    let mean: f64 = values.iter().zip(&w).map(|(x, w)| x * w).sum();
    let var: f64 = values.iter().zip(&w).map(|(x, w)| w * (x - mean).powi(2)).sum();
    let sd = var.sqrt();
    if !(sd > 0.0) {
        return Err(Error::InvalidInput("sample has zero variance".into()));
    }
    let iqr = weighted_quantile(values, &w, 0.75) - weighted_quantile(values, &w, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let ess = 1.0 / w.iter().map(|v| v * v).sum::<f64>();
    let h = 0.9 * spread * ess.powf(-0.2);

    let mut dens = vec![0.0; grid.len()];
    let reach = 8.0 * h;
    let norm = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt());
    let last = grid.len() as isize - 1;
    for (x, wi) in values.iter().zip(&w) {
        if *wi == 0.0 {
            continue;
        }
        let lo = (((x - reach - grid.lo) / grid.step).ceil() as isize).max(0);
        let hi = (((x + reach - grid.lo) / grid.step).floor() as isize).min(last);
        for g in lo..=hi {
            let u = (grid.x(g as usize) - x) / h;
            dens[g as usize] += wi * norm * (-0.5 * u * u).exp();
        }
    }
    Ok(dens)
}

/// KL(reference ‖ sample) = ∫ p log(p/q̂) on the reference grid, q̂ the
/// kernel density of component `component`, floored at [`KDE_FLOOR`].
pub fn kl_divergence_1d(reference: &DensityTable, sample: &WeightedSample, component: usize) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample("KL divergence of an empty sample".into()));
    }
    if component >= sample.dim() {
        return Err(Error::Dimension {
            expected: sample.dim(),
            found: component,
        });
    }
    let q = kde_on_grid(reference, &sample.column(component), &sample.weights)?;
    let terms: Vec<f64> = reference
        .density
        .iter()
        .zip(&q)
        .map(|(&p, &qv)| if p > 0.0 { p * (p / qv.max(KDE_FLOOR)).ln() } else { 0.0 })
        .collect();
    Ok(trapezoid(reference.step, &terms).max(0.0))
}

/// Smallest value whose cumulative weight reaches `p` (weights normalized).
pub fn weighted_quantile(values: &[f64], weights: &[f64], p: f64) -> f64 {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for &i in &idx {
        acc += weights[i] / total;
        if acc >= p - 1e-12 {
            return values[i];
        }
    }
    values[*idx.last().expect("non-empty")]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub median: f64,
    pub q975: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub parameters: Vec<ParameterSummary>,
    pub n_draws: usize,
    /// 1/Σw².
    pub ess: f64,
}

impl PosteriorSummary {
    pub fn means(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.mean).collect()
    }

    pub fn sds(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.sd).collect()
    }
}

pub fn summarize(sample: &WeightedSample, names: &[String]) -> Result<PosteriorSummary> {
    if names.len() != sample.dim() {
        return Err(Error::Dimension {
            expected: sample.dim(),
            found: names.len(),
        });
    }
    let w = &sample.weights;
    let parameters = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let x = sample.column(j);
            let mean: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
            let var: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mean).powi(2)).sum();
            ParameterSummary {
                name: name.clone(),
                mean,
                sd: var.max(0.0).sqrt(),
                q025: weighted_quantile(&x, w, 0.025),
                median: weighted_quantile(&x, w, 0.5),
                q975: weighted_quantile(&x, w, 0.975),
            }
        })
        .collect();
    Ok(PosteriorSummary {
        parameters,
        n_draws: sample.len(),
        ess: sample.ess(),
    })
}

/// Effective sample size of a Markov chain by Geyer's initial positive
/// sequence estimator.
pub fn mcmc_ess(chain: &[f64]) -> f64 {
    let n = chain.len();
    if n < 4 {
        return n as f64;
    }
    let m = chain.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = chain.iter().map(|x| x - m).collect();
    let gamma0 = c.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if gamma0 == 0.0 {
        return n as f64;
    }
    let autocov = |lag: usize| c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let mut sum = 0.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = if lag == 0 { gamma0 + autocov(1) } else { autocov(lag) + autocov(lag + 1) };
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        lag += 2;
    }
    let tau = (2.0 * sum / gamma0 - 1.0).max(1e-12);
    (n as f64 / tau).min(n as f64)
}
