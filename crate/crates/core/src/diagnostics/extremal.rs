use std::io::Write;

use serde::Serialize;

use super::weighted_quantile;
use crate::error::{Error, Result};
use crate::models::smith::{extremal_coefficient, Cov2};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremalPoint {
    pub h: [f64; 2],
    pub distance: f64,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremalCurve {
    pub points: Vec<ExtremalPoint>,
    /// Draws skipped because Σ was not positive definite.
    pub skipped: usize,
}

/// Pairwise offsets t_l − t_k for all station pairs k < l.
pub fn station_offsets(coords: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for k in 0..coords.len() {
        for l in k + 1..coords.len() {
            out.push([coords[l][0] - coords[k][0], coords[l][1] - coords[k][1]]);
        }
    }
    out
}

/// δ(h) = 2Φ(a(h)/2) for each weighted Σ draw (σ₁₁, σ₁₂, σ₂₂), summarized
/// at every offset by its weighted mean and pointwise 2.5%/97.5% quantiles.
pub fn extremal_curve(sigma_draws: &[[f64; 3]], weights: &[f64], offsets: &[[f64; 2]]) -> Result<ExtremalCurve> {
    if sigma_draws.len() != weights.len() {
        return Err(Error::Dimension {
            expected: sigma_draws.len(),
            found: weights.len(),
        });
    }
    let mut kept = Vec::new();
    let mut w = Vec::new();
    for (s, &wi) in sigma_draws.iter().zip(weights) {
        if let Ok(c) = Cov2::new(s[0], s[1], s[2]) {
            kept.push(c);
            w.push(wi);
        }
    }
    let skipped = sigma_draws.len() - kept.len();
    let total: f64 = w.iter().sum();
    if kept.is_empty() || !(total > 0.0) {
        return Err(Error::EmptySample("no positive definite Σ draw with positive weight".into()));
    }
    let points = offsets
        .iter()
        .map(|&h| {
            let vals: Vec<f64> = kept.iter().map(|c| extremal_coefficient(h, c)).collect();
            ExtremalPoint {
                h,
                distance: h[0].hypot(h[1]),
                mean: vals.iter().zip(&w).map(|(v, wi)| v * wi).sum::<f64>() / total,
                lower: weighted_quantile(&vals, &w, 0.025),
                upper: weighted_quantile(&vals, &w, 0.975),
            }
        })
        .collect();
    Ok(ExtremalCurve { points, skipped })
}

impl ExtremalCurve {
    /// Columns `hx,hy,distance,mean,lower,upper`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        wtr.write_record(["hx", "hy", "distance", "mean", "lower", "upper"])
            .map_err(io)?;
        for p in &self.points {
            wtr.write_record([
                p.h[0].to_string(),
                p.h[1].to_string(),
                p.distance.to_string(),
                p.mean.to_string(),
                p.lower.to_string(),
                p.upper.to_string(),
            ])
            .map_err(io)?;
        }
        wtr.flush()?;
        Ok(())
    }
}
