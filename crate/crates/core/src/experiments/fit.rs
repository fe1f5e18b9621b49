use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares fit of `log(error) = intercept + slope * log(tau)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Slopes between adjacent rows, in input order.
    pub pairwise_slopes: Vec<f64>,
    pub rows_used: usize,
    pub rows_excluded: usize,
}

impl RateFit {
    /// `exp(intercept)`, the constant `C` in `error ≈ C tau^slope`.
    pub fn constant(&self) -> f64 {
        self.intercept.exp()
    }

    pub fn predict(&self, tau: f64) -> f64 {
        self.constant() * tau.powf(self.slope)
    }
}

/// Fits a power law to `(tau, error)` rows. Rows with a non-positive or
/// non-finite error or step are excluded; at least three must remain.
pub fn rate_fit(rows: &[(f64, f64)]) -> Result<RateFit> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(t, e)| *t > 0.0 && *e > 0.0 && t.is_finite() && e.is_finite())
        .map(|(t, e)| (t.ln(), e.ln()))
        .collect();
    let excluded = rows.len() - points.len();
    if points.len() < 3 {
        return Err(Error::Domain(format!("rate fit needs at least 3 positive rows, got {}", points.len())));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("rate fit needs at least two distinct steps".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let pairwise_slopes = points.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    Ok(RateFit { slope, intercept, pairwise_slopes, rows_used: points.len(), rows_excluded: excluded })
}
