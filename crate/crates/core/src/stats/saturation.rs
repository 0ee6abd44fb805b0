use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::StatCurve;
use crate::error::{KicError, Result};

/// Knobs of the plateau estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationConfig {
    /// Onset is where the smoothed curve first reaches this fraction of the plateau.
    pub onset_fraction: f64,
    /// Plateau level is averaged over `s` in this range, as fractions of `N`.
    pub plateau_window: (f64, f64),
    /// Width of the centred moving average on the log grid.
    pub smoothing_points: usize,
}

impl Default for SaturationConfig {
    fn default() -> Self {
        Self {
            onset_fraction: 0.95,
            plateau_window: (0.25, 0.45),
            smoothing_points: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationEstimate {
    pub s_inf: f64,
    pub sigma2_inf: f64,
    /// `2 pi s_inf / N`.
    pub phi_inf: f64,
    pub dim: usize,
}

impl SaturationEstimate {
    pub fn onset_fraction_of_dim(&self) -> f64 {
        self.s_inf / self.dim as f64
    }
}

fn smooth(values: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Locates the onset `s_inf` of the `Sigma^2` plateau for a spectrum of
/// dimension `dim`.
pub fn estimate_saturation(curve: &StatCurve, dim: usize, config: &SaturationConfig) -> Result<SaturationEstimate> {
    curve.validate()?;
    if curve.is_empty() || dim == 0 {
        return Err(KicError::invalid("saturation needs a non-empty curve and N >= 1"));
    }
    let n = dim as f64;
    let (lo, hi) = config.plateau_window;
    let smoothed = smooth(&curve.values, config.smoothing_points.max(1));
    let plateau: Vec<f64> = curve
        .abscissa
        .iter()
        .zip(&smoothed)
        .filter(|(s, _)| (lo * n..=hi * n).contains(*s))
        .map(|(_, v)| *v)
        .collect();
    if plateau.is_empty() {
        return Err(KicError::Estimation(format!(
            "curve has no points in the plateau window [{lo}N, {hi}N]"
        )));
    }
    let sigma2_inf = plateau.iter().sum::<f64>() / plateau.len() as f64;
    if !(sigma2_inf > 0.0) {
        return Err(KicError::Estimation(format!(
            "plateau level {sigma2_inf} is not positive"
        )));
    }
    let threshold = config.onset_fraction * sigma2_inf;
    let index = smoothed
        .iter()
        .position(|&v| v >= threshold)
        .ok_or_else(|| KicError::Estimation("curve never reaches the onset threshold".into()))?;
    let s_inf = curve.abscissa[index];
    Ok(SaturationEstimate {
        s_inf,
        sigma2_inf,
        phi_inf: TAU * s_inf / n,
        dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::number_variance::{default_sigma2_grid, number_variance_reference};

    #[test]
    fn constant_curve_saturates_immediately() {
        let grid = default_sigma2_grid(100, 0.5).unwrap();
        let curve = StatCurve::new("c", grid.clone(), vec![1.3; grid.len()]).unwrap();
        let est = estimate_saturation(&curve, 100, &SaturationConfig::default()).unwrap();
        assert!((est.sigma2_inf - 1.3).abs() < 1e-12);
        assert_eq!(est.s_inf, grid[0]);
        assert!((est.phi_inf - TAU * grid[0] / 100.0).abs() < 1e-15);
    }

    #[test]
    fn coe_curve_saturates_late() {
        let dim = 500;
        let grid = default_sigma2_grid(dim, 0.5).unwrap();
        let curve = StatCurve::new("coe", grid.clone(), number_variance_reference(dim, &grid).unwrap()).unwrap();
        let est = estimate_saturation(&curve, dim, &SaturationConfig::default()).unwrap();
        let frac = est.onset_fraction_of_dim();
        assert!(frac > 0.15 && frac < 0.5, "onset at {frac} N");
    }

    #[test]
    fn plateau_window_must_be_sampled() {
        let curve = StatCurve::new("short", vec![1.0, 2.0, 3.0], vec![0.1, 0.2, 0.3]).unwrap();
        assert!(matches!(
            estimate_saturation(&curve, 1000, &SaturationConfig::default()),
            Err(KicError::Estimation(_))
        ));
    }
}
