//! Spectral statistics of unfolded quasi-energy spectra and their COE
//! references.

pub mod coe;
pub mod form_factor;
pub mod number_variance;
pub mod saturation;
pub mod spacing;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::diag::QuasiEnergySpectrum;
use crate::error::{KicError, Result};

pub use coe::{
    coe_k2, coe_k2_finite, coe_number_variance_finite, coe_sigma2_asymptotic, sigma_w, wigner_cdf, CoeNumberVariance,
};
pub use form_factor::{
    form_factor, k2_deviation_sigmas, k2_deviation_sigmas_with_reference, tau_binned_form_factor, windowed_form_factor,
    FormFactorSeries,
};
pub use number_variance::{number_variance_empirical, number_variance_reference};
pub use saturation::{estimate_saturation, SaturationConfig, SaturationEstimate};
pub use spacing::spacing_cdf;

/// A sampled function together with its optional reference curve and
/// fluctuation band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatCurve {
    pub label: String,
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
    pub reference: Option<Vec<f64>>,
    pub band: Option<Vec<f64>>,
}

impl StatCurve {
    pub fn new(label: impl Into<String>, abscissa: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let curve = Self {
            label: label.into(),
            abscissa,
            values,
            reference: None,
            band: None,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn with_reference(mut self, reference: Vec<f64>) -> Result<Self> {
        self.reference = Some(reference);
        self.validate()?;
        Ok(self)
    }

    pub fn with_band(mut self, band: Vec<f64>) -> Result<Self> {
        self.band = Some(band);
        self.validate()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.abscissa.len();
        let lengths_ok = self.values.len() == n
            && self.reference.as_ref().is_none_or(|r| r.len() == n)
            && self.band.as_ref().is_none_or(|b| b.len() == n);
        if !lengths_ok {
            return Err(KicError::invalid(format!(
                "curve '{}' has mismatched column lengths",
                self.label
            )));
        }
        if self.abscissa.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(KicError::invalid(format!(
                "curve '{}' abscissa is not strictly increasing",
                self.label
            )));
        }
        Ok(())
    }
}

/// Pointwise mean of curves sharing one abscissa; the band is the standard
/// deviation across members (zero for a single member).
pub fn average_curves(curves: &[StatCurve], label: impl Into<String>) -> Result<StatCurve> {
    let first = curves
        .first()
        .ok_or_else(|| KicError::invalid("cannot average an empty set of curves"))?;
    if curves.iter().any(|c| c.abscissa != first.abscissa) {
        return Err(KicError::invalid("averaged curves must share their abscissa"));
    }
    let m = curves.len() as f64;
    let n = first.len();
    let mean_of = |column: &dyn Fn(&StatCurve) -> Option<&Vec<f64>>| -> Option<Vec<f64>> {
        let columns: Option<Vec<&Vec<f64>>> = curves.iter().map(column).collect();
        columns.map(|cols| (0..n).map(|i| cols.iter().map(|c| c[i]).sum::<f64>() / m).collect())
    };
    let values = mean_of(&|c| Some(&c.values)).expect("values always present");
    let reference = mean_of(&|c| c.reference.as_ref());
    let band = (0..n)
        .map(|i| {
            if curves.len() < 2 {
                return 0.0;
            }
            let var = curves.iter().map(|c| (c.values[i] - values[i]).powi(2)).sum::<f64>() / (m - 1.0);
            var.sqrt()
        })
        .collect();
    let curve = StatCurve {
        label: label.into(),
        abscissa: first.abscissa.clone(),
        values,
        reference,
        band: Some(band),
    };
    curve.validate()?;
    Ok(curve)
}

/// A spectrum rescaled to unit mean spacing on a circle of circumference `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedSpectrum {
    pub s_values: Vec<f64>,
    /// Sector momentum or ensemble member index.
    pub source: usize,
}

impl UnfoldedSpectrum {
    pub fn dim(&self) -> usize {
        self.s_values.len()
    }

    /// The `N` nearest-neighbour gaps around the circle, the last one
    /// wrapping from the largest level back to the smallest.
    pub fn circular_gaps(&self) -> Vec<f64> {
        let n = self.dim();
        if n == 0 {
            return Vec::new();
        }
        let mut gaps: Vec<f64> = self.s_values.windows(2).map(|w| w[1] - w[0]).collect();
        gaps.push(self.s_values[0] + n as f64 - self.s_values[n - 1]);
        gaps
    }
}

/// `s_n = N phi_n / (2 pi)`.
pub fn unfold(spectrum: &QuasiEnergySpectrum) -> Result<UnfoldedSpectrum> {
    if spectrum.phases.is_empty() {
        return Err(KicError::invalid("cannot unfold an empty spectrum"));
    }
    let n = spectrum.dim() as f64;
    Ok(UnfoldedSpectrum {
        s_values: spectrum.phases.iter().map(|&phi| n * phi / TAU).collect(),
        source: spectrum.k,
    })
}

/// `per_decade` logarithmically spaced points from `start` up to and including `stop`.
pub fn log_grid(start: f64, stop: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop > start) || per_decade == 0 {
        return Err(KicError::invalid(format!(
            "bad log grid [{start}, {stop}] x {per_decade}"
        )));
    }
    let decades = (stop / start).log10();
    let steps = (decades * per_decade as f64).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps)
        .map(|i| start * 10f64.powf(i as f64 / per_decade as f64))
        .filter(|&s| s < stop)
        .collect();
    grid.push(stop);
    Ok(grid)
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
