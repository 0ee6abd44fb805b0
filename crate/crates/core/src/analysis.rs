//! Runs the statistics on a set of spectra (momentum sectors or ensemble
//! members) and averages them with equal weights.

use serde::{Deserialize, Serialize};

use crate::diag::QuasiEnergySpectrum;
use crate::error::{KicError, Result};
use crate::stats::form_factor::{form_factor, k2_at, tau_binned_form_factor};
use crate::stats::number_variance::{
    default_sigma2_grid, number_variance_empirical, number_variance_reference, OFFSETS_PER_LEVEL,
};
use crate::stats::{
    average_curves, coe_k2_finite, estimate_saturation, k2_deviation_sigmas, k2_deviation_sigmas_with_reference,
    linear_grid, sigma_w, spacing_cdf, unfold, SaturationConfig, SaturationEstimate, StatCurve,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Spacing,
    FormFactor,
    NumberVariance,
    Saturation,
    K2Deviation,
}

impl Statistic {
    pub const ALL: [Statistic; 5] = [
        Statistic::Spacing,
        Statistic::FormFactor,
        Statistic::NumberVariance,
        Statistic::Saturation,
        Statistic::K2Deviation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Spacing => "spacing",
            Statistic::FormFactor => "form_factor",
            Statistic::NumberVariance => "number_variance",
            Statistic::Saturation => "saturation",
            Statistic::K2Deviation => "k2_deviation",
        }
    }
}

impl std::str::FromStr for Statistic {
    type Err = KicError;

    fn from_str(s: &str) -> Result<Self> {
        Statistic::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| KicError::invalid(format!("unknown statistic '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub statistics: Vec<Statistic>,
    /// Abscissa of `W(s)`.
    pub spacing_grid: Vec<f64>,
    /// Upper end of the `Sigma^2` grid as a fraction of the smallest `N`.
    pub smax_frac: f64,
    pub offsets_per_level: usize,
    /// Width of the `tau` bins used to smooth `K2`; widened to two kicks of
    /// the smallest spectrum so every bin, including the first, is populated.
    pub tau_bin_width: f64,
    pub tau_max: f64,
    /// `K2(t / tau_H)` is scored for `t = 1 ..= short_times`.
    pub short_times: u64,
    pub saturation: SaturationConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            statistics: Statistic::ALL.to_vec(),
            spacing_grid: linear_grid(0.0, 4.0, 201),
            smax_frac: 0.5,
            offsets_per_level: OFFSETS_PER_LEVEL,
            tau_bin_width: 1.0 / 25.0,
            tau_max: 2.5,
            short_times: 4,
            saturation: SaturationConfig::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn wants(&self, stat: Statistic) -> bool {
        self.statistics.contains(&stat)
    }
}

/// Per-item curves and their equal-weight average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    pub per_item: Vec<StatCurve>,
    pub averaged: StatCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortTimeFormFactor {
    pub times: Vec<u64>,
    /// `per_item[i][j]` is `K2(times[j] / N_i)` of item `i`.
    pub per_item: Vec<Vec<f64>>,
    /// Item-averaged `K2` per time.
    pub mean: Vec<f64>,
    /// Deviation from the COE value in fluctuation units, per time.
    pub n_sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumAnalysis {
    pub sources: Vec<usize>,
    pub dims: Vec<usize>,
    pub spacing: Option<CurveSet>,
    pub form_factor: Option<CurveSet>,
    pub number_variance: Option<CurveSet>,
    pub saturation: Option<SaturationEstimate>,
    pub short_time: Option<ShortTimeFormFactor>,
}

impl SpectrumAnalysis {
    pub fn total_levels(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn mean_dim(&self) -> f64 {
        self.total_levels() as f64 / self.dims.len() as f64
    }
}

/// Runs the requested statistics on every spectrum and averages them.
pub fn analyze_spectra(spectra: &[QuasiEnergySpectrum], config: &AnalysisConfig) -> Result<SpectrumAnalysis> {
    if spectra.is_empty() {
        return Err(KicError::invalid("analysis needs at least one spectrum"));
    }
    let dims: Vec<usize> = spectra.iter().map(|s| s.dim()).collect();
    let sources: Vec<usize> = spectra.iter().map(|s| s.k).collect();
    let min_dim = *dims.iter().min().expect("non-empty");
    if min_dim < 2 {
        return Err(KicError::invalid("every spectrum needs at least two levels"));
    }
    let unfolded = spectra.iter().map(unfold).collect::<Result<Vec<_>>>()?;

    let spacing = if config.wants(Statistic::Spacing) {
        let per_item = unfolded
            .iter()
            .map(|u| spacing_cdf(u, &config.spacing_grid))
            .collect::<Result<Vec<_>>>()?;
        let mut averaged = average_curves(&per_item, "W(s) average")?;
        let total = dims.iter().sum();
        averaged.band = Some(
            averaged
                .reference
                .as_ref()
                .expect("spacing curves carry the Wigner reference")
                .iter()
                .map(|&w| sigma_w(w, total))
                .collect::<Result<Vec<_>>>()?,
        );
        Some(CurveSet { per_item, averaged })
    } else {
        None
    };

    let form_factor_curves = if config.wants(Statistic::FormFactor) {
        let bin_width = config.tau_bin_width.max(2.0 / min_dim as f64);
        let per_item = spectra
            .iter()
            .map(|spec| {
                let t_max = (config.tau_max * spec.dim() as f64).ceil() as u64 + 1;
                let series = form_factor(spec, t_max)?;
                let mut curve = tau_binned_form_factor(&series, bin_width, config.tau_max)?;
                curve.label = format!("K2 source={}", spec.k);
                Ok(curve)
            })
            .collect::<Result<Vec<_>>>()?;
        let averaged = average_curves(&per_item, "K2 average")?;
        Some(CurveSet { per_item, averaged })
    } else {
        None
    };

    let wants_saturation = config.wants(Statistic::Saturation);
    let number_variance = if config.wants(Statistic::NumberVariance) || wants_saturation {
        let grid = default_sigma2_grid(min_dim, config.smax_frac)?;
        let per_item = unfolded
            .iter()
            .map(|u| {
                let curve = number_variance_empirical(u, &grid, config.offsets_per_level * u.dim())?;
                curve.with_reference(number_variance_reference(u.dim(), &grid)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let averaged = average_curves(&per_item, "Sigma2 average")?;
        Some(CurveSet { per_item, averaged })
    } else {
        None
    };

    let saturation = if wants_saturation {
        let curves = number_variance.as_ref().expect("computed above");
        let mean_dim = (dims.iter().sum::<usize>() as f64 / dims.len() as f64).round() as usize;
        Some(estimate_saturation(&curves.averaged, mean_dim, &config.saturation)?)
    } else {
        None
    };

    let short_time = if config.wants(Statistic::K2Deviation) {
        let times: Vec<u64> = (1..=config.short_times).collect();
        let per_item: Vec<Vec<f64>> = spectra
            .iter()
            .map(|s| times.iter().map(|&t| k2_at(s, t)).collect())
            .collect();
        let m = per_item.len() as f64;
        let mean = (0..times.len())
            .map(|j| per_item.iter().map(|r| r[j]).sum::<f64>() / m)
            .collect();
        let n_sigma = (0..times.len())
            .map(|j| {
                let column: Vec<f64> = per_item.iter().map(|r| r[j]).collect();
                if times[j] == 1 {
                    k2_deviation_sigmas(&column, &dims)
                } else {
                    let refs: Vec<f64> = dims
                        .iter()
                        .map(|&n| coe_k2_finite(times[j] as f64 / n as f64, n))
                        .collect();
                    k2_deviation_sigmas_with_reference(&column, &refs)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Some(ShortTimeFormFactor {
            times,
            per_item,
            mean,
            n_sigma,
        })
    } else {
        None
    };

    Ok(SpectrumAnalysis {
        sources,
        dims,
        spacing,
        form_factor: form_factor_curves,
        number_variance: if config.wants(Statistic::NumberVariance) {
            number_variance
        } else {
            None
        },
        saturation,
        short_time,
    })
}
