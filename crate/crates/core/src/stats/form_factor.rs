use super::coe::{coe_k2_finite, coe_k2_first_kick};
use super::StatCurve;
use crate::diag::{trace_power, QuasiEnergySpectrum};
use crate::error::{KicError, Result};

/// `K2(t / tau_H) = |Tr U^t|^2 / N` at integer times, `tau_H = N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormFactorSeries {
    pub t_values: Vec<u64>,
    pub k2_values: Vec<f64>,
    pub dim: usize,
    pub windowed: bool,
}

impl FormFactorSeries {
    pub fn heisenberg_time(&self) -> f64 {
        self.dim as f64
    }
}

pub fn k2_at(spectrum: &QuasiEnergySpectrum, t: u64) -> f64 {
    trace_power(spectrum, t).norm_sqr() / spectrum.dim() as f64
}

/// Form factor for `t = 1 ..= t_max`.
pub fn form_factor(spectrum: &QuasiEnergySpectrum, t_max: u64) -> Result<FormFactorSeries> {
    if t_max == 0 {
        return Err(KicError::invalid("form factor needs t_max >= 1"));
    }
    if spectrum.dim() == 0 {
        return Err(KicError::invalid("form factor of an empty spectrum"));
    }
    let t_values: Vec<u64> = (1..=t_max).collect();
    let k2_values = t_values.iter().map(|&t| k2_at(spectrum, t)).collect();
    Ok(FormFactorSeries {
        t_values,
        k2_values,
        dim: spectrum.dim(),
        windowed: false,
    })
}

/// Default smoothing window, `tau_H / 25` kicks rounded.
pub fn default_window(dim: usize) -> usize {
    ((dim as f64 / 25.0).round() as usize).max(1)
}

/// Averages over consecutive non-overlapping blocks of `window` kicks; a
/// trailing partial block is dropped. Abscissa is the block-centre `tau`,
/// reference the block mean of the finite-`N` COE form factor.
pub fn windowed_form_factor(series: &FormFactorSeries, window: usize) -> Result<StatCurve> {
    if window == 0 {
        return Err(KicError::invalid("window must be >= 1"));
    }
    if window > series.t_values.len() {
        return Err(KicError::invalid(format!(
            "window of {window} kicks exceeds the series length {}",
            series.t_values.len()
        )));
    }
    let tau_h = series.heisenberg_time();
    let blocks = series.t_values.len() / window;
    let mut abscissa = Vec::with_capacity(blocks);
    let mut values = Vec::with_capacity(blocks);
    let mut reference = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let range = b * window..(b + 1) * window;
        let ts = &series.t_values[range.clone()];
        let mean_t = ts.iter().map(|&t| t as f64).sum::<f64>() / window as f64;
        abscissa.push(mean_t / tau_h);
        values.push(series.k2_values[range].iter().sum::<f64>() / window as f64);
        reference.push(
            ts.iter()
                .map(|&t| coe_k2_finite(t as f64 / tau_h, series.dim))
                .sum::<f64>()
                / window as f64,
        );
    }
    StatCurve::new(format!("K2 window={window}"), abscissa, values)?.with_reference(reference)
}

/// Averages over bins of fixed width in `tau = t / N`, so that series of
/// slightly different dimension share one abscissa. Bin `i` covers
/// `[i w, (i + 1) w)` and only complete bins below `tau_max` are kept.
pub fn tau_binned_form_factor(series: &FormFactorSeries, bin_width: f64, tau_max: f64) -> Result<StatCurve> {
    let tau_h = series.heisenberg_time();
    if !(bin_width > 0.0) || bin_width * tau_h < 1.0 {
        return Err(KicError::invalid(format!(
            "tau bin width {bin_width} holds less than one kick for N={}",
            series.dim
        )));
    }
    let bins = (tau_max / bin_width + 1e-9).floor() as usize;
    let last_t = *series.t_values.last().unwrap_or(&0) as f64;
    if bins == 0 || last_t < (tau_max * tau_h).floor() - 1.0 {
        return Err(KicError::invalid(format!(
            "series up to t={last_t} does not cover tau_max={tau_max}"
        )));
    }
    let mut sums = vec![(0.0, 0.0, 0usize); bins];
    for (&t, &k2) in series.t_values.iter().zip(&series.k2_values) {
        let tau = t as f64 / tau_h;
        let bin = (tau / bin_width).floor() as usize;
        if bin < bins {
            sums[bin].0 += k2;
            sums[bin].1 += coe_k2_finite(tau, series.dim);
            sums[bin].2 += 1;
        }
    }
    if sums.iter().any(|s| s.2 == 0) {
        return Err(KicError::invalid("a tau bin received no kicks"));
    }
    let abscissa = (0..bins).map(|i| (i as f64 + 0.5) * bin_width).collect();
    let values = sums.iter().map(|s| s.0 / s.2 as f64).collect();
    let reference = sums.iter().map(|s| s.1 / s.2 as f64).collect();
    StatCurve::new(format!("K2 tau-bin={bin_width}"), abscissa, values)?.with_reference(reference)
}

/// Deviation of the sector-mean `K2` at one time from its COE value, in units
/// of the expected fluctuation of that mean. Each sector contributes mean
/// `2/N_i` and standard deviation `2/N_i`; negative means undershoot.
pub fn k2_deviation_sigmas(k2_values: &[f64], dims: &[usize]) -> Result<f64> {
    if k2_values.is_empty() {
        return Err(KicError::invalid("k2 deviation needs at least one sector"));
    }
    if k2_values.len() != dims.len() || dims.contains(&0) {
        return Err(KicError::invalid("each sector needs a positive dimension"));
    }
    let refs: Vec<f64> = dims.iter().map(|&n| coe_k2_first_kick(n)).collect();
    k2_deviation_sigmas_with_reference(k2_values, &refs)
}

/// As [`k2_deviation_sigmas`] with explicit per-sector COE means; each
/// sector's standard deviation is taken equal to its mean, as for an
/// exponentially distributed `K2`.
pub fn k2_deviation_sigmas_with_reference(k2_values: &[f64], refs: &[f64]) -> Result<f64> {
    if k2_values.is_empty() || k2_values.len() != refs.len() {
        return Err(KicError::invalid("k2 deviation needs one reference per sector"));
    }
    if refs.iter().any(|&r| !(r > 0.0)) {
        return Err(KicError::invalid("COE reference values must be positive"));
    }
    let m = k2_values.len() as f64;
    let mean_k2 = k2_values.iter().sum::<f64>() / m;
    let mean_ref = refs.iter().sum::<f64>() / m;
    let std_of_mean = refs.iter().map(|r| r * r).sum::<f64>().sqrt() / m;
    Ok((mean_k2 - mean_ref) / std_of_mean)
}
