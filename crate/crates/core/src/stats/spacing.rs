use super::coe::{sigma_w, wigner_cdf};
use super::{StatCurve, UnfoldedSpectrum};
use crate::error::{KicError, Result};

/// Cumulative nearest-neighbour spacing distribution `W(s)` over the circular
/// gaps, with the Wigner surmise as reference and `sigma_W` of the surmise as
/// band.
pub fn spacing_cdf(u: &UnfoldedSpectrum, grid: &[f64]) -> Result<StatCurve> {
    let n = u.dim();
    if n < 2 {
        return Err(KicError::invalid("spacing distribution needs at least two levels"));
    }
    let mut gaps = u.circular_gaps();
    gaps.sort_by(f64::total_cmp);
    let values = grid
        .iter()
        .map(|&s| gaps.partition_point(|&g| g <= s) as f64 / n as f64)
        .collect();
    let reference: Vec<f64> = grid.iter().map(|&s| wigner_cdf(s)).collect();
    let band = reference.iter().map(|&w| sigma_w(w, n)).collect::<Result<Vec<_>>>()?;
    StatCurve::new(format!("W(s) source={}", u.source), grid.to_vec(), values)?
        .with_reference(reference)?
        .with_band(band)
}
