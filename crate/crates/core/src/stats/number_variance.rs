use super::coe::CoeNumberVariance;
use super::{log_grid, StatCurve, UnfoldedSpectrum};
use crate::error::{KicError, Result};

/// Default number of deterministic window offsets per level.
pub const OFFSETS_PER_LEVEL: usize = 4;

/// Grid points per decade of the default `Sigma^2` abscissa.
pub const GRID_POINTS_PER_DECADE: usize = 40;

/// Logarithmic `s` grid from 0.1 to `smax_frac * N`.
pub fn default_sigma2_grid(dim: usize, smax_frac: f64) -> Result<Vec<f64>> {
    log_grid(0.1, smax_frac * dim as f64, GRID_POINTS_PER_DECADE)
}

fn count_below(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|&v| v < x)
}

/// Levels in the circular window `[start, start + len)`, `start` in `[0, N)`.
fn window_count(sorted: &[f64], circumference: f64, start: f64, len: f64) -> usize {
    let end = start + len;
    if end <= circumference {
        count_below(sorted, end) - count_below(sorted, start)
    } else {
        let tail = sorted.len() - count_below(sorted, start);
        let wrapped_end = end - circumference;
        if wrapped_end >= start {
            // window covers the whole circle
            sorted.len()
        } else {
            tail + count_below(sorted, wrapped_end)
        }
    }
}

/// Empirical `Sigma^2(s)`: population variance of the level count over
/// `offsets` windows of length `s` starting at `j N / offsets`.
pub fn number_variance_empirical(u: &UnfoldedSpectrum, s_grid: &[f64], offsets: usize) -> Result<StatCurve> {
    let n = u.dim();
    if n == 0 || offsets == 0 {
        return Err(KicError::invalid(
            "number variance needs levels and at least one offset",
        ));
    }
    let circumference = n as f64;
    if s_grid.iter().any(|&s| !(0.0..=circumference).contains(&s)) {
        return Err(KicError::invalid(format!("s grid must lie within [0, N={n}]")));
    }
    let starts: Vec<f64> = (0..offsets)
        .map(|j| j as f64 * circumference / offsets as f64)
        .collect();
    let values = s_grid
        .iter()
        .map(|&s| {
            let counts: Vec<f64> = starts
                .iter()
                .map(|&x| window_count(&u.s_values, circumference, x, s) as f64)
                .collect();
            let mean = counts.iter().sum::<f64>() / offsets as f64;
            counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / offsets as f64
        })
        .collect();
    StatCurve::new(format!("Sigma2 source={}", u.source), s_grid.to_vec(), values)
}

/// Finite-`N` COE number variance on a grid.
pub fn number_variance_reference(dim: usize, s_grid: &[f64]) -> Result<Vec<f64>> {
    let nv = CoeNumberVariance::with_default_terms(dim)?;
    Ok(s_grid.iter().map(|&s| nv.eval(s)).collect())
}
