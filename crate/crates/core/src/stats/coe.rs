//! Circular Orthogonal Ensemble reference formulas.

use std::f64::consts::PI;

use crate::error::{KicError, Result};

pub const EULER_GAMMA: f64 = 0.5772156649;

/// Bound on the neglected remainder of the number-variance series.
const SERIES_TAIL_TOL: f64 = 1e-8;

/// Form factor of the infinite COE.
pub fn coe_k2(tau: f64) -> f64 {
    let tau = tau.abs();
    if tau < 1.0 {
        2.0 * tau - tau * (2.0 * tau + 1.0).ln()
    } else {
        2.0 - tau * ((2.0 * tau + 1.0) / (2.0 * tau - 1.0)).ln()
    }
}

/// Form factor with the leading `1/N` correction.
pub fn coe_k2_finite(tau: f64, dim: usize) -> f64 {
    (1.0 + 1.0 / dim as f64) * coe_k2(tau)
}

/// Mean COE form factor at one kick, `2/N` to leading order.
pub fn coe_k2_first_kick(dim: usize) -> f64 {
    2.0 / dim as f64
}

/// Large-`s` number variance of the infinite COE.
pub fn coe_sigma2_asymptotic(s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(KicError::invalid(format!(
            "asymptotic number variance needs s > 0, got {s}"
        )));
    }
    Ok(2.0 / (PI * PI) * ((2.0 * PI * s).ln() + 1.0 + EULER_GAMMA - PI * PI / 8.0))
}

/// Default truncation of the number-variance series.
pub fn default_series_terms(dim: usize) -> usize {
    10 * dim
}

/// Finite-`N` COE number variance
/// `(2N/pi^2) sum_m sin^2(m pi s / N) K2(m/N) / m^2`, with the corrected form
/// factor.
///
/// `K2` tends to `K2_inf = 1 + 1/N`, so the series is split as
/// `sum sin^2(m x) (K2 - K2_inf) / m^2 + K2_inf x (pi - x) / 2`, `x = pi s / N`,
/// the second term being the exact value of `K2_inf sum_m sin^2(m x) / m^2`.
/// Only the first, rapidly converging part is truncated; cutting the raw
/// series at `10 N` terms would bias every `s >~ 0.1` low by about
/// `1 / (10 pi^2)`. Weights are precomputed once per dimension.
#[derive(Debug, Clone)]
pub struct CoeNumberVariance {
    dim: usize,
    /// `(K2(m/N) - K2_inf) / m^2` for `m = 1..=terms`.
    weights: Vec<f64>,
}

impl CoeNumberVariance {
    pub fn new(dim: usize, max_terms: usize) -> Result<Self> {
        if dim == 0 || max_terms == 0 {
            return Err(KicError::invalid("number variance needs N >= 1 and m_max >= 1"));
        }
        let n = dim as f64;
        let prefactor = 2.0 * n / (PI * PI);
        let k2_inf = 1.0 + 1.0 / n;
        let mut weights = Vec::with_capacity(max_terms.min(1 << 24));
        for m in 1..=max_terms {
            let m_f = m as f64;
            weights.push((coe_k2_finite(m_f / n, dim) - k2_inf) / (m_f * m_f));
            // beyond tau = 1, |K2 - K2_inf| <= K2_inf / (9 tau^2), and
            // sum_{m' > m} 1/m'^4 < 1/(3 m^3)
            if m_f > n && prefactor * k2_inf * n * n / (27.0 * m_f.powi(3)) < SERIES_TAIL_TOL {
                break;
            }
        }
        Ok(Self { dim, weights })
    }

    pub fn with_default_terms(dim: usize) -> Result<Self> {
        Self::new(dim, default_series_terms(dim))
    }

    pub fn terms(&self) -> usize {
        self.weights.len()
    }

    pub fn eval(&self, s: f64) -> f64 {
        let n = self.dim as f64;
        let x = PI * s / n;
        let k2_inf = 1.0 + 1.0 / n;
        let sum: f64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let sin = ((i + 1) as f64 * x).sin();
                sin * sin * w
            })
            .sum();
        2.0 * n / (PI * PI) * (sum + k2_inf * x * (PI - x) / 2.0)
    }
}

/// One-shot evaluation of the finite-`N` COE number variance.
pub fn coe_number_variance_finite(s: f64, dim: usize, max_terms: usize) -> Result<f64> {
    if !(0.0..=dim as f64).contains(&s) {
        return Err(KicError::invalid(format!("s={s} outside [0, N={dim}]")));
    }
    Ok(CoeNumberVariance::new(dim, max_terms)?.eval(s))
}

/// Wigner surmise for the cumulative spacing distribution.
pub fn wigner_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        1.0 - (-PI * s * s / 4.0).exp()
    }
}

/// Statistical fluctuation of a cumulative probability estimated from `n` samples.
pub fn sigma_w(w: f64, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&w) || n == 0 {
        return Err(KicError::invalid(format!(
            "sigma_W needs 0 <= W <= 1 and N >= 1, got W={w}, N={n}"
        )));
    }
    Ok((w * (1.0 - w) / n as f64).sqrt())
}
