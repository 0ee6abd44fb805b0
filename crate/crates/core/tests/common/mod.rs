#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::OnceLock;

use kic_core::combinatorics::relevant_sectors;
use kic_core::diag::QuasiEnergySpectrum;
use kic_core::floquet::ModelParams;
use kic_core::spectrum::{sector_spectra, Tolerances};
use kic_core::stats::StatCurve;

/// Canonical relevant-sector spectra, computed once per test binary.
pub fn canonical_spectra(sites: usize) -> &'static [QuasiEnergySpectrum] {
    static CACHE: [OnceLock<Vec<QuasiEnergySpectrum>>; 17] = [const { OnceLock::new() }; 17];
    CACHE[sites].get_or_init(|| {
        let params = ModelParams::canonical(sites);
        sector_spectra(&params, &relevant_sectors(sites), true, &Tolerances::default())
            .into_iter()
            .map(|r| r.expect("sector spectrum").0)
            .collect()
    })
}

/// COE form factor written out directly.
pub fn k2_oracle(tau: f64) -> f64 {
    if tau < 1.0 {
        2.0 * tau - tau * (2.0 * tau + 1.0).ln()
    } else {
        2.0 - tau * ((2.0 * tau + 1.0) / (2.0 * tau - 1.0)).ln()
    }
}

/// Finite-N COE number variance summed term by term to `M = 100 N`; the remainder is replaced by
/// its mean value `(1 + 1/N) / (2 M)` (the `sin^2` average), leaving an error
/// of order `N / (M^2 s)`.
pub fn sigma2_oracle(s: f64, n: usize) -> f64 {
    let nf = n as f64;
    let big_m = 100 * n;
    let mut total = (1.0 + 1.0 / nf) / (2.0 * big_m as f64);
    for m in 1..=big_m {
        let mf = m as f64;
        let sin = (mf * PI * s / nf).sin();
        total += sin * sin / (mf * mf) * (1.0 + 1.0 / nf) * k2_oracle(mf / nf);
    }
    2.0 * nf / (PI * PI) * total
}

/// Pointwise standard deviation over member curves.
pub fn member_std(curves: &[StatCurve]) -> Vec<f64> {
    let m = curves.len() as f64;
    (0..curves[0].len())
        .map(|i| {
            let mean = curves.iter().map(|c| c.values[i]).sum::<f64>() / m;
            (curves.iter().map(|c| (c.values[i] - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
        })
        .collect()
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// 1% critical value of the two-sample KS statistic.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
