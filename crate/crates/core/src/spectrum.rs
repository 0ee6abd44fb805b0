//! Sector-by-sector quasi-energy computation.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diag::{eigenphases, unitary_eigenphases, QuasiEnergySpectrum};
use crate::error::{KicError, Result};
use crate::floquet::{build_sector_basis, full_floquet_matrix, sector_floquet_with_tol, ModelParams};

/// Tolerances applied while building and diagonalizing sectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub unitarity: f64,
    pub symmetry: f64,
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitarity: 1e-10,
            symmetry: 1e-10,
            residual: 1e-10,
        }
    }
}

/// Structural checks recorded for one sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorDiagnostics {
    pub k: usize,
    pub dim: usize,
    pub special: bool,
    pub unitarity_error: f64,
    pub symmetry_error: f64,
    pub residual: f64,
}

/// Builds, checks and diagonalizes one momentum sector.
pub fn sector_spectrum(
    params: &ModelParams,
    k: usize,
    symmetrized: bool,
    tol: &Tolerances,
) -> Result<(QuasiEnergySpectrum, SectorDiagnostics)> {
    let basis = build_sector_basis(params.sites, k)?;
    let op = sector_floquet_with_tol(params, &basis, symmetrized, tol.unitarity)?;
    if symmetrized && !(op.symmetry_error <= tol.symmetry) {
        return Err(KicError::Consistency(format!(
            "symmetrized sector L={} k={k} is not complex symmetric: {:.3e}",
            params.sites, op.symmetry_error
        )));
    }
    let spectrum = eigenphases(&op, tol.residual)?;
    let diagnostics = SectorDiagnostics {
        k,
        dim: op.dim(),
        special: op.special,
        unitarity_error: op.unitarity_error,
        symmetry_error: op.symmetry_error,
        residual: spectrum.residual,
    };
    Ok((spectrum, diagnostics))
}

/// Spectra of several sectors, computed in parallel, returned in input order.
pub fn sector_spectra(
    params: &ModelParams,
    ks: &[usize],
    symmetrized: bool,
    tol: &Tolerances,
) -> Vec<Result<(QuasiEnergySpectrum, SectorDiagnostics)>> {
    ks.par_iter()
        .map(|&k| sector_spectrum(params, k, symmetrized, tol))
        .collect()
}

/// Eigenphases of the full `2^L` operator, sorted.
pub fn full_spectrum(params: &ModelParams, symmetrized: bool, tol: &Tolerances) -> Result<Vec<f64>> {
    let matrix = full_floquet_matrix(params, symmetrized)?;
    Ok(unitary_eigenphases(&matrix, tol.residual)?.0)
}

/// Largest distance between matched elements of two phase multisets on the
/// circle. Both sets are cut at the middle of the widest gap of `b` before
/// sorting, so levels straddling `0 = 2 pi` are paired correctly.
pub fn phase_multiset_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    if a.is_empty() {
        return 0.0;
    }
    let mut sorted_b = b.to_vec();
    sorted_b.sort_by(f64::total_cmp);
    let n = sorted_b.len();
    let (gap, start) = (0..n)
        .map(|i| {
            let next = if i + 1 < n { sorted_b[i + 1] } else { sorted_b[0] + TAU };
            (next - sorted_b[i], sorted_b[i])
        })
        .fold(
            (f64::NEG_INFINITY, 0.0),
            |best, cur| if cur.0 > best.0 { cur } else { best },
        );
    let cut = start + gap / 2.0;
    let unwrap = |xs: &[f64]| {
        let mut v: Vec<f64> = xs.iter().map(|&x| (x - cut).rem_euclid(TAU)).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (ua, ub) = (unwrap(a), unwrap(b));
    ua.iter()
        .zip(&ub)
        .map(|(x, y)| {
            let d = (x - y).abs();
            d.min(TAU - d)
        })
        .fold(0.0, f64::max)
}
