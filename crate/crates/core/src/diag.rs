//! Quasi-energies of sector operators.

use std::f64::consts::TAU;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{KicError, Result};
use crate::floquet::{ModelParams, SectorOperator};

/// Default bound on `max_n ||U v_n - lambda_n v_n||`.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;

/// Allowed deviation of `|lambda|` from one.
pub const UNIMODULAR_TOL: f64 = 1e-8;

/// Sorted eigenphases `phi_n` in `[0, 2 pi)`, eigenvalues being `exp(-i phi_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiEnergySpectrum {
    /// Momentum for physical sectors, member index for ensemble draws.
    pub k: usize,
    pub phases: Vec<f64>,
    pub params: Option<ModelParams>,
    pub residual: f64,
}

impl QuasiEnergySpectrum {
    /// A spectrum from raw phases, reduced into `[0, 2 pi)` and sorted.
    pub fn from_phases(k: usize, phases: impl IntoIterator<Item = f64>) -> Self {
        let mut phases: Vec<f64> = phases.into_iter().map(reduce_phase).collect();
        phases.sort_by(f64::total_cmp);
        Self {
            k,
            phases,
            params: None,
            residual: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }
}

/// Maps an angle into `[0, 2 pi)`; values that round onto `2 pi` go to 0.
pub fn reduce_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(TAU);
    if p >= TAU {
        p = 0.0;
    }
    p
}

/// `phi = -arg(lambda)` in `[0, 2 pi)`.
pub fn eigenphase(lambda: C64) -> f64 {
    let mut phi = -lambda.arg();
    if phi < 0.0 {
        phi += TAU;
    }
    if phi >= TAU {
        phi = 0.0;
    }
    phi
}

/// Eigenphases of a dense unitary matrix with residual validation.
///
/// Returns the sorted phases and the worst residual `||U v - lambda v||`
/// over unit eigenvectors.
pub fn unitary_eigenphases(matrix: &Mat<C64>, tol: f64) -> Result<(Vec<f64>, f64)> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(KicError::invalid("eigenphases need a square matrix"));
    }
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let evd = matrix
        .eigen()
        .map_err(|e| KicError::numerical(format!("eigendecomposition failed: {e:?}")))?;
    let values: Vec<C64> = evd.S().column_vector().iter().copied().collect();
    let vectors = evd.U();

    if let Some(bad) = values.iter().find(|l| (l.norm() - 1.0).abs() > UNIMODULAR_TOL) {
        return Err(KicError::numerical(format!(
            "eigenvalue {bad} is not unimodular (|lambda| = {})",
            bad.norm()
        )));
    }

    let image = matrix * vectors;
    let mut worst: f64 = 0.0;
    for (col, &lambda) in values.iter().enumerate() {
        let mut norm_v = 0.0;
        let mut norm_r = 0.0;
        for row in 0..n {
            let v = vectors[(row, col)];
            norm_v += v.norm_sqr();
            norm_r += (image[(row, col)] - lambda * v).norm_sqr();
        }
        worst = worst.max((norm_r / norm_v).sqrt());
    }
    if !(worst <= tol) {
        return Err(KicError::Residual { worst, tol });
    }

    let mut phases: Vec<f64> = values.into_iter().map(eigenphase).collect();
    phases.sort_by(f64::total_cmp);
    Ok((phases, worst))
}

/// Quasi-energies of a sector operator.
pub fn eigenphases(op: &SectorOperator, tol: f64) -> Result<QuasiEnergySpectrum> {
    let (phases, residual) = unitary_eigenphases(&op.matrix, tol)?;
    Ok(QuasiEnergySpectrum {
        k: op.k,
        phases,
        params: Some(op.params),
        residual,
    })
}

/// `Tr U^t = sum_n exp(-i phi_n t)`.
pub fn trace_power(spectrum: &QuasiEnergySpectrum, t: u64) -> C64 {
    spectrum
        .phases
        .iter()
        .map(|&phi| C64::from_polar(1.0, -(phi * t as f64).rem_euclid(TAU)))
        .sum()
}
