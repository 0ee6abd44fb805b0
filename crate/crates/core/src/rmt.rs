//! Circular-ensemble reference spectra.
//!
//! Haar unitaries come from the QR decomposition of a complex Ginibre matrix
//! with the diagonal of `R` rotated to the positive real axis. COE members
//! are `S = U^T U`. Every member draws from its own ChaCha stream selected by
//! `(seed, member index)`, so results do not depend on scheduling.

use faer::Mat;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze_spectra, AnalysisConfig, SpectrumAnalysis};
use crate::diag::{unitary_eigenphases, QuasiEnergySpectrum, DEFAULT_RESIDUAL_TOL};
use crate::error::{KicError, Result};
use crate::floquet::{symmetry_error, unitarity_error, DEFAULT_STRUCTURE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Ensemble {
    Coe,
    Cue,
}

impl std::str::FromStr for Ensemble {
    type Err = KicError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coe" => Ok(Ensemble::Coe),
            "cue" => Ok(Ensemble::Cue),
            other => Err(KicError::invalid(format!("unknown ensemble '{other}'"))),
        }
    }
}

impl std::fmt::Display for Ensemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Ensemble::Coe => "COE",
            Ensemble::Cue => "CUE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub ensemble: Ensemble,
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(ensemble: Ensemble, dim: usize, samples: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(KicError::invalid(format!("ensemble dimension {dim} must be >= 2")));
        }
        if samples == 0 {
            return Err(KicError::invalid("ensemble needs at least one sample"));
        }
        Ok(Self {
            ensemble,
            dim,
            samples,
            seed,
        })
    }

    /// Generator for one member.
    pub fn member_rng(&self, member: usize) -> ChaCha8Rng {
        member_rng(self.seed, member)
    }
}

pub fn member_rng(seed: u64, member: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member as u64);
    rng
}

/// Haar-distributed unitary of size `dim`.
pub fn sample_haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Mat<C64> {
    let mut draw = || -> f64 { rng.sample(StandardNormal) };
    let ginibre = Mat::from_fn(dim, dim, |_, _| C64::new(draw(), draw()));
    let qr = ginibre.qr();
    let mut q = qr.compute_Q();
    let r = qr.R();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// A COE member `U^T U`.
pub fn sample_coe<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Mat<C64> {
    let u = sample_haar_unitary(dim, rng);
    u.transpose() * &u
}

/// Unitarity (and, for COE, symmetry) checks shared with the sector operators.
pub fn validate_member(matrix: &Mat<C64>, symmetric: bool, tol: f64) -> Result<()> {
    let unitarity = unitarity_error(matrix);
    if !(unitarity <= tol) {
        return Err(KicError::numerical(format!(
            "sampled matrix not unitary: {unitarity:.3e}"
        )));
    }
    if symmetric {
        let sym = symmetry_error(matrix);
        if !(sym <= tol) {
            return Err(KicError::numerical(format!("sampled matrix not symmetric: {sym:.3e}")));
        }
    }
    Ok(())
}

/// Draws member `member` and returns its sorted eigenphases.
pub fn sample_member_spectrum(spec: &EnsembleSpec, member: usize) -> Result<QuasiEnergySpectrum> {
    let mut rng = spec.member_rng(member);
    let (matrix, symmetric) = match spec.ensemble {
        Ensemble::Coe => (sample_coe(spec.dim, &mut rng), true),
        Ensemble::Cue => (sample_haar_unitary(spec.dim, &mut rng), false),
    };
    validate_member(&matrix, symmetric, DEFAULT_STRUCTURE_TOL)?;
    let (phases, residual) = unitary_eigenphases(&matrix, DEFAULT_RESIDUAL_TOL)?;
    Ok(QuasiEnergySpectrum {
        k: member,
        phases,
        params: None,
        residual,
    })
}

/// All member spectra, sampled in parallel.
pub fn sample_spectra(spec: &EnsembleSpec) -> Result<Vec<QuasiEnergySpectrum>> {
    (0..spec.samples)
        .into_par_iter()
        .map(|m| sample_member_spectrum(spec, m))
        .collect()
}

/// Member spectra plus the statistics bundle computed on them.
#[derive(Debug, Clone)]
pub struct EnsembleStatistics {
    pub spec: EnsembleSpec,
    pub spectra: Vec<QuasiEnergySpectrum>,
    pub analysis: SpectrumAnalysis,
}

pub fn ensemble_statistics(spec: &EnsembleSpec, config: &AnalysisConfig) -> Result<EnsembleStatistics> {
    let spectra = sample_spectra(spec)?;
    let analysis = analyze_spectra(&spectra, config)?;
    Ok(EnsembleStatistics {
        spec: *spec,
        spectra,
        analysis,
    })
}
