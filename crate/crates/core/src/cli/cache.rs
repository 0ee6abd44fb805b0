//! On-disk spectrum cache, one JSON file per sector or ensemble member.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diag::QuasiEnergySpectrum;
use crate::error::{KicError, Result};
use crate::floquet::ModelParams;
use crate::rmt::EnsembleSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCache {
    pub schema_version: u32,
    #[serde(rename = "L")]
    pub sites: usize,
    pub k: usize,
    #[serde(rename = "J")]
    pub coupling: f64,
    pub b: [f64; 3],
    pub symmetrized: bool,
    pub dim: usize,
    pub phases: Vec<f64>,
}

impl SpectrumCache {
    pub fn new(params: &ModelParams, symmetrized: bool, spectrum: &QuasiEnergySpectrum) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            sites: params.sites,
            k: spectrum.k,
            coupling: params.coupling,
            b: params.b,
            symmetrized,
            dim: spectrum.dim(),
            phases: spectrum.phases.clone(),
        }
    }

    /// Bit-exact comparison of every key that determines the spectrum.
    pub fn matches(&self, params: &ModelParams, k: usize, symmetrized: bool) -> bool {
        self.schema_version == SCHEMA_VERSION
            && self.sites == params.sites
            && self.k == k
            && self.coupling.to_bits() == params.coupling.to_bits()
            && self.b.iter().zip(&params.b).all(|(a, b)| a.to_bits() == b.to_bits())
            && self.symmetrized == symmetrized
    }

    pub fn to_spectrum(&self) -> QuasiEnergySpectrum {
        QuasiEnergySpectrum {
            k: self.k,
            phases: self.phases.clone(),
            params: Some(ModelParams {
                coupling: self.coupling,
                b: self.b,
                sites: self.sites,
            }),
            residual: 0.0,
        }
    }
}

/// Phases of one sampled ensemble member; `member` plays the role of `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberCache {
    pub schema_version: u32,
    pub ensemble: EnsembleSpec,
    pub member: usize,
    pub dim: usize,
    pub phases: Vec<f64>,
}

impl MemberCache {
    pub fn new(spec: &EnsembleSpec, spectrum: &QuasiEnergySpectrum) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            ensemble: *spec,
            member: spectrum.k,
            dim: spectrum.dim(),
            phases: spectrum.phases.clone(),
        }
    }
}

pub fn sector_cache_path(dir: &Path, params: &ModelParams, k: usize, symmetrized: bool) -> PathBuf {
    let kind = if symmetrized { "sym" } else { "plain" };
    dir.join(format!("spectrum_L{}_k{k}_{kind}.json", params.sites))
}

pub fn member_cache_path(dir: &Path, member: usize) -> PathBuf {
    dir.join(format!("member_{member:04}.json"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| KicError::io(parent, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| KicError::Format {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| KicError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| KicError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| KicError::Format {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

/// The cached spectrum if the file exists and was written for these
/// parameters; `Ok(None)` for a missing or stale file.
pub fn load_sector(path: &Path, params: &ModelParams, k: usize, symmetrized: bool) -> Result<Option<SpectrumCache>> {
    if !path.exists() {
        return Ok(None);
    }
    let cache: SpectrumCache = read_json(path)?;
    if !cache.matches(params, k, symmetrized) {
        return Ok(None);
    }
    if cache.dim != cache.phases.len() {
        return Err(KicError::Format {
            path: path.display().to_string(),
            msg: format!("dim {} but {} phases", cache.dim, cache.phases.len()),
        });
    }
    Ok(Some(cache))
}
