//! Run configuration: a flat `key = value` file merged with command-line
//! overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::Statistic;
use crate::combinatorics::relevant_sectors;
use crate::error::{KicError, Result};
use crate::floquet::ModelParams;
use crate::rmt::EnsembleSpec;
use crate::spectrum::Tolerances;

/// Chains longer than this need an explicit opt-in.
pub const DESK_SCALE_MAX_SITES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectorSelection {
    AllRelevant,
    List(Vec<usize>),
}

impl SectorSelection {
    pub fn resolve(&self, sites: usize) -> Result<Vec<usize>> {
        match self {
            SectorSelection::AllRelevant => {
                let ks = relevant_sectors(sites);
                if ks.is_empty() {
                    return Err(KicError::invalid(format!("L={sites} has no non-special sectors")));
                }
                Ok(ks)
            }
            SectorSelection::List(ks) => {
                if ks.is_empty() {
                    return Err(KicError::invalid("no sectors requested"));
                }
                if let Some(bad) = ks.iter().find(|&&k| k >= sites) {
                    return Err(KicError::invalid(format!("sector k={bad} outside 0..{sites}")));
                }
                let mut ks = ks.clone();
                ks.sort_unstable();
                ks.dedup();
                Ok(ks)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelParams,
    pub sectors: SectorSelection,
    pub statistics: Vec<Statistic>,
    pub symmetrized: bool,
    /// Optional equal-count COE reference run alongside the statistics.
    pub baseline: Option<EnsembleSpec>,
    pub out_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub window_kicks: Option<usize>,
    pub smax_frac: f64,
    pub force: bool,
    pub allow_large: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::canonical(10),
            sectors: SectorSelection::AllRelevant,
            statistics: Statistic::ALL.to_vec(),
            symmetrized: true,
            baseline: None,
            out_dir: PathBuf::from("kic-out"),
            cache_dir: None,
            seed: 0,
            tolerances: Tolerances::default(),
            window_kicks: None,
            smax_frac: 0.5,
            force: false,
            allow_large: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.sectors.resolve(self.model.sites)?;
        if self.model.sites > DESK_SCALE_MAX_SITES && !self.allow_large {
            return Err(KicError::invalid(format!(
                "L={} exceeds the desk-scale limit of {DESK_SCALE_MAX_SITES}; pass --yes-i-have-time",
                self.model.sites
            )));
        }
        if !(self.smax_frac > 0.0 && self.smax_frac <= 1.0) {
            return Err(KicError::invalid(format!(
                "smax_frac={} must lie in (0, 1]",
                self.smax_frac
            )));
        }
        if self.window_kicks == Some(0) {
            return Err(KicError::invalid("window_kicks must be >= 1"));
        }
        let t = &self.tolerances;
        if [t.unitarity, t.symmetry, t.residual].iter().any(|x| !(*x > 0.0)) {
            return Err(KicError::invalid("tolerances must be positive"));
        }
        Ok(())
    }

    /// Spectrum cache directory: explicit setting, else `KIC_CACHE_DIR`, else `<out>/cache`.
    pub fn resolved_cache_dir(&self) -> PathBuf {
        if let Some(dir) = &self.cache_dir {
            return dir.clone();
        }
        match std::env::var_os("KIC_CACHE_DIR") {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.out_dir.join("cache"),
        }
    }
}

/// Parses `key = value` lines; `#` and `;` start comments, `[section]`
/// headers are ignored, later keys override earlier ones.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            KicError::invalid(format!("config line {}: expected key = value, got '{raw}'", lineno + 1))
        })?;
        map.insert(key.trim().to_ascii_lowercase(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| KicError::invalid(format!("config key '{key}': cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(KicError::invalid(format!(
            "config key '{key}': '{value}' is not a boolean"
        ))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_statistics(value: &str) -> Result<Vec<Statistic>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

impl RunConfig {
    /// Applies the keys of a parsed config file.
    /// The `paper` preset is applied first so explicit `J`/`b` keys win.
    pub fn apply_key_values(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        if let Some(value) = map.get("paper") {
            if parse_bool("paper", value)? {
                let sites = self.model.sites;
                self.model = ModelParams {
                    sites,
                    ..ModelParams::canonical(sites)
                };
            }
        }
        for (key, value) in map {
            match key.as_str() {
                "l" => self.model.sites = parse_value(key, value)?,
                "j" => self.model.coupling = parse_value(key, value)?,
                "bx" => self.model.b[0] = parse_value(key, value)?,
                "by" => self.model.b[1] = parse_value(key, value)?,
                "bz" => self.model.b[2] = parse_value(key, value)?,
                "paper" => {}
                "k" | "sectors" => {
                    self.sectors = if value.eq_ignore_ascii_case("all-relevant") {
                        SectorSelection::AllRelevant
                    } else {
                        SectorSelection::List(parse_list(key, value)?)
                    }
                }
                "statistics" => self.statistics = parse_statistics(value)?,
                "symmetrized" => self.symmetrized = parse_bool(key, value)?,
                "out" => self.out_dir = PathBuf::from(value),
                "cache_dir" => self.cache_dir = Some(PathBuf::from(value)),
                "seed" => self.seed = parse_value(key, value)?,
                "tol_unitarity" => self.tolerances.unitarity = parse_value(key, value)?,
                "tol_symmetry" => self.tolerances.symmetry = parse_value(key, value)?,
                "tol_residual" => self.tolerances.residual = parse_value(key, value)?,
                "window_kicks" => self.window_kicks = Some(parse_value(key, value)?),
                "smax_frac" => self.smax_frac = parse_value(key, value)?,
                "force" => self.force = parse_bool(key, value)?,
                "yes_i_have_time" => self.allow_large = parse_bool(key, value)?,
                other => return Err(KicError::invalid(format!("unknown config key '{other}'"))),
            }
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| KicError::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_key_values(&parse_key_values(&text)?)?;
        Ok(cfg)
    }
}
