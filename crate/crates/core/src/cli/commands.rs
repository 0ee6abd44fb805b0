//! The `dims`, `spectrum`, `stats`, `baseline` and `report` workflows.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::cache::{load_sector, member_cache_path, sector_cache_path, write_json, MemberCache, SpectrumCache};
use super::config::RunConfig;
use super::csv::write_curve;
use super::report::RunReport;
use crate::analysis::{analyze_spectra, AnalysisConfig, CurveSet, SpectrumAnalysis};
use crate::combinatorics::{is_special_sector, sector_dimension, state_space_size, SectorDimensionTable};
use crate::error::{KicError, Result};
use crate::floquet::MAX_FULL_MATRIX_SITES;
use crate::rmt::{ensemble_statistics, EnsembleSpec};
use crate::spectrum::{full_spectrum, phase_multiset_distance, sector_spectra, sector_spectrum};

/// Agreement required between the sector union and the full spectrum.
pub const FULL_CHECK_TOL: f64 = 1e-8;

/// A finished command: its report, where it was written, and the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub report: RunReport,
    pub report_path: PathBuf,
    pub exit_code: i32,
}

fn finish(mut report: RunReport, out_dir: &Path, first_error: Option<i32>) -> Result<Outcome> {
    let exit_code = match first_error {
        Some(code) => code,
        None if !report.invariants_hold() => 1,
        None => 0,
    };
    report.summary("exit_code", exit_code);
    let report_path = report.write(out_dir)?;
    Ok(Outcome {
        report,
        report_path,
        exit_code,
    })
}

/// Prints `k, dim, special` rows and a `total` footer equal to `d^L`.
pub fn cmd_dims(sites: usize, d: u32, ks: Option<&[usize]>, out: &mut dyn Write) -> Result<()> {
    let total = state_space_size(sites, d)?;
    let rows: Vec<(usize, u128)> = match ks {
        None => SectorDimensionTable::new(sites, d)?
            .dims
            .into_iter()
            .enumerate()
            .collect(),
        Some(ks) => {
            if let Some(bad) = ks.iter().find(|&&k| k >= sites) {
                return Err(KicError::invalid(format!("sector k={bad} outside 0..{sites}")));
            }
            ks.iter()
                .map(|&k| Ok((k, sector_dimension(sites, d, k)?)))
                .collect::<Result<_>>()?
        }
    };
    let io = |e| KicError::io("<stdout>", e);
    writeln!(out, "# L={sites} d={d}").map_err(io)?;
    writeln!(out, "k\tdim\tspecial").map_err(io)?;
    for (k, dim) in rows {
        let flag = if is_special_sector(sites, k) { "special" } else { "" };
        writeln!(out, "{k}\t{dim}\t{flag}").map_err(io)?;
    }
    writeln!(out, "total\t{total}\t").map_err(io)?;
    Ok(())
}

/// The chain is built from qubits; other local dimensions only make sense for `dims`.
pub fn check_qubits(d: u32) -> Result<()> {
    if d != 2 {
        return Err(KicError::invalid(format!(
            "the kicked Ising chain needs d=2, got d={d}"
        )));
    }
    Ok(())
}

fn fmt_float_list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(";")
}

fn fmt_list(values: &[usize]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

/// The `kic spectrum` invocation that would produce the caches `stats` needs.
pub fn spectrum_invocation(cfg: &RunConfig, ks: &[usize]) -> String {
    let m = &cfg.model;
    let mut cmd = format!(
        "kic spectrum --L {} --J {:?} --bx {:?} --by {:?} --bz {:?}",
        m.sites, m.coupling, m.b[0], m.b[1], m.b[2]
    );
    for k in ks {
        cmd.push_str(&format!(" --k {k}"));
    }
    if !cfg.symmetrized {
        cmd.push_str(" --plain");
    }
    cmd.push_str(&format!(" --out {}", cfg.out_dir.display()));
    cmd
}

#[derive(Serialize)]
struct SectorRecord {
    k: usize,
    dim: usize,
    special: bool,
    cached: bool,
    unitarity_error: Option<f64>,
    symmetry_error: Option<f64>,
    residual: Option<f64>,
}

/// Computes and caches the requested sector spectra. Sectors with a matching
/// cache are skipped unless `force` is set; a failing sector does not stop
/// the others.
pub fn cmd_spectrum(cfg: &RunConfig, full_check: bool) -> Result<Outcome> {
    cfg.validate()?;
    let params = cfg.model;
    let ks = cfg.sectors.resolve(params.sites)?;
    if full_check && params.sites > MAX_FULL_MATRIX_SITES {
        return Err(KicError::invalid(format!(
            "the full-matrix check is limited to L <= {MAX_FULL_MATRIX_SITES}"
        )));
    }
    let cache_dir = cfg.resolved_cache_dir();
    let tol = cfg.tolerances;
    let mut report = RunReport::new("spectrum", cfg);
    let mut files = Vec::new();
    let mut records = Vec::new();
    let mut todo = Vec::new();

    for &k in &ks {
        let path = sector_cache_path(&cache_dir, &params, k, cfg.symmetrized);
        match (cfg.force, load_sector(&path, &params, k, cfg.symmetrized)?) {
            (false, Some(cache)) => {
                report.cache_hits.push(k);
                records.push(SectorRecord {
                    k,
                    dim: cache.dim,
                    special: is_special_sector(params.sites, k),
                    cached: true,
                    unitarity_error: None,
                    symmetry_error: None,
                    residual: None,
                });
                files.push(path);
            }
            _ => todo.push(k),
        }
    }

    let started = Instant::now();
    let results = sector_spectra(&params, &todo, cfg.symmetrized, &tol);
    report.time("diagonalization", started);

    let mut first_error = None;
    for (&k, result) in todo.iter().zip(results) {
        match result {
            Ok((spectrum, diag)) => {
                let expected = sector_dimension(params.sites, 2, k)?;
                report.check(
                    format!("dimension k={k}"),
                    diag.dim as u128 == expected,
                    format!("{} basis vectors, formula {expected}", diag.dim),
                );
                report.check(
                    format!("unitarity k={k}"),
                    diag.unitarity_error <= tol.unitarity,
                    format!("{:.3e}", diag.unitarity_error),
                );
                if cfg.symmetrized {
                    report.check(
                        format!("symmetry k={k}"),
                        diag.symmetry_error <= tol.symmetry,
                        format!("{:.3e}", diag.symmetry_error),
                    );
                }
                report.check(
                    format!("residual k={k}"),
                    diag.residual <= tol.residual,
                    format!("{:.3e}", diag.residual),
                );
                let path = sector_cache_path(&cache_dir, &params, k, cfg.symmetrized);
                write_json(&path, &SpectrumCache::new(&params, cfg.symmetrized, &spectrum))?;
                files.push(path);
                records.push(SectorRecord {
                    k,
                    dim: diag.dim,
                    special: diag.special,
                    cached: false,
                    unitarity_error: Some(diag.unitarity_error),
                    symmetry_error: Some(diag.symmetry_error),
                    residual: Some(diag.residual),
                });
            }
            Err(e) => {
                first_error.get_or_insert(e.exit_code());
                report.errors.push(format!("k={k}: {e}"));
            }
        }
    }
    records.sort_by_key(|r| r.k);
    report.summary("sectors", &records);

    if full_check {
        let started = Instant::now();
        let mut union = Vec::new();
        for k in 0..params.sites {
            union.extend(sector_spectrum(&params, k, cfg.symmetrized, &tol)?.0.phases);
        }
        let full = full_spectrum(&params, cfg.symmetrized, &tol)?;
        let distance = phase_multiset_distance(&union, &full);
        report.check(
            "sector union equals full spectrum",
            distance <= FULL_CHECK_TOL,
            format!("max phase distance {distance:.3e} over {} levels", full.len()),
        );
        report.summary("full_check_distance", distance);
        report.time("full_check", started);
    }

    report.record_files(&cfg.out_dir, &files)?;
    finish(report, &cfg.out_dir, first_error)
}

fn analysis_config(cfg: &RunConfig, dims: &[usize]) -> AnalysisConfig {
    let mut ac = AnalysisConfig {
        statistics: cfg.statistics.clone(),
        smax_frac: cfg.smax_frac,
        ..AnalysisConfig::default()
    };
    if let Some(window) = cfg.window_kicks {
        let mean_dim = dims.iter().sum::<usize>() as f64 / dims.len() as f64;
        ac.tau_bin_width = window as f64 / mean_dim;
    }
    ac
}

/// Writes per-item and averaged curves of every computed statistic into
/// `dir`, naming items `<item>{source}`.
fn emit_curves(analysis: &SpectrumAnalysis, dir: &Path, item: &str, meta: &str) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let sets: [(&str, &Option<CurveSet>); 3] = [
        ("spacing", &analysis.spacing),
        ("form_factor", &analysis.form_factor),
        ("number_variance", &analysis.number_variance),
    ];
    for (name, set) in sets {
        let Some(set) = set else { continue };
        for (curve, source) in set.per_item.iter().zip(&analysis.sources) {
            let path = dir.join(format!("{name}_{item}{source}.csv"));
            write_curve(&path, curve, meta)?;
            files.push(path);
        }
        let path = dir.join(format!("{name}_average.csv"));
        write_curve(&path, &set.averaged, meta)?;
        files.push(path);
    }
    Ok(files)
}

/// Largest `|W - Wigner| / sigma_W` of the averaged spacing CDF for `s <= s_max`.
pub fn spacing_max_sigmas(set: &CurveSet, s_max: f64) -> f64 {
    let avg = &set.averaged;
    let (Some(reference), Some(band)) = (&avg.reference, &avg.band) else {
        return f64::NAN;
    };
    (0..avg.len())
        .filter(|&i| avg.abscissa[i] <= s_max && band[i] > 0.0)
        .map(|i| (avg.values[i] - reference[i]).abs() / band[i])
        .fold(0.0, f64::max)
}

fn summarize(analysis: &SpectrumAnalysis, report: &mut RunReport) {
    report.summary("sources", &analysis.sources);
    report.summary("dims", &analysis.dims);
    if let Some(set) = &analysis.spacing {
        report.summary("spacing_max_sigma_w_s_le_3", spacing_max_sigmas(set, 3.0));
    }
    if let Some(sat) = &analysis.saturation {
        report.summary("saturation", sat);
        report.summary("saturation_onset_fraction", sat.onset_fraction_of_dim());
    }
    if let Some(st) = &analysis.short_time {
        report.summary("k2_short_time", st);
    }
}

fn check_curves(analysis: &SpectrumAnalysis, report: &mut RunReport) {
    let sets = [&analysis.spacing, &analysis.form_factor, &analysis.number_variance];
    let all_valid = sets
        .iter()
        .filter_map(|s| s.as_ref())
        .flat_map(|s| s.per_item.iter().chain(std::iter::once(&s.averaged)))
        .all(|c| c.validate().is_ok() && c.values.iter().all(|v| v.is_finite()));
    report.check(
        "curves well formed",
        all_valid,
        "equal column lengths, increasing abscissa, finite values",
    );
    if let Some(set) = &analysis.spacing {
        let cdf_ok = set
            .per_item
            .iter()
            .all(|c| c.values.windows(2).all(|w| w[0] <= w[1]) && c.values.iter().all(|v| (0.0..=1.0).contains(v)));
        report.check("spacing CDF monotone in [0, 1]", cdf_ok, "");
    }
}

/// Reads cached sector spectra and emits statistics. Missing caches are an
/// error that names the `spectrum` invocation producing them.
pub fn cmd_stats(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let params = cfg.model;
    let ks = cfg.sectors.resolve(params.sites)?;
    let cache_dir = cfg.resolved_cache_dir();
    let mut spectra = Vec::with_capacity(ks.len());
    let mut missing = Vec::new();
    for &k in &ks {
        let path = sector_cache_path(&cache_dir, &params, k, cfg.symmetrized);
        match load_sector(&path, &params, k, cfg.symmetrized)? {
            Some(cache) => spectra.push(cache.to_spectrum()),
            None => missing.push(k),
        }
    }
    if !missing.is_empty() {
        return Err(KicError::MissingCache(format!(
            "no spectrum for L={} k={} in {}; run `{}` first",
            params.sites,
            fmt_list(&missing),
            cache_dir.display(),
            spectrum_invocation(cfg, &missing)
        )));
    }

    let mut report = RunReport::new("stats", cfg);
    for s in &spectra {
        let expected = sector_dimension(params.sites, 2, s.k)?;
        report.check(
            format!("cached dimension k={}", s.k),
            s.dim() as u128 == expected,
            format!("{} phases, formula {expected}", s.dim()),
        );
    }
    let dims: Vec<usize> = spectra.iter().map(|s| s.dim()).collect();
    let started = Instant::now();
    let analysis = analyze_spectra(&spectra, &analysis_config(cfg, &dims))?;
    report.time("analysis", started);

    let meta = format!(
        "L={}, k={}, J={:?}, b={}, symmetrized={}",
        params.sites,
        fmt_list(&ks),
        params.coupling,
        fmt_float_list(&params.b),
        cfg.symmetrized
    );
    let mut files = emit_curves(&analysis, &cfg.out_dir.join("stats"), "k", &meta)?;
    summarize(&analysis, &mut report);
    check_curves(&analysis, &mut report);

    if let Some(spec) = &cfg.baseline {
        let started = Instant::now();
        files.extend(run_baseline(spec, cfg, &mut report)?);
        report.time("baseline", started);
    }
    report.record_files(&cfg.out_dir, &files)?;
    finish(report, &cfg.out_dir, None)
}

fn run_baseline(spec: &EnsembleSpec, cfg: &RunConfig, report: &mut RunReport) -> Result<Vec<PathBuf>> {
    let dims = vec![spec.dim; spec.samples];
    let stats = ensemble_statistics(spec, &analysis_config(cfg, &dims))?;
    let dir = cfg.out_dir.join("baseline");
    let mut files = Vec::new();
    for member in &stats.spectra {
        let path = member_cache_path(&dir.join("spectra"), member.k);
        write_json(&path, &MemberCache::new(spec, member))?;
        files.push(path);
    }
    let meta = format!(
        "ensemble={}, N={}, members={}, seed={}",
        spec.ensemble, spec.dim, spec.samples, spec.seed
    );
    files.extend(emit_curves(&stats.analysis, &dir, "member", &meta)?);
    let mut sub = RunReport::new("baseline", spec);
    summarize(&stats.analysis, &mut sub);
    check_curves(&stats.analysis, &mut sub);
    report.summary("baseline", &sub.summaries);
    report.invariants.extend(sub.invariants.into_iter().map(|mut c| {
        c.name = format!("baseline: {}", c.name);
        c
    }));
    Ok(files)
}

/// The ensemble size matching the mean relevant-sector dimension of an `L`-site chain.
pub fn equal_count_dim(sites: usize) -> Result<usize> {
    let ks = crate::combinatorics::relevant_sectors(sites);
    if ks.is_empty() {
        return Err(KicError::invalid(format!("L={sites} has no non-special sectors")));
    }
    let total: u128 = ks
        .iter()
        .map(|&k| sector_dimension(sites, 2, k))
        .sum::<Result<u128>>()?;
    Ok((total as f64 / ks.len() as f64).round() as usize)
}

/// Samples the configured ensemble and emits the same artifacts as `stats`.
pub fn cmd_baseline(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg
        .baseline
        .ok_or_else(|| KicError::invalid("baseline needs an ensemble specification"))?;
    EnsembleSpec::new(spec.ensemble, spec.dim, spec.samples, spec.seed)?;
    if !(cfg.smax_frac > 0.0 && cfg.smax_frac <= 1.0) {
        return Err(KicError::invalid(format!(
            "smax_frac={} must lie in (0, 1]",
            cfg.smax_frac
        )));
    }
    let mut report = RunReport::new("baseline", cfg);
    let started = Instant::now();
    let files = run_baseline(&spec, cfg, &mut report)?;
    report.time("sampling and analysis", started);
    report.record_files(&cfg.out_dir, &files)?;
    finish(report, &cfg.out_dir, None)
}

/// Prints a digest of every report in `out_dir`, re-verifying manifests.
/// Exit code 1 if any invariant failed or any file changed since it was recorded.
pub fn cmd_report(out_dir: &Path, out: &mut dyn Write) -> Result<i32> {
    let entries = std::fs::read_dir(out_dir).map_err(|e| KicError::io(out_dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("report_") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(KicError::invalid(format!("no report_*.json in {}", out_dir.display())));
    }
    let io = |e| KicError::io("<stdout>", e);
    let mut code = 0;
    for path in paths {
        let report = RunReport::read(&path)?;
        let failed: Vec<_> = report.invariants.iter().filter(|c| !c.passed).collect();
        let tampered = report.verify_manifest(out_dir);
        writeln!(
            out,
            "{}: {} invariants ({} failed), {} files ({} changed), {} errors, {:.2}s",
            report.command,
            report.invariants.len(),
            failed.len(),
            report.manifest.len(),
            tampered.len(),
            report.errors.len(),
            report.wall_times.get("total").copied().unwrap_or(0.0)
        )
        .map_err(io)?;
        for c in &failed {
            writeln!(out, "  FAILED {}: {}", c.name, c.detail).map_err(io)?;
        }
        for t in &tampered {
            writeln!(out, "  CHANGED {t}").map_err(io)?;
        }
        for e in &report.errors {
            writeln!(out, "  ERROR {e}").map_err(io)?;
        }
        for (key, value) in &report.summaries {
            if key == "sectors" || key == "baseline" {
                continue;
            }
            writeln!(out, "  {key} = {value}").map_err(io)?;
        }
        if !failed.is_empty() || !tampered.is_empty() {
            code = 1;
        }
    }
    Ok(code)
}
