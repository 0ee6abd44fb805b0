use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kic_core::cli::commands::{
    check_qubits, cmd_baseline, cmd_dims, cmd_report, cmd_spectrum, cmd_stats, equal_count_dim, Outcome,
};
use kic_core::cli::config::{parse_key_values, RunConfig, SectorSelection};
use kic_core::floquet::ModelParams;
use kic_core::rmt::{Ensemble, EnsembleSpec};
use kic_core::Result;

/// Kicked Ising chain quasi-energy spectra and their COE comparison.
#[derive(Parser)]
#[command(name = "kic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print momentum-sector dimensions and the total d^L.
    Dims {
        #[arg(long = "L")]
        sites: usize,
        #[arg(long, default_value_t = 2)]
        d: u32,
        /// Restrict to these momenta (repeatable).
        #[arg(long = "k")]
        k: Vec<usize>,
    },
    /// Diagonalize sectors and write one JSON cache file per sector.
    Spectrum {
        #[command(flatten)]
        run: RunArgs,
        /// Also diagonalize the full 2^L operator (L <= 10) and compare.
        #[arg(long)]
        full_check: bool,
    },
    /// Compute statistics from cached spectra and write CSV curves.
    Stats {
        #[command(flatten)]
        run: RunArgs,
        /// Also sample this many COE members of the mean sector dimension.
        #[arg(long)]
        baseline_samples: Option<usize>,
    },
    /// Sample a circular ensemble and write the same curves as `stats`.
    Baseline {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "coe")]
        ensemble: Ensemble,
        /// Matrix size [default: mean relevant-sector dimension of --L].
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 9)]
        samples: usize,
    },
    /// Summarize the reports in an output directory and re-check file hashes.
    Report {
        #[arg(long, default_value = "kic-out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Chain length [default: 10].
    #[arg(long = "L")]
    sites: Option<usize>,
    /// Local dimension; the chain requires 2.
    #[arg(long, default_value_t = 2)]
    d: u32,
    /// Ising coupling [default: 0.7].
    #[arg(long = "J", allow_negative_numbers = true)]
    coupling: Option<f64>,
    /// Field x component [default: 0.9].
    #[arg(long, allow_negative_numbers = true)]
    bx: Option<f64>,
    /// Field y component [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    by: Option<f64>,
    /// Field z component [default: 0.9].
    #[arg(long, allow_negative_numbers = true)]
    bz: Option<f64>,
    /// Momentum sector (repeatable) [default: all relevant].
    #[arg(long = "k", conflicts_with = "all_relevant")]
    k: Vec<usize>,
    /// All sectors except k = 0 and k = L/2.
    #[arg(long)]
    all_relevant: bool,
    /// Comma-separated subset of spacing,form_factor,number_variance,saturation,k2_deviation.
    #[arg(long, value_delimiter = ',')]
    statistics: Vec<String>,
    /// Use U_Ising U_kick instead of the symmetrized operator.
    #[arg(long)]
    plain: bool,
    /// Seed for sampled ensembles [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: kic-out]; caches go to <out>/cache unless KIC_CACHE_DIR is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recompute sectors even when a matching cache exists.
    #[arg(long)]
    force: bool,
    /// Canonical parameters J = 0.7, b = (0.9, 0, 0.9).
    #[arg(long)]
    paper: bool,
    /// Bound on ||U^dagger U - 1|| [default: 1e-10].
    #[arg(long)]
    tol_unitarity: Option<f64>,
    /// Bound on ||U - U^T|| [default: 1e-10].
    #[arg(long)]
    tol_symmetry: Option<f64>,
    /// Bound on the eigenvector residual [default: 1e-10].
    #[arg(long)]
    tol_residual: Option<f64>,
    /// K2 smoothing window in kicks [default: N/25].
    #[arg(long)]
    window_kicks: Option<usize>,
    /// Number-variance grid ends at this fraction of N [default: 0.5].
    #[arg(long)]
    smax_frac: Option<f64>,
    /// Allow L > 16.
    #[arg(long)]
    yes_i_have_time: bool,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig> {
        check_qubits(self.d)?;
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(sites) = self.sites {
            cfg.model.sites = sites;
        }
        if self.paper {
            cfg.model = ModelParams::canonical(cfg.model.sites);
        }
        if let Some(j) = self.coupling {
            cfg.model.coupling = j;
        }
        for (slot, value) in cfg.model.b.iter_mut().zip([self.bx, self.by, self.bz]) {
            if let Some(v) = value {
                *slot = v;
            }
        }
        if self.all_relevant {
            cfg.sectors = SectorSelection::AllRelevant;
        } else if !self.k.is_empty() {
            cfg.sectors = SectorSelection::List(self.k);
        }
        if !self.statistics.is_empty() {
            let joined = self.statistics.join(",");
            cfg.apply_key_values(&parse_key_values(&format!("statistics = {joined}"))?)?;
        }
        if self.plain {
            cfg.symmetrized = false;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = self.out {
            cfg.out_dir = out;
        }
        cfg.force |= self.force;
        cfg.allow_large |= self.yes_i_have_time;
        if let Some(t) = self.tol_unitarity {
            cfg.tolerances.unitarity = t;
        }
        if let Some(t) = self.tol_symmetry {
            cfg.tolerances.symmetry = t;
        }
        if let Some(t) = self.tol_residual {
            cfg.tolerances.residual = t;
        }
        if let Some(w) = self.window_kicks {
            cfg.window_kicks = Some(w);
        }
        if let Some(f) = self.smax_frac {
            cfg.smax_frac = f;
        }
        Ok(cfg)
    }
}

fn report_outcome(outcome: &Outcome) -> i32 {
    let r = &outcome.report;
    if !r.cache_hits.is_empty() {
        let hits: Vec<String> = r.cache_hits.iter().map(|k| k.to_string()).collect();
        eprintln!("cache hits for k = {}", hits.join(", "));
    }
    for e in &r.errors {
        eprintln!("error: {e}");
    }
    for c in r.invariants.iter().filter(|c| !c.passed) {
        eprintln!("invariant violated: {} ({})", c.name, c.detail);
    }
    eprintln!(
        "{} files written, report at {}",
        r.manifest.len(),
        outcome.report_path.display()
    );
    outcome.exit_code
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Dims { sites, d, k } => {
            let ks = if k.is_empty() { None } else { Some(k.as_slice()) };
            cmd_dims(sites, d, ks, &mut std::io::stdout().lock())?;
            Ok(0)
        }
        Command::Spectrum { run, full_check } => Ok(report_outcome(&cmd_spectrum(&run.into_config()?, full_check)?)),
        Command::Stats { run, baseline_samples } => {
            let mut cfg = run.into_config()?;
            if let Some(samples) = baseline_samples {
                let dim = equal_count_dim(cfg.model.sites)?;
                cfg.baseline = Some(EnsembleSpec::new(Ensemble::Coe, dim, samples, cfg.seed)?);
            }
            Ok(report_outcome(&cmd_stats(&cfg)?))
        }
        Command::Baseline {
            run,
            ensemble,
            dim,
            samples,
        } => {
            let mut cfg = run.into_config()?;
            let dim = match dim {
                Some(dim) => dim,
                None => equal_count_dim(cfg.model.sites)?,
            };
            cfg.baseline = Some(EnsembleSpec::new(ensemble, dim, samples, cfg.seed)?);
            Ok(report_outcome(&cmd_baseline(&cfg)?))
        }
        Command::Report { out } => cmd_report(&out, &mut std::io::stdout().lock()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
