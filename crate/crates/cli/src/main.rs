use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use phaseless_mwc::experiment::{dump_times, recover};
use phaseless_mwc::reconstruct::write_reconstruction_csv;
use phaseless_mwc::{
    acquire, add_noise, init_thread_pool, make_grid, make_mixing_config, random_signal, rel_error_mod_phase,
    run_experiment, run_selftest, ExperimentConfig, MeasurementSet, MultibandSignal, StrategyRegistry,
};

/// Phaseless sub-Nyquist sampling and recovery of sparse multiband signals.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration file; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set M=6`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate, recover and score one seeded signal.
    E2e {
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory for the report and data dumps.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded ground-truth signal and its measurements.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover a signal from a measurement file.
    Recover {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        measurements: PathBuf,
        /// Ground-truth signal, used only to score the result.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in oracle suites.
    Selftest {
        /// Only run suites whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
    },
}

fn e2e(config: &ConfigArgs, out: Option<PathBuf>) -> Result<bool> {
    let mut cfg = config.load()?;
    if out.is_some() {
        cfg.out_dir = out;
    }
    let report = run_experiment(&cfg)?;
    println!("{}", report.to_json_line());
    Ok(true)
}

fn simulate(config: &ConfigArgs, out: &Path) -> Result<bool> {
    let cfg = config.load()?;
    let grid = make_grid(cfg.nyquist, cfg.bands)?;
    let sig = random_signal(grid, cfg.sparsity, cfg.len, cfg.seed)?;
    let mixing = make_mixing_config(cfg.m, cfg.bands)?;
    let ms = add_noise(&acquire(&sig, &mixing)?, cfg.sigma, cfg.noise_seed())?;
    fs::create_dir_all(out)?;
    sig.write_csv(File::create(out.join("signal.csv"))?)?;
    ms.write_csv(File::create(out.join("measurements.csv"))?)?;
    println!("{}", json!({ "support": sig.support(), "instants": ms.len(), "out": out }));
    Ok(true)
}

fn recover_cmd(config: &ConfigArgs, measurements: &Path, truth: Option<&Path>, out: &Path) -> Result<bool> {
    let cfg = config.load()?;
    let grid = make_grid(cfg.nyquist, cfg.bands)?;
    let mixing = make_mixing_config(cfg.m, cfg.bands)?;
    let ms = MeasurementSet::read_csv(
        File::open(measurements).with_context(|| format!("opening {}", measurements.display()))?,
    )?;
    let registry = StrategyRegistry::with_builtins();
    let rec = recover(&ms, &mixing, grid, &cfg.recovery_settings(), &registry)?;

    fs::create_dir_all(out)?;
    rec.signal.samples().write_csv(File::create(out.join("recovered.csv"))?)?;
    write_reconstruction_csv(
        &rec.signal,
        &dump_times(&grid, ms.len()),
        cfg.truncation,
        File::create(out.join("reconstruction.csv"))?,
    )?;

    let mut summary = json!({
        "support": rec.support.support,
        "support_residual": rec.support.relative_residual(),
        "hub_magnitude_min": rec.diagnostics.hub_magnitude_min,
        "rank1_defect_max": rec.diagnostics.rank1_defect_max,
    });
    if let Some(path) = truth {
        let sig = MultibandSignal::read_csv(grid, File::open(path).with_context(|| format!("opening {}", path.display()))?)?;
        summary["true_support"] = json!(sig.support());
        summary["support_match"] = json!(sig.support() == rec.support.support);
        summary["rel_error_samples"] = json!(rel_error_mod_phase(&rec.signal.band_matrix(), &sig.band_matrix())?);
    }
    println!("{summary}");
    Ok(true)
}

fn selftest(filter: Option<&str>) -> bool {
    let summary = run_selftest(filter);
    for r in &summary.results {
        println!("{:<20} {} {}", r.name, if r.passed { "PASS" } else { "FAIL" }, r.detail);
    }
    if summary.results.is_empty() {
        eprintln!("no suite matches the filter");
        return false;
    }
    summary.all_passed()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = init_thread_pool().map_err(anyhow::Error::from).and_then(|_| match &cli.command {
        Command::E2e { config, out } => e2e(config, out.clone()),
        Command::Simulate { config, out } => simulate(config, out),
        Command::Recover {
            config,
            measurements,
            truth,
            out,
        } => recover_cmd(config, measurements, truth.as_deref(), out),
        Command::Selftest { filter } => Ok(selftest(filter.as_deref())),
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
