//! End-to-end experiment: simulate, retrieve, propagate, recover,
//! reconstruct, and score against the ground truth.
//!
//! Recovery itself ([`recover`]) only sees the measurement set, the mixing
//! configuration and the recovery settings. Ground truth enters afterwards,
//! for metrics only.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::frontend::{acquire, add_noise, make_mixing_config, MeasurementSet, MixingConfig};
use crate::model::{format_real, make_grid, random_signal, BandGrid, BandIndex, CMatrix, MultibandSignal, C64};
use crate::phase_retrieval::{
    align_phases, phase_increments, FrameRecovery, PairTolerance, RetrievalOptions, DEFAULT_EPS_Z,
};
use crate::reconstruct::{global_phase_align, shannon_reconstruct, write_reconstruction_csv, RecoveredSignal};
use crate::sparse_recovery::{
    default_window, expand_solution, solve_support, MmvProblem, StrategyRegistry, SupportEstimate,
};

/// Flat experiment configuration. JSON keys follow the usual symbols
/// (`f_N`, `L`, `N`, `M`, `T`, `K`, `W`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "f_N")]
    pub nyquist: f64,
    #[serde(rename = "L")]
    pub bands: usize,
    #[serde(rename = "N")]
    pub sparsity: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "T")]
    pub len: usize,
    pub seed: u64,
    #[serde(rename = "K")]
    pub truncation: usize,
    /// MMV window; `None` means `max(2N, 8)`.
    #[serde(rename = "W")]
    pub window: Option<usize>,
    pub sigma: f64,
    pub support_method: String,
    pub eps_z: f64,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            nyquist: 7.5,
            bands: 15,
            sparsity: 2,
            m: 4,
            len: 128,
            seed: 1,
            truncation: crate::model::DEFAULT_TRUNCATION,
            window: None,
            sigma: 0.0,
            support_method: "exhaustive".into(),
            eps_z: DEFAULT_EPS_Z,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Applies one `key=value` override. The value is read as JSON when it
    /// parses, otherwise as a bare string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        let mut tree = serde_json::to_value(&*self).expect("config serializes");
        let map = tree.as_object_mut().expect("config is an object");
        let key = key.trim();
        if !map.contains_key(key) {
            return Err(Error::Config(format!("unknown config key `{key}`")));
        }
        let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().into()));
        map.insert(key.to_string(), value);
        *self = serde_json::from_value(tree)
            .map_err(|e| Error::Config(format!("override `{assignment}`: {e}")))?;
        Ok(())
    }

    pub fn window(&self) -> usize {
        self.window.unwrap_or_else(|| default_window(self.sparsity))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.bands < 3 || self.bands.is_multiple_of(2) {
            return fail(format!("L must be odd and >= 3, got {}", self.bands));
        }
        if self.sparsity == 0 || self.sparsity >= self.bands {
            return fail(format!("N must satisfy 1 <= N < L, got {}", self.sparsity));
        }
        if self.m < 2 * self.sparsity {
            return fail(format!(
                "M = {} is below 2N = {}; the support would not be unique",
                self.m,
                2 * self.sparsity
            ));
        }
        if self.m > self.bands {
            return fail(format!("M = {} exceeds L = {}", self.m, self.bands));
        }
        if self.len < 2 {
            return fail(format!("T must be at least 2, got {}", self.len));
        }
        let w = self.window();
        if w == 0 || self.len < w {
            return fail(format!("need 1 <= W <= T, got W = {w}, T = {}", self.len));
        }
        if self.truncation == 0 {
            return fail("K must be at least 1".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return fail(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if !(self.eps_z > 0.0 && self.eps_z.is_finite()) {
            return fail(format!("eps_z must be positive, got {}", self.eps_z));
        }
        make_grid(self.nyquist, self.bands)?;
        Ok(())
    }

    pub fn recovery_settings(&self) -> RecoverySettings {
        RecoverySettings {
            sparsity: self.sparsity,
            window: self.window(),
            support_method: self.support_method.clone(),
            eps_z: self.eps_z,
            noisy: self.sigma > 0.0,
        }
    }

    /// Seed of the measurement-noise draw, decorrelated from the signal seed.
    pub fn noise_seed(&self) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x6E6F_6973_6500_0001
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoverySettings {
    pub sparsity: usize,
    pub window: usize,
    pub support_method: String,
    pub eps_z: f64,
    /// Accept rank-1 defects and negative magnitudes instead of failing.
    pub noisy: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryDiagnostics {
    pub hub_magnitude_min: f64,
    pub hub_spread_max: f64,
    pub rank1_defect_max: f64,
}

#[derive(Clone, Debug)]
pub struct Recovery {
    pub signal: RecoveredSignal,
    /// Phase-aligned `z[n]` sequence, `M × T`.
    pub z: CMatrix,
    pub support: SupportEstimate,
    pub diagnostics: RecoveryDiagnostics,
}

/// Runs the four recovery stages on magnitude-only data.
pub fn recover(
    ms: &MeasurementSet,
    mixing: &MixingConfig,
    grid: BandGrid,
    settings: &RecoverySettings,
    registry: &StrategyRegistry,
) -> Result<Recovery> {
    if ms.main_width() != mixing.main_branches() {
        return Err(Error::Config(format!(
            "measurements have {} main branches, mixing config expects {}",
            ms.main_width(),
            mixing.main_branches()
        )));
    }
    if grid.band_count() != mixing.band_count() {
        return Err(Error::Config("grid and mixing config disagree on L".into()));
    }
    if settings.window == 0 || settings.window > ms.len() {
        return Err(Error::Config(format!(
            "window {} does not fit {} instants",
            settings.window,
            ms.len()
        )));
    }
    let strategy = registry.get(&settings.support_method)?;
    let opts = RetrievalOptions {
        eps_z: settings.eps_z,
        tol: if settings.noisy {
            PairTolerance::lenient()
        } else {
            PairTolerance::default()
        },
    };

    let frames = FrameRecovery::new(mixing, &opts)?.recover_all(ms)?;
    let hub: Vec<C64> = frames.iter().map(|f| f.z_tilde[0]).collect();
    let increments = phase_increments(&hub, ms.prop_rows(), mixing.alphas(), &opts)?;
    let z = align_phases(&frames, &increments.values)?;

    let window = z.columns(0, settings.window).into_owned();
    let mmv = MmvProblem::new(window, mixing.b_mat().clone(), settings.sparsity)?;
    let support = strategy.identify(&mmv)?;
    let full = mmv.with_data(z.clone())?;
    let solution = solve_support(&full, &support.support)?;
    let bands = expand_solution(&solution.x, &support.support, grid.band_count())?;
    let signal = RecoveredSignal::new(grid, &support.support, &bands)?;

    let diagnostics = RecoveryDiagnostics {
        hub_magnitude_min: frames.iter().map(|f| f.hub_magnitude).fold(f64::INFINITY, f64::min),
        hub_spread_max: frames.iter().map(|f| f.hub_spread).fold(0.0, f64::max),
        rank1_defect_max: frames
            .iter()
            .map(|f| f.max_defect)
            .fold(increments.max_defect, f64::max),
    };
    Ok(Recovery {
        signal,
        z,
        support,
        diagnostics,
    })
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct ReportDiagnostics {
    pub hub_magnitude_min: f64,
    pub hub_spread_max: f64,
    pub rank1_defect_max: f64,
    pub support_residual: f64,
    pub support_margin: Option<f64>,
    /// `None` when the exhaustive search is out of reach.
    pub somp_agrees: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub support_method: String,
    pub recovered_support: Vec<BandIndex>,
    pub true_support: Vec<BandIndex>,
    pub support_match: bool,
    pub rel_error_samples: f64,
    pub rel_error_timegrid: f64,
    pub global_phase: f64,
    pub branch_count: usize,
    pub total_rate: f64,
    pub landau_rate: f64,
    pub rate_ratio: f64,
    pub diagnostics: ReportDiagnostics,
}

/// Sampling-rate bookkeeping: `(branches, total rate, Landau rate)`.
///
/// There are `4(M-1)` main branches plus 4 propagation branches, each
/// sampled at `Ω`; the Landau rate is `2 (N/L) f_N`.
pub fn sampling_rates(grid: &BandGrid, m: usize, sparsity: usize) -> (usize, f64, f64) {
    let branches = 4 * (m - 1) + 4;
    let total = branches as f64 * grid.band_width();
    let landau = 2.0 * (sparsity as f64 / grid.band_count() as f64) * grid.nyquist();
    (branches, total, landau)
}

fn json_real(v: f64) -> String {
    if v.is_finite() {
        format_real(v)
    } else {
        "null".into()
    }
}

fn json_support(s: &[BandIndex]) -> String {
    format!("[{}]", s.iter().map(i32::to_string).collect::<Vec<_>>().join(","))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    JsonLines,
    Csv,
}

const CSV_FIELDS: [&str; 18] = [
    "seed",
    "support_method",
    "recovered_support",
    "true_support",
    "support_match",
    "rel_error_samples",
    "rel_error_timegrid",
    "global_phase",
    "branch_count",
    "total_rate",
    "landau_rate",
    "rate_ratio",
    "hub_magnitude_min",
    "hub_spread_max",
    "rank1_defect_max",
    "support_residual",
    "support_margin",
    "somp_agrees",
];

impl ExperimentReport {
    /// One JSON object, fixed field order, reals with 17 significant digits.
    pub fn to_json_line(&self) -> String {
        let d = &self.diagnostics;
        let mut s = String::new();
        write!(
            s,
            "{{\"seed\":{},\"support_method\":{},\"recovered_support\":{},\"true_support\":{},\
             \"support_match\":{},\"rel_error_samples\":{},\"rel_error_timegrid\":{},\
             \"global_phase\":{},\"branch_count\":{},\"total_rate\":{},\"landau_rate\":{},\
             \"rate_ratio\":{},\"diagnostics\":{{\"hub_magnitude_min\":{},\"hub_spread_max\":{},\
             \"rank1_defect_max\":{},\"support_residual\":{},\"support_margin\":{},\"somp_agrees\":{}}}}}",
            self.seed,
            serde_json::to_string(&self.support_method).expect("string serializes"),
            json_support(&self.recovered_support),
            json_support(&self.true_support),
            self.support_match,
            json_real(self.rel_error_samples),
            json_real(self.rel_error_timegrid),
            json_real(self.global_phase),
            self.branch_count,
            json_real(self.total_rate),
            json_real(self.landau_rate),
            json_real(self.rate_ratio),
            json_real(d.hub_magnitude_min),
            json_real(d.hub_spread_max),
            json_real(d.rank1_defect_max),
            json_real(d.support_residual),
            d.support_margin.map_or("null".into(), json_real),
            d.somp_agrees.map_or("null".into(), |b| b.to_string()),
        )
        .expect("writing to a String");
        s
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        serde_json::from_str(line.trim()).map_err(|e| Error::Parse(format!("report: {e}")))
    }

    pub fn to_csv(&self) -> Result<String> {
        let d = &self.diagnostics;
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(CSV_FIELDS)?;
        wtr.write_record([
            self.seed.to_string(),
            self.support_method.clone(),
            json_support(&self.recovered_support),
            json_support(&self.true_support),
            self.support_match.to_string(),
            format_real(self.rel_error_samples),
            format_real(self.rel_error_timegrid),
            format_real(self.global_phase),
            self.branch_count.to_string(),
            format_real(self.total_rate),
            format_real(self.landau_rate),
            format_real(self.rate_ratio),
            format_real(d.hub_magnitude_min),
            format_real(d.hub_spread_max),
            format_real(d.rank1_defect_max),
            format_real(d.support_residual),
            d.support_margin.map_or(String::new(), format_real),
            d.somp_agrees.map_or(String::new(), |b| b.to_string()),
        ])?;
        let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn emit_report(report: &ExperimentReport, path: &Path, format: ReportFormat) -> Result<()> {
    let body = match format {
        ReportFormat::JsonLines => report.to_json_line() + "\n",
        ReportFormat::Csv => report.to_csv()?,
    };
    fs::write(path, body)?;
    Ok(())
}

/// Everything produced by one run, for callers that want more than the report.
#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub signal: MultibandSignal,
    pub measurements: MeasurementSet,
    pub recovery: Recovery,
}

/// Runs the pipeline on a caller-supplied ground-truth signal.
pub fn execute(cfg: &ExperimentConfig, sig: &MultibandSignal) -> Result<ExperimentRun> {
    cfg.validate()?;
    let grid = make_grid(cfg.nyquist, cfg.bands)?;
    if sig.grid() != &grid || sig.len() != cfg.len {
        return Err(Error::Config("signal does not match the configured grid and length".into()));
    }
    let mixing = make_mixing_config(cfg.m, cfg.bands)?;
    let clean = acquire(sig, &mixing)?;
    let measurements = add_noise(&clean, cfg.sigma, cfg.noise_seed())?;
    let registry = StrategyRegistry::with_builtins();
    let settings = cfg.recovery_settings();
    let recovery = recover(&measurements, &mixing, grid, &settings, &registry)?;

    // cross-check the two support strategies on the same window
    let window = recovery.z.columns(0, settings.window).into_owned();
    let mmv = MmvProblem::new(window, mixing.b_mat().clone(), cfg.sparsity)?;
    let other = if settings.support_method == "somp" { "exhaustive" } else { "somp" };
    let somp_agrees = match registry.get(other)?.identify(&mmv) {
        Ok(alt) => Some(alt.support == recovery.support.support),
        Err(Error::Scale { .. }) => None,
        Err(e) => return Err(e),
    };

    let truth = sig.band_matrix();
    let estimate = recovery.signal.band_matrix();
    let alignment = global_phase_align(&estimate, &truth)?;
    let rel_error_samples = (&alignment.aligned - &truth).norm() / truth.norm();

    let aligned_signal = recovery.signal.rotated(-alignment.phi);
    let (mut diff, mut reference) = (0.0, 0.0);
    for n in 0..cfg.len {
        let t = (n as f64 + 0.5) * grid.sample_period();
        let want = sig.eval_time(t, cfg.truncation);
        let got = shannon_reconstruct(&aligned_signal, t, cfg.truncation);
        diff += (got - want).norm_sqr();
        reference += want.norm_sqr();
    }
    let rel_error_timegrid = if reference > 0.0 { (diff / reference).sqrt() } else { 0.0 };

    let (branch_count, total_rate, landau_rate) = sampling_rates(&grid, cfg.m, cfg.sparsity);
    let true_support = sig.support();
    let report = ExperimentReport {
        seed: cfg.seed,
        support_method: settings.support_method.clone(),
        support_match: recovery.support.support == true_support,
        recovered_support: recovery.support.support.clone(),
        true_support,
        rel_error_samples,
        rel_error_timegrid,
        global_phase: alignment.phi,
        branch_count,
        total_rate,
        landau_rate,
        rate_ratio: total_rate / landau_rate,
        diagnostics: ReportDiagnostics {
            hub_magnitude_min: recovery.diagnostics.hub_magnitude_min,
            hub_spread_max: recovery.diagnostics.hub_spread_max,
            rank1_defect_max: recovery.diagnostics.rank1_defect_max,
            support_residual: recovery.support.relative_residual(),
            support_margin: recovery.support.margin(),
            somp_agrees,
        },
    };
    Ok(ExperimentRun {
        report,
        signal: sig.clone(),
        measurements,
        recovery,
    })
}

/// Generates the seeded ground truth, runs the pipeline and, when
/// `out_dir` is set, writes the report and the data dumps there.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let grid = make_grid(cfg.nyquist, cfg.bands)?;
    let sig = random_signal(grid, cfg.sparsity, cfg.len, cfg.seed)?;
    let run = execute(cfg, &sig)?;
    if let Some(dir) = &cfg.out_dir {
        write_outputs(cfg, &run, dir)?;
    }
    Ok(run.report)
}

/// Evaluation instants of the reconstruction dump: half-sample spacing
/// over the observation window.
pub fn dump_times(grid: &BandGrid, len: usize) -> Vec<f64> {
    (0..2 * len).map(|j| j as f64 * grid.sample_period() / 2.0).collect()
}

pub fn write_outputs(cfg: &ExperimentConfig, run: &ExperimentRun, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    emit_report(&run.report, &dir.join("report.jsonl"), ReportFormat::JsonLines)?;
    emit_report(&run.report, &dir.join("report.csv"), ReportFormat::Csv)?;
    run.signal.write_csv(fs::File::create(dir.join("signal.csv"))?)?;
    run.measurements
        .write_csv(fs::File::create(dir.join("measurements.csv"))?)?;
    run.recovery
        .signal
        .samples()
        .write_csv(fs::File::create(dir.join("recovered.csv"))?)?;
    let times = dump_times(run.signal.grid(), cfg.len);
    write_reconstruction_csv(
        &run.recovery.signal,
        &times,
        cfg.truncation,
        fs::File::create(dir.join("reconstruction.csv"))?,
    )?;
    Ok(())
}
