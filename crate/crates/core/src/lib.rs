//! Phaseless sub-Nyquist sampling of sparse multiband signals.
//!
//! A signal occupying `N` of `L` frequency bands is observed only through
//! squared magnitudes: `4(M-1)` modulated-wideband-converter branches plus a
//! four-branch phase-propagation front end. Recovery runs in four stages:
//!
//! 1. per-instant phase retrieval of `z[n] = B x[n]` ([`phase_retrieval`]),
//! 2. phase propagation across instants, leaving one global phase,
//! 3. joint-sparse support identification and least squares
//!    ([`sparse_recovery`]),
//! 4. sampling-series interpolation back to continuous time
//!    ([`reconstruct`]).
//!
//! [`experiment`] wires the stages together with the simulator in
//! [`model`] and [`frontend`].

pub mod error;
pub mod experiment;
pub mod frontend;
pub mod model;
pub mod phase_retrieval;
pub mod reconstruct;
pub mod selftest;
pub mod sparse_recovery;

pub use error::{Error, Result};
pub use experiment::{
    emit_report, execute, recover, run_experiment, ExperimentConfig, ExperimentReport, ReportFormat,
};
pub use frontend::{acquire, add_noise, make_mixing_config, MeasurementSet, MixingConfig};
pub use model::{make_grid, random_signal, BandGrid, BandIndex, MultibandSignal, C64};
pub use reconstruct::{rel_error_mod_phase, shannon_reconstruct, RecoveredSignal};
pub use selftest::run_selftest;
pub use sparse_recovery::{MmvProblem, StrategyRegistry, SupportStrategy};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "PHASELESS_MWC_THREADS";

/// Sizes the global worker pool from `PHASELESS_MWC_THREADS`, if set.
/// Returns the configured count.
pub fn init_thread_pool() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(Some(threads))
}
