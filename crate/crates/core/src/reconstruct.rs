//! Time-domain reconstruction from recovered band samples, and error
//! metrics modulo the unrecoverable global phase.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{format_real, series_value, BandGrid, BandIndex, CMatrix, MultibandSignal, C64};

/// What the recovered phase is referenced to. Magnitude-only data never
/// pins down the common phase factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseReference {
    UpToGlobalPhase,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveredSignal {
    samples: MultibandSignal,
}

impl RecoveredSignal {
    /// Keeps the `support` rows of an `L × T` band matrix.
    pub fn new(grid: BandGrid, support: &[BandIndex], band_matrix: &CMatrix) -> Result<Self> {
        Ok(Self {
            samples: MultibandSignal::from_band_matrix(grid, support, band_matrix)?,
        })
    }

    pub fn from_samples(samples: MultibandSignal) -> Self {
        Self { samples }
    }

    pub fn grid(&self) -> &BandGrid {
        self.samples.grid()
    }

    pub fn support(&self) -> Vec<BandIndex> {
        self.samples.support()
    }

    pub fn bands(&self) -> &BTreeMap<BandIndex, Vec<C64>> {
        self.samples.bands()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn band_matrix(&self) -> CMatrix {
        self.samples.band_matrix()
    }

    pub fn samples(&self) -> &MultibandSignal {
        &self.samples
    }

    pub fn phase_reference(&self) -> PhaseReference {
        PhaseReference::UpToGlobalPhase
    }

    /// Multiplies every band by `e^{iφ}`.
    pub fn rotated(&self, phase: f64) -> Self {
        Self {
            samples: self.samples.rotated(phase),
        }
    }
}

/// Truncated sampling series with the band re-shift; identical kernel and
/// summation order to [`MultibandSignal::eval_time`].
pub fn shannon_reconstruct(rec: &RecoveredSignal, t: f64, truncation: usize) -> C64 {
    series_value(rec.grid(), rec.bands(), rec.len(), t, truncation)
}

/// Writes `t,re,im` rows for the given evaluation times.
pub fn write_reconstruction_csv<W: Write>(
    rec: &RecoveredSignal,
    times: &[f64],
    truncation: usize,
    out: W,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["t", "re", "im"])?;
    for &t in times {
        let v = shannon_reconstruct(rec, t, truncation);
        wtr.write_record([format_real(t), format_real(v.re), format_real(v.im)])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Largest deviation, over the half-sample instants `t = (n + 1/2) T_s`,
/// between the series truncated at `K` and the series using every sample.
pub fn offgrid_truncation_error(sig: &MultibandSignal, truncation: usize) -> f64 {
    let ts = sig.grid().sample_period();
    (0..sig.len().saturating_sub(1))
        .map(|n| {
            let t = (n as f64 + 0.5) * ts;
            (sig.eval_time(t, truncation) - sig.eval_time(t, sig.len())).norm()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseAlignment {
    /// `arg ⟨vec(true), vec(rec)⟩`.
    pub phi: f64,
    /// `rec · e^{-iφ}`, the phase rotation of `rec` closest to `true`.
    pub aligned: CMatrix,
}

pub fn global_phase_align(rec: &CMatrix, truth: &CMatrix) -> Result<PhaseAlignment> {
    if rec.shape() != truth.shape() {
        return Err(Error::Config(format!(
            "shape mismatch: {:?} vs {:?}",
            rec.shape(),
            truth.shape()
        )));
    }
    if truth.norm() == 0.0 {
        return Err(Error::DegenerateMetric);
    }
    let inner: C64 = truth.iter().zip(rec.iter()).map(|(t, r)| t.conj() * r).sum();
    let phi = if inner.norm() > 0.0 { inner.arg() } else { 0.0 };
    let aligned = rec * C64::from_polar(1.0, -phi);
    Ok(PhaseAlignment { phi, aligned })
}

/// `min_φ ||rec e^{iφ} - true||_F / ||true||_F`.
pub fn rel_error_mod_phase(rec: &CMatrix, truth: &CMatrix) -> Result<f64> {
    let PhaseAlignment { aligned, .. } = global_phase_align(rec, truth)?;
    Ok((aligned - truth).norm() / truth.norm())
}
