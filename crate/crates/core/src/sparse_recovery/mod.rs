//! Joint-sparse recovery of the band samples from `Z = B X`.
//!
//! All columns of `X` share one row support, so the support is identified
//! once from a window of `W` consecutive columns and the nonzero rows are
//! then obtained by least squares on the selected columns of `B`.
//!
//! Support identification is pluggable: each method implements
//! [`SupportStrategy`] and is looked up by name in a [`StrategyRegistry`].

mod exhaustive;
mod somp;

use std::fmt;

use nalgebra::{Dyn, QR};

use crate::error::{Error, Result};
use crate::frontend::RANK_TOLERANCE;
use crate::model::{BandIndex, CMatrix};

pub use exhaustive::{Exhaustive, SUBSET_LIMIT};
pub use somp::Somp;

/// Default MMV window width for a given sparsity, `max(2N, 8)`.
pub fn default_window(sparsity: usize) -> usize {
    (2 * sparsity).max(8)
}

#[derive(Clone, Debug)]
pub struct MmvProblem {
    z: CMatrix,
    b: CMatrix,
    sparsity: usize,
}

impl MmvProblem {
    pub fn new(z: CMatrix, b: CMatrix, sparsity: usize) -> Result<Self> {
        if z.ncols() == 0 {
            return Err(Error::Config("MMV problem needs at least one column".into()));
        }
        if z.nrows() != b.nrows() {
            return Err(Error::Config(format!(
                "Z has {} rows but B has {}",
                z.nrows(),
                b.nrows()
            )));
        }
        if b.ncols().is_multiple_of(2) {
            return Err(Error::Config(format!("B must have an odd column count, got {}", b.ncols())));
        }
        if sparsity == 0 || sparsity > b.ncols() {
            return Err(Error::Config(format!(
                "sparsity {sparsity} out of range for {} bands",
                b.ncols()
            )));
        }
        Ok(Self { z, b, sparsity })
    }

    pub fn z(&self) -> &CMatrix {
        &self.z
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn band_count(&self) -> usize {
        self.b.ncols()
    }

    fn half(&self) -> BandIndex {
        ((self.b.ncols() - 1) / 2) as BandIndex
    }

    pub fn band_at(&self, column: usize) -> BandIndex {
        column as BandIndex - self.half()
    }

    pub fn column_of(&self, band: BandIndex) -> Result<usize> {
        let half = self.half();
        if band < -half || band > half {
            return Err(Error::Index {
                index: band as i64,
                range: format!("{}..={}", -half, half),
            });
        }
        Ok((band + half) as usize)
    }

    /// Same `B` and sparsity, different data.
    pub fn with_data(&self, z: CMatrix) -> Result<Self> {
        Self::new(z, self.b.clone(), self.sparsity)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportEstimate {
    /// Sorted band indices.
    pub support: Vec<BandIndex>,
    /// `||Z - P_S Z||_F` for the returned support.
    pub residual: f64,
    /// Smallest residual among the other candidates, when the strategy
    /// compares candidates.
    pub runner_up: Option<f64>,
    pub z_norm: f64,
    /// `Z` was identically zero; every support explains it equally well.
    pub degenerate: bool,
}

impl SupportEstimate {
    pub fn relative_residual(&self) -> f64 {
        if self.z_norm > 0.0 {
            self.residual / self.z_norm
        } else {
            0.0
        }
    }

    /// Relative gap between the runner-up and the winner.
    pub fn margin(&self) -> Option<f64> {
        self.runner_up
            .map(|r| (r - self.residual) / self.z_norm.max(f64::MIN_POSITIVE))
    }
}

pub trait SupportStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn identify(&self, prob: &MmvProblem) -> Result<SupportEstimate>;
}

impl fmt::Debug for dyn SupportStrategy + '_ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SupportStrategy({})", self.name())
    }
}

/// Name-indexed collection of support strategies.
#[derive(Default)]
pub struct StrategyRegistry {
    entries: Vec<Box<dyn SupportStrategy>>,
}

impl StrategyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding `exhaustive` and `somp`.
    pub fn with_builtins() -> Self {
        let mut reg = Self::new();
        reg.entries.push(Box::new(Exhaustive::default()));
        reg.entries.push(Box::new(Somp));
        reg
    }

    pub fn register(&mut self, strategy: Box<dyn SupportStrategy>) -> Result<()> {
        if self.entries.iter().any(|s| s.name() == strategy.name()) {
            return Err(Error::Config(format!(
                "support strategy `{}` is already registered",
                strategy.name()
            )));
        }
        self.entries.push(strategy);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&dyn SupportStrategy> {
        self.entries
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown support method `{name}` (available: {})",
                    self.names().join(", ")
                ))
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|s| s.name()).collect()
    }
}

pub fn support_exhaustive(prob: &MmvProblem) -> Result<SupportEstimate> {
    Exhaustive::default().identify(prob)
}

pub fn support_somp(prob: &MmvProblem) -> Result<SupportEstimate> {
    Somp.identify(prob)
}

fn has_full_column_rank(sub: &CMatrix) -> bool {
    let sv = sub.singular_values();
    let max = sv.max();
    max > 0.0 && sv.iter().all(|&s| s > RANK_TOLERANCE * max)
}

/// `||Z - Q Qᴴ Z||_F` with `Q` an orthonormal basis of the selected columns.
pub(crate) fn projection_residual(qr: &QR<nalgebra::Complex<f64>, Dyn, Dyn>, z: &CMatrix) -> f64 {
    let q = qr.q();
    let coeffs = q.adjoint() * z;
    (z - q * coeffs).norm()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportSolution {
    /// `|support| × W` least-squares coefficients, rows in support order.
    pub x: CMatrix,
    /// `||Z - B_S X_S||_F`.
    pub residual: f64,
}

/// Least-squares coefficients `B_S† Z` through a QR factorization of `B_S`.
pub fn solve_support(prob: &MmvProblem, support: &[BandIndex]) -> Result<SupportSolution> {
    let cols = support
        .iter()
        .map(|&l| prob.column_of(l))
        .collect::<Result<Vec<_>>>()?;
    let w = prob.z.ncols();
    if cols.is_empty() {
        return Ok(SupportSolution {
            x: CMatrix::zeros(0, w),
            residual: prob.z.norm(),
        });
    }
    let sub = prob.b.select_columns(&cols);
    if sub.nrows() < sub.ncols() || !has_full_column_rank(&sub) {
        return Err(Error::Singular(format!(
            "columns {support:?} of B are linearly dependent"
        )));
    }
    let qr = sub.clone().qr();
    let rhs = qr.q().adjoint() * &prob.z;
    let x = qr
        .r()
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::Singular(format!("triangular factor for {support:?} is singular")))?;
    let residual = (&prob.z - &sub * &x).norm();
    Ok(SupportSolution { x, residual })
}

/// Re-embeds support rows into an `L × W` matrix; other rows are zero.
pub fn expand_solution(x_support: &CMatrix, support: &[BandIndex], bands: usize) -> Result<CMatrix> {
    if x_support.nrows() != support.len() {
        return Err(Error::Config(format!(
            "{} coefficient rows for a support of size {}",
            x_support.nrows(),
            support.len()
        )));
    }
    if bands.is_multiple_of(2) {
        return Err(Error::Config(format!("band count must be odd, got {bands}")));
    }
    let half = ((bands - 1) / 2) as BandIndex;
    let mut out = CMatrix::zeros(bands, x_support.ncols());
    for (row, &band) in support.iter().enumerate() {
        if band < -half || band > half {
            return Err(Error::Index {
                index: band as i64,
                range: format!("{}..={}", -half, half),
            });
        }
        out.set_row((band + half) as usize, &x_support.row(row));
    }
    Ok(out)
}
