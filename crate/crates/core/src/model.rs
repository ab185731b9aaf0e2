//! Band grid and sparse multiband signal model.
//!
//! The spectrum `[-f_N, f_N]` is split into `L = 2 L0 + 1` cells of width
//! `Ω = 2 f_N / L`. A signal occupies `N < L` of them. Each occupied cell
//! `l` is carried by its baseband sample sequence `x_l[n]`, taken at the
//! low rate `Ω`, with the convention `x_l(t) = x̃_l(t) e^{-i2π lΩt}`.
//! Continuous-time values are obtained from the samples through the
//! sampling series, re-shifted with `e^{+i2π lΩt}`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::ops::RangeInclusive;

use nalgebra::{Complex, DMatrix, DVector};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Signed band index in `-L0..=L0`.
pub type BandIndex = i32;

/// Name of the pseudo-random generator every seeded routine draws from.
/// Bump the suffix whenever the draw order changes.
pub const GENERATOR: &str = "chacha8-v1";

/// Default half-width of the truncated sampling series.
pub const DEFAULT_TRUNCATION: usize = 64;

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws one sample of the circularly-symmetric standard complex Gaussian
/// (unit total variance).
pub(crate) fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandGrid {
    nyquist: f64,
    bands: usize,
    band_width: f64,
}

impl BandGrid {
    pub fn new(nyquist: f64, bands: usize) -> Result<Self> {
        if !(nyquist.is_finite() && nyquist > 0.0) {
            return Err(Error::Config(format!(
                "Nyquist frequency must be positive, got {nyquist}"
            )));
        }
        if bands < 3 || bands.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "band count must be odd and at least 3, got {bands}"
            )));
        }
        Ok(Self {
            nyquist,
            bands,
            band_width: 2.0 * nyquist / bands as f64,
        })
    }

    pub fn nyquist(&self) -> f64 {
        self.nyquist
    }

    /// Total band count `L`.
    pub fn band_count(&self) -> usize {
        self.bands
    }

    /// Half band count `L0`.
    pub fn half_count(&self) -> BandIndex {
        ((self.bands - 1) / 2) as BandIndex
    }

    /// Band width `Ω` in Hz, which is also the per-branch sample rate.
    pub fn band_width(&self) -> f64 {
        self.band_width
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.band_width
    }

    /// Period of the mixing waveforms; equal to the sample period.
    pub fn mixing_period(&self) -> f64 {
        1.0 / self.band_width
    }

    pub fn band_indices(&self) -> RangeInclusive<BandIndex> {
        -self.half_count()..=self.half_count()
    }

    /// Column (or vector position) of band `l`, with `-L0` at position 0.
    pub fn position_of(&self, band: BandIndex) -> Result<usize> {
        let half = self.half_count();
        if band < -half || band > half {
            return Err(Error::Index {
                index: band as i64,
                range: format!("{}..={}", -half, half),
            });
        }
        Ok((band + half) as usize)
    }

    pub fn band_at(&self, position: usize) -> BandIndex {
        position as BandIndex - self.half_count()
    }
}

pub fn make_grid(nyquist: f64, bands: usize) -> Result<BandGrid> {
    BandGrid::new(nyquist, bands)
}

/// Ground-truth multiband signal: one baseband sequence per occupied band.
#[derive(Clone, Debug, PartialEq)]
pub struct MultibandSignal {
    grid: BandGrid,
    bands: BTreeMap<BandIndex, Vec<C64>>,
    len: usize,
}

impl MultibandSignal {
    /// Builds a signal from per-band sequences. An empty map is accepted and
    /// describes the zero signal of length `len`.
    pub fn new(grid: BandGrid, bands: BTreeMap<BandIndex, Vec<C64>>, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Config("signal length must be positive".into()));
        }
        if bands.len() >= grid.band_count() {
            return Err(Error::Config(format!(
                "{} occupied bands leave no room for sparsity (L = {})",
                bands.len(),
                grid.band_count()
            )));
        }
        for (&band, seq) in &bands {
            grid.position_of(band)?;
            if seq.len() != len {
                return Err(Error::Config(format!(
                    "band {band} has {} samples, expected {len}",
                    seq.len()
                )));
            }
        }
        Ok(Self { grid, bands, len })
    }

    pub fn zero(grid: BandGrid, len: usize) -> Result<Self> {
        Self::new(grid, BTreeMap::new(), len)
    }

    pub fn grid(&self) -> &BandGrid {
        &self.grid
    }

    /// Sorted occupied band indices.
    pub fn support(&self) -> Vec<BandIndex> {
        self.bands.keys().copied().collect()
    }

    pub fn sparsity(&self) -> usize {
        self.bands.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn band(&self, band: BandIndex) -> Option<&[C64]> {
        self.bands.get(&band).map(Vec::as_slice)
    }

    pub fn bands(&self) -> &BTreeMap<BandIndex, Vec<C64>> {
        &self.bands
    }

    /// The same signal multiplied by `e^{iφ}`.
    pub fn rotated(&self, phase: f64) -> Self {
        let rot = C64::from_polar(1.0, phase);
        let bands = self
            .bands
            .iter()
            .map(|(&l, seq)| (l, seq.iter().map(|&v| v * rot).collect()))
            .collect();
        Self {
            grid: self.grid,
            bands,
            len: self.len,
        }
    }

    /// `L × T` matrix whose row `l + L0` holds `x_l[·]`; unoccupied rows are zero.
    pub fn band_matrix(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.grid.band_count(), self.len);
        for (&band, seq) in &self.bands {
            let row = (band + self.grid.half_count()) as usize;
            for (n, &v) in seq.iter().enumerate() {
                out[(row, n)] = v;
            }
        }
        out
    }

    /// Builds a signal from an `L × T` band matrix, keeping the listed bands.
    pub fn from_band_matrix(grid: BandGrid, support: &[BandIndex], mat: &CMatrix) -> Result<Self> {
        if mat.nrows() != grid.band_count() {
            return Err(Error::Config(format!(
                "band matrix has {} rows, grid has {} bands",
                mat.nrows(),
                grid.band_count()
            )));
        }
        let mut bands = BTreeMap::new();
        for &band in support {
            let row = grid.position_of(band)?;
            bands.insert(band, mat.row(row).iter().copied().collect());
        }
        Self::new(grid, bands, mat.ncols())
    }

    pub fn vector_at(&self, n: usize) -> Result<CVector> {
        if n >= self.len {
            return Err(Error::Index {
                index: n as i64,
                range: format!("0..{}", self.len),
            });
        }
        let mut out = CVector::zeros(self.grid.band_count());
        for (&band, seq) in &self.bands {
            out[(band + self.grid.half_count()) as usize] = seq[n];
        }
        Ok(out)
    }

    pub fn eval_time(&self, t: f64, truncation: usize) -> C64 {
        series_value(&self.grid, &self.bands, self.len, t, truncation)
    }

    /// Writes `band,n,re,im` rows for every occupied band.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["band", "n", "re", "im"])?;
        for (&band, seq) in &self.bands {
            for (n, v) in seq.iter().enumerate() {
                wtr.write_record([
                    band.to_string(),
                    n.to_string(),
                    format_real(v.re),
                    format_real(v.im),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads the `band,n,re,im` format. Every band present in the file is
    /// treated as occupied.
    pub fn read_csv<R: Read>(grid: BandGrid, input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["band", "n", "re", "im"] {
            return Err(Error::Parse(format!("unexpected signal header {header:?}")));
        }
        let mut cells: BTreeMap<BandIndex, BTreeMap<usize, C64>> = BTreeMap::new();
        for record in rdr.records() {
            let record = record?;
            let band: BandIndex = parse_field(&record, 0)?;
            let n: usize = parse_field(&record, 1)?;
            let re: f64 = parse_field(&record, 2)?;
            let im: f64 = parse_field(&record, 3)?;
            if cells.entry(band).or_default().insert(n, C64::new(re, im)).is_some() {
                return Err(Error::Parse(format!("duplicate row for band {band}, n = {n}")));
            }
        }
        let len = cells.values().map(BTreeMap::len).max().unwrap_or(0);
        let mut bands = BTreeMap::new();
        for (band, seq) in cells {
            if seq.len() != len || seq.keys().copied().ne(0..len) {
                return Err(Error::Parse(format!("band {band} has gaps in its time indices")));
            }
            bands.insert(band, seq.into_values().collect());
        }
        Self::new(grid, bands, len)
    }
}

pub(crate) fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize) -> Result<T> {
    let raw = record
        .get(idx)
        .ok_or_else(|| Error::Parse(format!("missing column {idx} in {record:?}")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("cannot parse {raw:?} in column {idx}")))
}

/// 17 significant digits, round-trip exact for `f64`.
pub(crate) fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn random_signal(grid: BandGrid, sparsity: usize, len: usize, seed: u64) -> Result<MultibandSignal> {
    if sparsity == 0 || sparsity >= grid.band_count() {
        return Err(Error::Config(format!(
            "sparsity must satisfy 1 <= N < L = {}, got {sparsity}",
            grid.band_count()
        )));
    }
    if len < 2 {
        return Err(Error::Config(format!("signal length must be at least 2, got {len}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut positions = index::sample(&mut rng, grid.band_count(), sparsity).into_vec();
    positions.sort_unstable();
    let mut bands = BTreeMap::new();
    for pos in positions {
        let seq = (0..len).map(|_| complex_gaussian(&mut rng)).collect();
        bands.insert(grid.band_at(pos), seq);
    }
    MultibandSignal::new(grid, bands, len)
}

pub fn signal_vector_at(sig: &MultibandSignal, n: usize) -> Result<CVector> {
    sig.vector_at(n)
}

pub fn eval_time(sig: &MultibandSignal, t: f64, truncation: usize) -> C64 {
    sig.eval_time(t, truncation)
}

/// Normalized sinc, `sin(πx)/(πx)`, exactly zero at nonzero integers.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.fract() == 0.0 {
        0.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// `Ωt` in sample units, snapped to the nearest integer when it lies within
/// a few ulps of one so grid instants interpolate exactly.
fn sample_coordinate(grid: &BandGrid, t: f64) -> f64 {
    let u = t * grid.band_width();
    let r = u.round();
    if (u - r).abs() <= 4.0 * f64::EPSILON * r.abs().max(1.0) {
        r
    } else {
        u
    }
}

/// Truncated sampling series shared by ground-truth evaluation and
/// reconstruction:
/// `Σ_l (Σ_n x_l[n] sinc(Ωt - n)) e^{+i2π lΩt}` over `|n - round(Ωt)| <= K`,
/// clipped to `[0, T-1]`.
pub(crate) fn series_value(
    grid: &BandGrid,
    bands: &BTreeMap<BandIndex, Vec<C64>>,
    len: usize,
    t: f64,
    truncation: usize,
) -> C64 {
    let u = sample_coordinate(grid, t);
    let centre = u.round() as i64;
    let lo = (centre - truncation as i64).max(0);
    let hi = (centre + truncation as i64).min(len as i64 - 1);
    let mut total = C64::new(0.0, 0.0);
    if lo > hi {
        return total;
    }
    let kernel: Vec<f64> = (lo..=hi).map(|n| sinc(u - n as f64)).collect();
    for (&band, seq) in bands {
        let mut base = C64::new(0.0, 0.0);
        for (w, n) in kernel.iter().zip(lo..=hi) {
            if *w != 0.0 {
                base += seq[n as usize] * *w;
            }
        }
        // reduce the phase l·u modulo 1 before scaling by 2π
        let turns = (band as f64 * u).rem_euclid(1.0);
        total += base * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * turns);
    }
    total
}
