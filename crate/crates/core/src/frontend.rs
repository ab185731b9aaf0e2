//! Measurement system construction and acquisition.
//!
//! The main front end has `4(M-1)` branches. Branch `(k, m)` mixes the
//! input with a `T_p`-periodic waveform whose Fourier coefficients are row
//! `4(m-1)+k-1` of `A = Ψ B`, low-pass filters to `Ω/2` and samples the
//! squared magnitude at rate `Ω`. Because every quantity involved is
//! bandlimited, this chain is simulated exactly in discrete form as
//! `|A x[n]|²`.
//!
//! The propagation front end mixes with `p₀` (coefficients `a₀`, the first
//! row of `B`), producing `z₁[n] = a₀ᵀ x[n]`, and forms four combinations of
//! the current and the delayed sample before squaring.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{Read, Write};

use itertools::Itertools;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{
    format_real, parse_field, rng_from_seed, BandGrid, CMatrix, CVector, MultibandSignal, C64,
};

/// Coefficient pair `(α₁[k], α₂[k])` weighting the undelayed and the
/// delayed sample of one propagation branch.
pub type AlphaPair = [C64; 2];

/// Relative singular-value threshold below which a column subset counts
/// as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// The two constants of the measurement vectors:
/// `a = sqrt((1 - 1/√3)/2)` and `b = e^{i5π/4} sqrt((1 + 1/√3)/2)`.
pub fn make_constants() -> (C64, C64) {
    let r = 1.0 / 3f64.sqrt();
    let a = ((1.0 - r) / 2.0).sqrt();
    let b_mag = ((1.0 + r) / 2.0).sqrt();
    // e^{i5π/4} = -(1 + i)/√2, written out to avoid trig rounding
    let b = C64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2) * b_mag;
    (C64::new(a, 0.0), b)
}

/// The quadruple `(a, b), (b, a), (a, -b), (-b, a)`.
pub fn alpha_quadruple(a: C64, b: C64) -> [AlphaPair; 4] {
    [[a, b], [b, a], [a, -b], [-b, a]]
}

/// Phase-retrieval matrix Ψ of size `(4M-4) × M`. Row `4(m-1)+k-1` is the
/// conjugate transpose of `ψ_{k,m}`, which is supported on coordinates
/// `0` and `m`.
pub fn build_psi(m: usize) -> Result<CMatrix> {
    if m < 2 {
        return Err(Error::Config(format!("phase retrieval dimension must be >= 2, got {m}")));
    }
    let (a, b) = make_constants();
    let quad = alpha_quadruple(a, b);
    let mut psi = CMatrix::zeros(4 * (m - 1), m);
    for j in 1..m {
        for (k, [hub, other]) in quad.iter().enumerate() {
            let row = 4 * (j - 1) + k;
            psi[(row, 0)] = hub.conj();
            psi[(row, j)] = other.conj();
        }
    }
    Ok(psi)
}

/// First `M` rows of the `L`-point DFT matrix with columns ordered
/// `l = -L0..=L0`: entry `(q, l) = e^{-i2π q l / L}`. Even `L` is accepted
/// with columns `l = -L/2..L/2`, for rank checks only.
pub fn build_b(m: usize, l: usize) -> Result<CMatrix> {
    if m < 2 || m > l {
        return Err(Error::Config(format!(
            "compressive matrix needs 2 <= M <= L, got M = {m}, L = {l}"
        )));
    }
    let half = (l / 2) as i64;
    Ok(CMatrix::from_fn(m, l, |q, col| {
        let band = col as i64 - half;
        // exponent reduced mod L in integers keeps the nodes exact
        let k = (q as i64 * band).rem_euclid(l as i64);
        if k == 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::from_polar(1.0, -2.0 * PI * k as f64 / l as f64)
        }
    }))
}

fn full_column_rank(mat: &CMatrix, cols: &[usize]) -> bool {
    let sub = mat.select_columns(cols);
    let sv = sub.singular_values();
    let max = sv.max();
    if max <= 0.0 {
        return false;
    }
    sv.iter().all(|&s| s > RANK_TOLERANCE * max)
}

/// Largest `k` such that every `k` columns of `mat` are linearly
/// independent. Exhaustive; intended for small matrices.
pub fn kruskal_rank(mat: &CMatrix) -> usize {
    let (rows, cols) = mat.shape();
    let mut rank = 0;
    for k in 1..=rows.min(cols) {
        // independence of every k-subset implies it for every smaller subset
        if (0..cols).combinations(k).all(|s| full_column_rank(mat, &s)) {
            rank = k;
        } else {
            break;
        }
    }
    rank
}

#[derive(Clone, Debug)]
pub struct MixingConfig {
    m: usize,
    psi: CMatrix,
    b_mat: CMatrix,
    a_mat: CMatrix,
    a0: CVector,
    alphas: [AlphaPair; 4],
    a_const: C64,
    b_const: C64,
}

impl MixingConfig {
    pub fn new(m: usize, l: usize) -> Result<Self> {
        let psi = build_psi(m)?;
        let b_mat = build_b(m, l)?;
        let (a_const, b_const) = make_constants();
        Ok(Self::assemble(psi, b_mat, a_const, b_const))
    }

    fn assemble(psi: CMatrix, b_mat: CMatrix, a_const: C64, b_const: C64) -> Self {
        let a_mat = &psi * &b_mat;
        let a0 = b_mat.row(0).transpose();
        Self {
            m: psi.ncols(),
            psi,
            b_mat,
            a_mat,
            a0,
            alphas: alpha_quadruple(a_const, b_const),
            a_const,
            b_const,
        }
    }

    /// Replaces Ψ (and therefore `A`) while keeping `B` and the constants.
    /// Used to model a miscalibrated front end.
    pub fn with_psi(&self, psi: CMatrix) -> Result<Self> {
        if psi.shape() != self.psi.shape() {
            return Err(Error::Config(format!(
                "Ψ must be {:?}, got {:?}",
                self.psi.shape(),
                psi.shape()
            )));
        }
        Ok(Self::assemble(psi, self.b_mat.clone(), self.a_const, self.b_const))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn band_count(&self) -> usize {
        self.b_mat.ncols()
    }

    /// Number of main branches, `4(M-1)`.
    pub fn main_branches(&self) -> usize {
        4 * (self.m - 1)
    }

    pub fn psi(&self) -> &CMatrix {
        &self.psi
    }

    pub fn b_mat(&self) -> &CMatrix {
        &self.b_mat
    }

    pub fn a_mat(&self) -> &CMatrix {
        &self.a_mat
    }

    pub fn a0(&self) -> &CVector {
        &self.a0
    }

    pub fn alphas(&self) -> &[AlphaPair; 4] {
        &self.alphas
    }

    pub fn constants(&self) -> (C64, C64) {
        (self.a_const, self.b_const)
    }

    /// Mixing-sequence coefficients of main branch `(k, m)`, both 1-based.
    pub fn branch_coefficients(&self, k: usize, m: usize) -> Option<Vec<C64>> {
        if !(1..=4).contains(&k) || m == 0 || m >= self.m {
            return None;
        }
        Some(self.a_mat.row(4 * (m - 1) + k - 1).iter().copied().collect())
    }
}

pub fn make_mixing_config(m: usize, l: usize) -> Result<MixingConfig> {
    MixingConfig::new(m, l)
}

/// Evaluates the `T_p`-periodic waveform `Σ_l a[l] e^{i2π l t / T_p}` with
/// `coeffs` ordered `l = -L0..=L0`.
pub fn mixing_waveform(coeffs: &[C64], grid: &BandGrid, t: f64) -> C64 {
    let cycles = t / grid.mixing_period();
    coeffs
        .iter()
        .enumerate()
        .map(|(pos, &c)| {
            let band = grid.band_at(pos) as f64;
            let turns = (band * cycles).rem_euclid(1.0);
            c * C64::from_polar(1.0, 2.0 * PI * turns)
        })
        .sum()
}

/// Squared-magnitude samples of both front ends.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    main_width: usize,
    main: Vec<f64>,
    prop: Vec<[f64; 4]>,
}

impl MeasurementSet {
    pub fn new(main_width: usize, main: Vec<f64>, prop: Vec<[f64; 4]>) -> Result<Self> {
        if main_width == 0 || !main_width.is_multiple_of(4) {
            return Err(Error::Config(format!(
                "main branch count must be a positive multiple of 4, got {main_width}"
            )));
        }
        if main.len() != main_width * prop.len() {
            return Err(Error::Config(format!(
                "{} main samples do not fill {} rows of width {main_width}",
                main.len(),
                prop.len()
            )));
        }
        if main.iter().chain(prop.iter().flatten()).any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::Config("measurements must be nonnegative".into()));
        }
        Ok(Self {
            main_width,
            main,
            prop,
        })
    }

    pub fn len(&self) -> usize {
        self.prop.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prop.is_empty()
    }

    /// `4(M-1)`.
    pub fn main_width(&self) -> usize {
        self.main_width
    }

    /// Main-branch samples at instant `n`; column `4(m-1)+k-1` holds branch `(k, m)`.
    pub fn main_row(&self, n: usize) -> &[f64] {
        &self.main[n * self.main_width..(n + 1) * self.main_width]
    }

    pub fn prop_row(&self, n: usize) -> &[f64; 4] {
        &self.prop[n]
    }

    pub fn prop_rows(&self) -> &[[f64; 4]] {
        &self.prop
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["n", "branch", "value"])?;
        for n in 0..self.len() {
            for (col, v) in self.main_row(n).iter().enumerate() {
                let branch = format!("m:{}:{}", col % 4 + 1, col / 4 + 1);
                wtr.write_record([n.to_string(), branch, format_real(*v)])?;
            }
            for (k, v) in self.prop[n].iter().enumerate() {
                wtr.write_record([n.to_string(), format!("p:{}", k + 1), format_real(*v)])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["n", "branch", "value"] {
            return Err(Error::Parse(format!("unexpected measurement header {header:?}")));
        }
        let mut main: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut prop: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut max_m = 0;
        let mut max_n = None;
        for record in rdr.records() {
            let record = record?;
            let n: usize = parse_field(&record, 0)?;
            let value: f64 = parse_field(&record, 2)?;
            let branch = record.get(1).unwrap_or_default();
            let parts: Vec<&str> = branch.split(':').collect();
            let bad = || Error::Parse(format!("malformed branch label {branch:?}"));
            let parse = |s: &str| s.parse::<usize>().map_err(|_| bad());
            let fresh = match parts.as_slice() {
                ["m", k, m] => {
                    let (k, m) = (parse(k)?, parse(m)?);
                    if !(1..=4).contains(&k) || m == 0 {
                        return Err(bad());
                    }
                    max_m = max_m.max(m);
                    main.insert((n, 4 * (m - 1) + k - 1), value).is_none()
                }
                ["p", k] => {
                    let k = parse(k)?;
                    if !(1..=4).contains(&k) {
                        return Err(bad());
                    }
                    prop.insert((n, k - 1), value).is_none()
                }
                _ => return Err(bad()),
            };
            if !fresh {
                return Err(Error::Parse(format!("duplicate sample n = {n}, branch {branch}")));
            }
            max_n = Some(max_n.map_or(n, |cur: usize| cur.max(n)));
        }
        let len = max_n.map_or(0, |n| n + 1);
        let width = 4 * max_m;
        if main.len() != len * width || prop.len() != len * 4 {
            return Err(Error::Parse("measurement file is missing samples".into()));
        }
        let main = main.into_values().collect();
        let mut rows = vec![[0.0; 4]; len];
        for ((n, k), v) in prop {
            rows[n][k] = v;
        }
        Self::new(width, main, rows)
    }
}

/// Simulates both front ends on `sig`.
pub fn acquire(sig: &MultibandSignal, cfg: &MixingConfig) -> Result<MeasurementSet> {
    if sig.grid().band_count() != cfg.band_count() {
        return Err(Error::Config(format!(
            "signal has {} bands, mixing config expects {}",
            sig.grid().band_count(),
            cfg.band_count()
        )));
    }
    let x = sig.band_matrix();
    let y = cfg.a_mat() * &x;
    let hub: Vec<C64> = (cfg.a0().transpose() * &x).iter().copied().collect();

    let width = cfg.main_branches();
    let mut main = Vec::with_capacity(width * sig.len());
    for n in 0..sig.len() {
        main.extend(y.column(n).iter().map(|v| v.norm_sqr()));
    }
    let alphas = cfg.alphas();
    let prop = (0..sig.len())
        .map(|n| {
            let current = hub[n];
            // no sample precedes n = 0
            let delayed = if n == 0 { C64::new(0.0, 0.0) } else { hub[n - 1] };
            let mut row = [0.0; 4];
            for (slot, [a1, a2]) in row.iter_mut().zip(alphas) {
                *slot = (a1.conj() * current + a2.conj() * delayed).norm_sqr();
            }
            row
        })
        .collect();
    MeasurementSet::new(width, main, prop)
}

fn perturbed(value: f64, delta: f64) -> f64 {
    (value + delta).max(0.0)
}

/// Adds i.i.d. Gaussian perturbations of standard deviation `sigma` to every
/// sample and clamps at zero.
pub fn add_noise(ms: &MeasurementSet, sigma: f64, seed: u64) -> Result<MeasurementSet> {
    if sigma.is_nan() || sigma < 0.0 || sigma.is_infinite() {
        return Err(Error::Config(format!("noise level must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(ms.clone());
    }
    let mut rng = rng_from_seed(seed);
    let mut draw = || -> f64 {
        let g: f64 = StandardNormal.sample(&mut rng);
        sigma * g
    };
    let main = ms.main.iter().map(|&v| perturbed(v, draw())).collect();
    let prop = ms
        .prop
        .iter()
        .map(|row| row.map(|v| perturbed(v, draw())))
        .collect();
    MeasurementSet::new(ms.main_width, main, prop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_grid, random_signal};
    use approx::assert_relative_eq;

    const A_EXPECTED: f64 = 0.459_700_843_380_983_06;
    const B_EXPECTED: f64 = -0.627_963_030_199_554_4;

    #[test]
    fn constants_match_closed_form() {
        let (a, b) = make_constants();
        assert_relative_eq!(a.re, A_EXPECTED, epsilon = 1e-15);
        assert_eq!(a.im, 0.0);
        assert_relative_eq!(b.re, B_EXPECTED, epsilon = 1e-15);
        assert_relative_eq!(b.im, B_EXPECTED, epsilon = 1e-15);
        assert_relative_eq!(a.norm_sqr() + b.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn psi_for_m2() {
        let psi = build_psi(2).unwrap();
        let (a, b) = make_constants();
        assert_eq!(psi.shape(), (4, 2));
        let expected = [
            [a.conj(), b.conj()],
            [b.conj(), a.conj()],
            [a.conj(), -b.conj()],
            [-b.conj(), a.conj()],
        ];
        for (r, row) in expected.iter().enumerate() {
            assert_eq!(psi[(r, 0)], row[0]);
            assert_eq!(psi[(r, 1)], row[1]);
        }
        assert_relative_eq!(psi[(0, 0)].re, A_EXPECTED, epsilon = 1e-15);
        assert_relative_eq!(psi[(0, 1)].re, B_EXPECTED, epsilon = 1e-15);
        assert_relative_eq!(psi[(0, 1)].im, -B_EXPECTED, epsilon = 1e-15);
    }

    #[test]
    fn psi_structure_for_m4() {
        let psi = build_psi(4).unwrap();
        assert_eq!(psi.shape(), (12, 4));
        let nonzeros = |c: usize| psi.column(c).iter().filter(|v| v.norm() > 0.0).count();
        assert_eq!(nonzeros(0), 12);
        for c in 1..4 {
            assert_eq!(nonzeros(c), 4);
        }
        for r in 0..12 {
            let support: Vec<usize> = (0..4).filter(|&c| psi[(r, c)].norm() > 0.0).collect();
            assert_eq!(support, vec![0, r / 4 + 1]);
            let norm: f64 = psi.row(r).iter().map(|v| v.norm_sqr()).sum();
            assert_relative_eq!(norm, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn psi_rejects_small_dimension() {
        assert!(matches!(build_psi(1), Err(Error::Config(_))));
    }

    #[test]
    fn b_small_case() {
        let b = build_b(2, 3).unwrap();
        let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
        let one = C64::new(1.0, 0.0);
        assert_eq!(b.row(0).iter().copied().collect::<Vec<_>>(), vec![one; 3]);
        assert_relative_eq!((b[(1, 0)] - w).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(b[(1, 1)], one);
        assert_relative_eq!((b[(1, 2)] - w.conj()).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(kruskal_rank(&b), 2);
    }

    #[test]
    fn b_rejects_oversized_m() {
        assert!(build_b(16, 15).is_err());
        assert!(build_b(1, 15).is_err());
    }

    #[test]
    fn kruskal_rank_small_cases() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let eye = CMatrix::identity(2, 2);
        assert_eq!(kruskal_rank(&eye), 2);
        let dup = CMatrix::from_row_slice(2, 2, &[one, one, C64::new(2.0, 1.0), C64::new(2.0, 1.0)]);
        assert_eq!(kruskal_rank(&dup), 1);
        let zero_col = CMatrix::from_row_slice(2, 2, &[one, zero, one, zero]);
        assert_eq!(kruskal_rank(&zero_col), 0);
    }

    #[test]
    fn kruskal_rank_of_dft_rows() {
        let b = build_b(4, 15).unwrap();
        assert_eq!(kruskal_rank(&b), 4);
    }

    #[test]
    fn mixing_config_assembly() {
        let cfg = make_mixing_config(4, 15).unwrap();
        assert_eq!(cfg.a_mat().shape(), (12, 15));
        assert_eq!(cfg.a_mat(), &(cfg.psi() * cfg.b_mat()));
        assert!(cfg.a0().iter().all(|&v| v == C64::new(1.0, 0.0)));
        let (a, b) = cfg.constants();
        assert_eq!(cfg.alphas()[2], [a, -b]);
        assert_relative_eq!(cfg.alphas()[2][1].re, -B_EXPECTED, epsilon = 1e-15);
        assert_relative_eq!(cfg.alphas()[2][1].im, -B_EXPECTED, epsilon = 1e-15);
        assert!(cfg.branch_coefficients(1, 4).is_none());
        assert_eq!(cfg.branch_coefficients(2, 3).unwrap().len(), 15);
    }

    #[test]
    fn waveform_cases() {
        let grid = make_grid(7.5, 15).unwrap();
        let zero = vec![C64::new(0.0, 0.0); 15];
        assert_eq!(mixing_waveform(&zero, &grid, 0.3), C64::new(0.0, 0.0));
        let mut dc = zero.clone();
        dc[grid.position_of(0).unwrap()] = C64::new(1.0, 0.0);
        for t in [0.0, 0.25, 1.7, -3.2] {
            assert_eq!(mixing_waveform(&dc, &grid, t), C64::new(1.0, 0.0));
        }
        let mut first = zero.clone();
        first[grid.position_of(1).unwrap()] = C64::new(1.0, 0.0);
        let v = mixing_waveform(&first, &grid, grid.mixing_period() / 2.0);
        assert_relative_eq!(v.re, -1.0, epsilon = 1e-15);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn waveform_is_periodic() {
        let grid = make_grid(2.5, 7).unwrap();
        let cfg = make_mixing_config(3, 7).unwrap();
        let coeffs = cfg.branch_coefficients(3, 2).unwrap();
        for t in [0.01, 0.4, 2.9] {
            let p0 = mixing_waveform(&coeffs, &grid, t);
            let p1 = mixing_waveform(&coeffs, &grid, t + grid.mixing_period());
            assert!((p0 - p1).norm() < 1e-12);
        }
    }

    #[test]
    fn acquire_zero_signal() {
        let grid = make_grid(7.5, 15).unwrap();
        let cfg = make_mixing_config(4, 15).unwrap();
        let ms = acquire(&MultibandSignal::zero(grid, 5).unwrap(), &cfg).unwrap();
        assert_eq!(ms.len(), 5);
        for n in 0..5 {
            assert!(ms.main_row(n).iter().all(|&v| v == 0.0));
            assert_eq!(ms.prop_row(n), &[0.0; 4]);
        }
    }

    #[test]
    fn acquire_single_band_constant() {
        let grid = make_grid(7.5, 15).unwrap();
        let cfg = make_mixing_config(4, 15).unwrap();
        let band = -3;
        let sig = MultibandSignal::new(
            grid,
            BTreeMap::from([(band, vec![C64::new(1.0, 0.0); 6])]),
            6,
        )
        .unwrap();
        let ms = acquire(&sig, &cfg).unwrap();
        let col = cfg.a_mat().column(grid.position_of(band).unwrap()).into_owned();
        for n in 0..6 {
            for (r, v) in ms.main_row(n).iter().enumerate() {
                assert_relative_eq!(*v, col[r].norm_sqr(), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn acquire_rejects_grid_mismatch() {
        let grid = make_grid(7.5, 15).unwrap();
        let cfg = make_mixing_config(4, 13).unwrap();
        let sig = random_signal(grid, 2, 8, 1).unwrap();
        assert!(matches!(acquire(&sig, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn first_propagation_row_sees_only_current_sample() {
        let grid = make_grid(7.5, 15).unwrap();
        let cfg = make_mixing_config(4, 15).unwrap();
        let sig = random_signal(grid, 2, 8, 3).unwrap();
        let ms = acquire(&sig, &cfg).unwrap();
        let z1: C64 = sig.bands().values().map(|s| s[0]).sum();
        for (k, [a1, _]) in cfg.alphas().iter().enumerate() {
            assert_relative_eq!(ms.prop_row(0)[k], a1.norm_sqr() * z1.norm_sqr(), epsilon = 1e-13);
        }
    }

    #[test]
    fn noise_identity_and_determinism() {
        let grid = make_grid(7.5, 15).unwrap();
        let cfg = make_mixing_config(4, 15).unwrap();
        let ms = acquire(&random_signal(grid, 2, 16, 7).unwrap(), &cfg).unwrap();
        assert_eq!(add_noise(&ms, 0.0, 11).unwrap(), ms);
        let n1 = add_noise(&ms, 0.1, 11).unwrap();
        let n2 = add_noise(&ms, 0.1, 11).unwrap();
        assert_eq!(n1, n2);
        assert_ne!(n1, ms);
        assert!(n1.prop_rows().iter().flatten().all(|&v| v >= 0.0));
        assert!(matches!(add_noise(&ms, -0.1, 1), Err(Error::Config(_))));
    }

    #[test]
    fn noise_clamps_at_zero() {
        assert_eq!(perturbed(0.001, -0.05), 0.0);
        assert_eq!(perturbed(0.5, 0.25), 0.75);
    }

    #[test]
    fn measurement_csv_round_trip() {
        let grid = make_grid(7.5, 15).unwrap();
        let cfg = make_mixing_config(3, 15).unwrap();
        let ms = acquire(&random_signal(grid, 1, 4, 2).unwrap(), &cfg).unwrap();
        let mut buf = Vec::new();
        ms.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,branch,value"));
        assert!(lines.next().unwrap().starts_with("0,m:1:1,"));
        assert!(text.contains("3,p:4,"));
        assert_eq!(MeasurementSet::read_csv(buf.as_slice()).unwrap(), ms);
    }

    #[test]
    fn measurement_csv_rejects_bad_labels() {
        let bad = "n,branch,value\n0,q:1,1.0\n";
        assert!(matches!(MeasurementSet::read_csv(bad.as_bytes()), Err(Error::Parse(_))));
        let dup = "n,branch,value\n0,p:1,1.0\n0,p:1,1.0\n";
        assert!(MeasurementSet::read_csv(dup.as_bytes()).is_err());
    }
}
