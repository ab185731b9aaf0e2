//! Per-instant phase retrieval and phase propagation.
//!
//! Every measurement vector `ψ_{k,m}` touches only the hub coordinate `z₁`
//! and one other coordinate `z_{m+1}`, so the `4(M-1)` squared magnitudes
//! at an instant split into `M-1` independent two-dimensional problems.
//! Each one has the form
//!
//! ```text
//! c_k = |conj(α₁[k]) u + conj(α₂[k]) v|²
//!     = p |α₁|² + q |α₂|² + 2 Re(β_k) Re(w) - 2 Im(β_k) Im(w)
//! ```
//!
//! with `p = |u|²`, `q = |v|²`, `w = u conj(v)` and `β_k = conj(α₁[k]) α₂[k]`,
//! which is linear in `(p, q, Re w, Im w)` and is inverted by one 4×4 real
//! solve. The propagation branch is the same problem with
//! `(u, v) = (z₁[n], z₁[n-1])`; its cross term carries the phase step
//! between consecutive instants.

use nalgebra::Matrix4;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frontend::{AlphaPair, MeasurementSet, MixingConfig};
use crate::model::{CMatrix, CVector, C64};

/// Default relative threshold on the hub magnitude, `|z̃₁| >= eps_z ||z̃||`.
pub const DEFAULT_EPS_Z: f64 = 1e-6;

/// Maps `(p, q, Re w, Im w)` to the four squared magnitudes.
pub fn pair_system_matrix(alphas: &[AlphaPair; 4]) -> Matrix4<f64> {
    let mut mat = Matrix4::zeros();
    for (k, [a1, a2]) in alphas.iter().enumerate() {
        let beta = a1.conj() * a2;
        mat[(k, 0)] = a1.norm_sqr();
        mat[(k, 1)] = a2.norm_sqr();
        mat[(k, 2)] = 2.0 * beta.re;
        mat[(k, 3)] = -2.0 * beta.im;
    }
    mat
}

/// Recovered `(|u|², |v|², u conj(v))` of one two-dimensional instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSolution {
    pub p: f64,
    pub q: f64,
    pub w: C64,
    /// `| |w|² - p q |`.
    pub defect: f64,
}

impl PairSolution {
    /// Rank-1 defect normalized by `max(1, p q)`.
    pub fn relative_defect(&self) -> f64 {
        self.defect / (self.p * self.q).max(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairTolerance {
    /// Negative `p`, `q` above `-clamp · max(1, Σc)` are set to zero.
    pub clamp: f64,
    /// Largest accepted relative rank-1 defect. `None` accepts everything
    /// and clamps any negative magnitude, which is what noisy data needs.
    pub defect: Option<f64>,
}

impl Default for PairTolerance {
    fn default() -> Self {
        Self {
            clamp: 1e-12,
            defect: Some(1e-8),
        }
    }
}

impl PairTolerance {
    pub fn lenient() -> Self {
        Self {
            clamp: 1e-12,
            defect: None,
        }
    }
}

/// Inverts the 4×4 pair system for a fixed α-quadruple.
#[derive(Clone, Debug)]
pub struct PairSolver {
    inverse: Matrix4<f64>,
    tol: PairTolerance,
}

impl PairSolver {
    pub fn new(alphas: &[AlphaPair; 4], tol: PairTolerance) -> Result<Self> {
        let mat = pair_system_matrix(alphas);
        let scale = mat.norm().max(f64::MIN_POSITIVE);
        let det = mat.determinant();
        if det.abs() <= 1e-12 * scale.powi(4) {
            return Err(Error::Config(format!(
                "α-quadruple gives a singular pair system (det = {det:.3e})"
            )));
        }
        let inverse = mat
            .try_inverse()
            .ok_or_else(|| Error::Config("α-quadruple gives a singular pair system".into()))?;
        Ok(Self { inverse, tol })
    }

    pub fn tolerance(&self) -> PairTolerance {
        self.tol
    }

    pub fn solve(&self, c: &[f64; 4]) -> Result<PairSolution> {
        let rhs = nalgebra::Vector4::from_column_slice(c);
        let sol = self.inverse * rhs;
        let floor = self.tol.clamp * c.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        let clamp = |v: f64, name: &str| -> Result<f64> {
            if v >= 0.0 {
                Ok(v)
            } else if v > -floor || self.tol.defect.is_none() {
                Ok(0.0)
            } else {
                Err(Error::Inconsistent(format!("|{name}|² estimate is negative ({v:.3e})")))
            }
        };
        let p = clamp(sol[0], "u")?;
        let q = clamp(sol[1], "v")?;
        let w = C64::new(sol[2], sol[3]);
        let out = PairSolution {
            p,
            q,
            w,
            defect: (w.norm_sqr() - p * q).abs(),
        };
        if let Some(limit) = self.tol.defect {
            if out.relative_defect() > limit {
                return Err(Error::Inconsistent(format!(
                    "rank-1 defect {:.3e} exceeds {limit:.1e}",
                    out.relative_defect()
                )));
            }
        }
        Ok(out)
    }
}

pub fn solve_pair(c: &[f64; 4], alphas: &[AlphaPair; 4]) -> Result<PairSolution> {
    PairSolver::new(alphas, PairTolerance::default())?.solve(c)
}

/// Per-instant estimate `z̃[n] = z[n] e^{iθ_n}`, gauged so `z̃₁ >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameEstimate {
    pub z_tilde: CVector,
    pub hub_magnitude: f64,
    /// `(max p - min p) / mean p` over the `M-1` hub estimates.
    pub hub_spread: f64,
    /// Largest relative rank-1 defect among the pair solves.
    pub max_defect: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RetrievalOptions {
    pub eps_z: f64,
    pub tol: PairTolerance,
}

impl Default for RetrievalOptions {
    fn default() -> Self {
        Self {
            eps_z: DEFAULT_EPS_Z,
            tol: PairTolerance::default(),
        }
    }
}

/// Reusable per-instant solver bound to one mixing configuration.
#[derive(Clone, Debug)]
pub struct FrameRecovery {
    m: usize,
    solver: PairSolver,
    eps_z: f64,
}

impl FrameRecovery {
    pub fn new(cfg: &MixingConfig, opts: &RetrievalOptions) -> Result<Self> {
        Ok(Self {
            m: cfg.m(),
            solver: PairSolver::new(cfg.alphas(), opts.tol)?,
            eps_z: opts.eps_z,
        })
    }

    pub fn recover(&self, main_row: &[f64]) -> Result<FrameEstimate> {
        let width = 4 * (self.m - 1);
        if main_row.len() != width {
            return Err(Error::Config(format!(
                "expected {width} main samples per instant, got {}",
                main_row.len()
            )));
        }
        let pairs = main_row
            .chunks_exact(4)
            .map(|c| self.solver.solve(&[c[0], c[1], c[2], c[3]]))
            .collect::<Result<Vec<_>>>()?;

        let count = pairs.len() as f64;
        let p_mean = pairs.iter().map(|s| s.p).sum::<f64>() / count;
        let energy = p_mean + pairs.iter().map(|s| s.q).sum::<f64>();
        let hub = p_mean.sqrt();
        let threshold = self.eps_z * energy.sqrt();
        if hub.is_nan() || hub <= threshold {
            return Err(Error::HubVanishing {
                n: 0,
                magnitude: hub,
                threshold,
            });
        }

        let (p_min, p_max) = pairs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.p), hi.max(s.p)));
        let mut z = CVector::zeros(self.m);
        z[0] = C64::new(hub, 0.0);
        for (j, s) in pairs.iter().enumerate() {
            z[j + 1] = s.w.conj() / hub;
        }
        Ok(FrameEstimate {
            z_tilde: z,
            hub_magnitude: hub,
            hub_spread: (p_max - p_min) / p_mean,
            max_defect: pairs.iter().map(PairSolution::relative_defect).fold(0.0, f64::max),
        })
    }

    /// Recovers every instant. On failure, reports the earliest offending `n`.
    pub fn recover_all(&self, ms: &MeasurementSet) -> Result<Vec<FrameEstimate>> {
        let results: Vec<Result<FrameEstimate>> = (0..ms.len())
            .into_par_iter()
            .map(|n| self.recover(ms.main_row(n)).map_err(|e| e.at_instant(n)))
            .collect();
        results.into_iter().collect()
    }
}

pub fn recover_frame(main_row: &[f64], cfg: &MixingConfig, opts: &RetrievalOptions) -> Result<FrameEstimate> {
    FrameRecovery::new(cfg, opts)?.recover(main_row)
}

/// Unit phase steps `e^{i(θ_n - θ_{n-1})}` with the leading entry fixed to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Increments {
    pub values: Vec<C64>,
    pub max_defect: f64,
}

/// Resolves the per-instant phase offsets from the propagation branch.
///
/// `hub_seq[n]` is the gauged hub estimate `z̃₁[n]`; `prop[n]` the four
/// propagation samples. Row 0 of `prop` is not used.
pub fn phase_increments(
    hub_seq: &[C64],
    prop: &[[f64; 4]],
    alphas: &[AlphaPair; 4],
    opts: &RetrievalOptions,
) -> Result<Increments> {
    if hub_seq.len() != prop.len() {
        return Err(Error::Config(format!(
            "{} hub samples but {} propagation rows",
            hub_seq.len(),
            prop.len()
        )));
    }
    let solver = PairSolver::new(alphas, opts.tol)?;
    let eps2 = opts.eps_z * opts.eps_z;
    let steps: Vec<Result<(C64, f64)>> = (1..hub_seq.len())
        .into_par_iter()
        .map(|n| {
            let pair = solver.solve(&prop[n]).map_err(|e| e.at_instant(n))?;
            let magnitude = pair.w.norm();
            let threshold = eps2 * (pair.p + pair.q);
            if magnitude.is_nan() || magnitude <= threshold {
                return Err(Error::PropagationBreakdown {
                    n,
                    magnitude,
                    threshold,
                });
            }
            let ratio = hub_seq[n] * hub_seq[n - 1].conj() / pair.w;
            let norm = ratio.norm();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::HubVanishing {
                    n,
                    magnitude: hub_seq[n].norm().min(hub_seq[n - 1].norm()),
                    threshold: 0.0,
                });
            }
            Ok((ratio / norm, pair.relative_defect()))
        })
        .collect();

    let mut values = Vec::with_capacity(hub_seq.len());
    let mut max_defect: f64 = 0.0;
    if !hub_seq.is_empty() {
        values.push(C64::new(1.0, 0.0));
    }
    for step in steps {
        let (inc, defect) = step?;
        values.push(inc);
        max_defect = max_defect.max(defect);
    }
    Ok(Increments { values, max_defect })
}

/// Applies the accumulated phase corrections: column `n` is
/// `z̃[n] Π_{j<=n} conj(increment_j)`.
pub fn align_phases(frames: &[FrameEstimate], increments: &[C64]) -> Result<CMatrix> {
    if frames.len() != increments.len() {
        return Err(Error::Config(format!(
            "{} frames but {} increments",
            frames.len(),
            increments.len()
        )));
    }
    let m = frames.first().map_or(0, |f| f.z_tilde.len());
    let mut out = CMatrix::zeros(m, frames.len());
    let mut gauge = C64::new(1.0, 0.0);
    for (n, (frame, inc)) in frames.iter().zip(increments).enumerate() {
        if frame.z_tilde.len() != m {
            return Err(Error::Config(format!("frame {n} has the wrong dimension")));
        }
        gauge *= inc.conj();
        gauge /= gauge.norm();
        out.set_column(n, &(&frame.z_tilde * gauge));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{acquire, alpha_quadruple, make_constants, make_mixing_config};
    use crate::model::{complex_gaussian, make_grid, random_signal, rng_from_seed};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn quad() -> [AlphaPair; 4] {
        let (a, b) = make_constants();
        alpha_quadruple(a, b)
    }

    /// Forward oracle: squared magnitudes `|conj(α₁)u + conj(α₂)v|²`.
    fn forward(u: C64, v: C64, alphas: &[AlphaPair; 4]) -> [f64; 4] {
        let mut c = [0.0; 4];
        for (slot, [a1, a2]) in c.iter_mut().zip(alphas) {
            *slot = (a1.conj() * u + a2.conj() * v).norm_sqr();
        }
        c
    }

    /// Forward oracle for a whole frame: `|⟨z, ψ_{k,m}⟩|²` with Ψ built directly.
    fn frame_measurements(z: &CVector, cfg: &MixingConfig) -> Vec<f64> {
        (cfg.psi() * z).iter().map(|v| v.norm_sqr()).collect()
    }

    fn phase_distance(est: &CVector, truth: &CVector) -> f64 {
        let inner = est.dotc(truth);
        let rot = if inner.norm() > 0.0 { inner / inner.norm() } else { C64::new(1.0, 0.0) };
        (est * rot - truth).norm()
    }

    #[test]
    fn pair_matrix_for_standard_quadruple() {
        let mat = pair_system_matrix(&quad());
        let expected = [
            [0.211_324_865_405, 0.788_675_134_595, -0.577_350_269_19, 0.577_350_269_19],
            [0.788_675_134_595, 0.211_324_865_405, -0.577_350_269_19, -0.577_350_269_19],
            [0.211_324_865_405, 0.788_675_134_595, 0.577_350_269_19, -0.577_350_269_19],
            [0.788_675_134_595, 0.211_324_865_405, 0.577_350_269_19, 0.577_350_269_19],
        ];
        for r in 0..4 {
            for c in 0..4 {
                assert_relative_eq!(mat[(r, c)], expected[r][c], epsilon = 1e-11);
            }
        }
        assert_relative_eq!(mat.determinant(), -1.539_600_717_839_002, epsilon = 1e-12);
    }

    #[test]
    fn pair_matrix_for_interferometric_quadruple() {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let alphas = [[one, zero], [zero, one], [h, h], [h, C64::new(0.0, FRAC_1_SQRT_2)]];
        let mat = pair_system_matrix(&alphas);
        let expected = Matrix4::new(
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.5, 0.5, 1.0, 0.0, //
            0.5, 0.5, 0.0, -1.0,
        );
        assert!((mat - expected).abs().max() < 1e-15);
        assert_relative_eq!(mat.determinant(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn solve_pair_hub_only() {
        let c = [0.211_324_865_405_187, 0.788_675_134_594_813, 0.211_324_865_405_187, 0.788_675_134_594_813];
        let s = solve_pair(&c, &quad()).unwrap();
        assert_relative_eq!(s.p, 1.0, epsilon = 1e-12);
        assert!(s.q.abs() < 1e-12);
        assert!(s.w.norm() < 1e-12);
    }

    #[test]
    fn solve_pair_equal_entries() {
        let c = [0.422_649_730_810_374, 0.422_649_730_810_374, 1.577_350_269_189_63, 1.577_350_269_189_63];
        let s = solve_pair(&c, &quad()).unwrap();
        assert_relative_eq!(s.p, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.q, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.w.re, 1.0, epsilon = 1e-12);
        assert!(s.w.im.abs() < 1e-12);
    }

    #[test]
    fn solve_pair_inverts_forward_map() {
        let alphas = quad();
        let solver = PairSolver::new(&alphas, PairTolerance::default()).unwrap();
        let mut rng = rng_from_seed(17);
        for _ in 0..1000 {
            let u = complex_gaussian(&mut rng);
            let v = complex_gaussian(&mut rng);
            let s = solver.solve(&forward(u, v, &alphas)).unwrap();
            assert!((s.p - u.norm_sqr()).abs() < 1e-10);
            assert!((s.q - v.norm_sqr()).abs() < 1e-10);
            assert!((s.w - u * v.conj()).norm() < 1e-10);
            assert!(s.relative_defect() < 1e-10);
        }
    }

    #[test]
    fn solve_pair_rejects_singular_quadruple() {
        let (a, b) = make_constants();
        let alphas = [[a, b], [a, b], [a, -b], [-b, a]];
        assert!(matches!(solve_pair(&[1.0; 4], &alphas), Err(Error::Config(_))));
    }

    #[test]
    fn solve_pair_flags_inconsistent_data() {
        let alphas = quad();
        let mut c = forward(C64::new(1.0, 0.2), C64::new(-0.4, 0.7), &alphas);
        c[2] += 0.3;
        assert!(matches!(solve_pair(&c, &alphas), Err(Error::Inconsistent(_))));
        let lenient = PairSolver::new(&alphas, PairTolerance::lenient()).unwrap();
        let s = lenient.solve(&c).unwrap();
        assert!(s.relative_defect() > 1e-3);
    }

    #[test]
    fn frame_hub_only() {
        let cfg = make_mixing_config(4, 15).unwrap();
        let mut z = CVector::zeros(4);
        z[0] = C64::new(1.0, 0.0);
        let est = recover_frame(&frame_measurements(&z, &cfg), &cfg, &RetrievalOptions::default()).unwrap();
        assert!((est.z_tilde - z).norm() < 1e-12);
    }

    #[test]
    fn frame_two_dimensional() {
        let cfg = make_mixing_config(2, 3).unwrap();
        let z = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let est = recover_frame(&frame_measurements(&z, &cfg), &cfg, &RetrievalOptions::default()).unwrap();
        assert!((&est.z_tilde - &z).norm() < 1e-14);
        assert!(est.z_tilde[0].im == 0.0 && est.z_tilde[0].re > 0.0);
    }

    #[test]
    fn frame_random_vectors() {
        let cfg = make_mixing_config(4, 15).unwrap();
        let rec = FrameRecovery::new(&cfg, &RetrievalOptions::default()).unwrap();
        let mut rng = rng_from_seed(5);
        let mut tried = 0;
        while tried < 500 {
            let z = CVector::from_fn(4, |_, _| complex_gaussian(&mut rng));
            if z[0].norm() <= 0.1 {
                continue;
            }
            tried += 1;
            let est = rec.recover(&frame_measurements(&z, &cfg)).unwrap();
            assert!(phase_distance(&est.z_tilde, &z) < 1e-10 * z.norm());
            assert!(est.hub_spread < 1e-10);
        }
    }

    #[test]
    fn frame_reports_vanishing_hub() {
        let cfg = make_mixing_config(4, 15).unwrap();
        let z = CVector::from_vec(vec![
            C64::new(0.0, 0.0),
            C64::new(0.3, 1.0),
            C64::new(-1.0, 0.2),
            C64::new(0.5, 0.5),
        ]);
        let err = recover_frame(&frame_measurements(&z, &cfg), &cfg, &RetrievalOptions::default());
        assert!(matches!(err, Err(Error::HubVanishing { .. })));
    }

    #[test]
    fn frame_rejects_wrong_width() {
        let cfg = make_mixing_config(4, 15).unwrap();
        assert!(recover_frame(&[1.0; 8], &cfg, &RetrievalOptions::default()).is_err());
    }

    proptest! {
        #[test]
        fn frame_is_gauge_invariant(
            parts in proptest::collection::vec(-2.0f64..2.0, 8),
            phi in 0.0f64..(2.0 * PI),
        ) {
            let cfg = make_mixing_config(4, 15).unwrap();
            let z = CVector::from_fn(4, |i, _| C64::new(parts[2 * i], parts[2 * i + 1]));
            prop_assume!(z[0].norm() > 0.1 * z.norm());
            let rot = z.map(|v| v * C64::from_polar(1.0, phi));
            let opts = RetrievalOptions::default();
            let a = recover_frame(&frame_measurements(&z, &cfg), &cfg, &opts).unwrap();
            let b = recover_frame(&frame_measurements(&rot, &cfg), &cfg, &opts).unwrap();
            prop_assert!((a.z_tilde - b.z_tilde).norm() <= 1e-12 * z.norm().max(1.0));
        }

        #[test]
        fn pair_solution_is_rank_one(
            ur in -3.0f64..3.0, ui in -3.0f64..3.0, vr in -3.0f64..3.0, vi in -3.0f64..3.0,
        ) {
            let alphas = quad();
            let (u, v) = (C64::new(ur, ui), C64::new(vr, vi));
            let s = solve_pair(&forward(u, v, &alphas), &alphas).unwrap();
            prop_assert!(s.relative_defect() < 1e-10);
        }
    }

    #[test]
    fn increments_trivial_when_hub_is_positive() {
        let alphas = quad();
        let hub: Vec<C64> = [1.0, 0.5, 2.0, 1.3].iter().map(|&r| C64::new(r, 0.0)).collect();
        let prop: Vec<[f64; 4]> = (0..hub.len())
            .map(|n| forward(hub[n], if n == 0 { C64::new(0.0, 0.0) } else { hub[n - 1] }, &alphas))
            .collect();
        let inc = phase_increments(&hub, &prop, &alphas, &RetrievalOptions::default()).unwrap();
        for v in inc.values {
            assert!((v - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn increments_restore_rotating_hub() {
        let alphas = quad();
        let t = 12;
        let truth: Vec<C64> = (0..t).map(|n| C64::from_polar(1.0, PI * n as f64 / 4.0)).collect();
        let prop: Vec<[f64; 4]> = (0..t)
            .map(|n| forward(truth[n], if n == 0 { C64::new(0.0, 0.0) } else { truth[n - 1] }, &alphas))
            .collect();
        let gauged = vec![C64::new(1.0, 0.0); t];
        let inc = phase_increments(&gauged, &prop, &alphas, &RetrievalOptions::default()).unwrap();
        for n in 1..t {
            assert!((inc.values[n] - C64::from_polar(1.0, -PI / 4.0)).norm() < 1e-12);
        }
        let frames: Vec<FrameEstimate> = gauged
            .iter()
            .map(|&h| FrameEstimate {
                z_tilde: CVector::from_vec(vec![h, C64::new(0.0, 0.0)]),
                hub_magnitude: h.norm(),
                hub_spread: 0.0,
                max_defect: 0.0,
            })
            .collect();
        let z = align_phases(&frames, &inc.values).unwrap();
        let global = z[(0, 0)] / truth[0];
        for n in 0..t {
            assert!((z[(0, n)] - truth[n] * global).norm() < 1e-11);
        }
    }

    #[test]
    fn increments_break_down_on_zero_hub() {
        let alphas = quad();
        let truth = [C64::new(1.0, 0.5), C64::new(0.0, 0.0), C64::new(0.7, -0.2)];
        let prop: Vec<[f64; 4]> = (0..3)
            .map(|n| forward(truth[n], if n == 0 { C64::new(0.0, 0.0) } else { truth[n - 1] }, &alphas))
            .collect();
        let gauged: Vec<C64> = truth.iter().map(|v| C64::new(v.norm(), 0.0)).collect();
        let err = phase_increments(&gauged, &prop, &alphas, &RetrievalOptions::default()).unwrap_err();
        assert!(matches!(err, Error::PropagationBreakdown { n: 1, .. }), "{err}");
    }

    fn frame_of(values: &[C64]) -> FrameEstimate {
        FrameEstimate {
            z_tilde: CVector::from_column_slice(values),
            hub_magnitude: values[0].norm(),
            hub_spread: 0.0,
            max_defect: 0.0,
        }
    }

    #[test]
    fn align_identity_and_single_step() {
        let frames = vec![
            frame_of(&[C64::new(1.0, 0.0), C64::new(0.5, 0.5)]),
            frame_of(&[C64::new(2.0, 0.0), C64::new(-1.0, 0.25)]),
        ];
        let ones = vec![C64::new(1.0, 0.0); 2];
        let z = align_phases(&frames, &ones).unwrap();
        assert_eq!(z.column(0), frames[0].z_tilde.column(0));
        assert_eq!(z.column(1), frames[1].z_tilde.column(0));

        let inc = vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        let z = align_phases(&frames, &inc).unwrap();
        let expected = &frames[1].z_tilde * C64::new(0.0, -1.0);
        assert!((z.column(1) - expected).norm() < 1e-15);
        assert!(align_phases(&frames, &inc[..1]).is_err());
    }

    #[test]
    fn full_chain_matches_compressed_truth() {
        let grid = make_grid(7.5, 15).unwrap();
        let cfg = make_mixing_config(4, 15).unwrap();
        let sig = random_signal(grid, 2, 64, 21).unwrap();
        let ms = acquire(&sig, &cfg).unwrap();
        let opts = RetrievalOptions::default();
        let frames = FrameRecovery::new(&cfg, &opts).unwrap().recover_all(&ms).unwrap();
        let hub: Vec<C64> = frames.iter().map(|f| f.z_tilde[0]).collect();
        let inc = phase_increments(&hub, ms.prop_rows(), cfg.alphas(), &opts).unwrap();
        let z = align_phases(&frames, &inc.values).unwrap();
        let truth = cfg.b_mat() * sig.band_matrix();
        let inner: C64 = z.iter().zip(truth.iter()).map(|(a, b)| a.conj() * b).sum();
        let aligned = &z * (inner / inner.norm());
        assert!((aligned - &truth).norm() < 1e-9 * truth.norm());
    }
}
