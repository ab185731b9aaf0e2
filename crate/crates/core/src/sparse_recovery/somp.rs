use super::{MmvProblem, SupportEstimate, SupportStrategy};
use crate::error::{Error, Result};
use crate::model::CMatrix;

/// Simultaneous orthogonal matching pursuit.
///
/// Each round picks the column whose normalized correlations with the
/// current residual have the largest ℓ₂ norm across all `W` columns, then
/// re-projects `Z` onto the span of everything picked so far.
#[derive(Clone, Copy, Debug, Default)]
pub struct Somp;

impl SupportStrategy for Somp {
    fn name(&self) -> &'static str {
        "somp"
    }

    fn identify(&self, prob: &MmvProblem) -> Result<SupportEstimate> {
        let b = prob.b();
        let z = prob.z();
        let n = prob.sparsity();
        if n > b.nrows() {
            return Err(Error::Config(format!(
                "greedy search cannot select {n} columns with only {} rows",
                b.nrows()
            )));
        }
        let norms: Vec<f64> = b.column_iter().map(|c| c.norm()).collect();
        let mut chosen: Vec<usize> = Vec::with_capacity(n);
        let mut residual: CMatrix = z.clone();
        let mut residual_norm = z.norm();

        for _ in 0..n {
            let corr = b.adjoint() * &residual;
            let mut best: Option<(usize, f64)> = None;
            for (j, &norm) in norms.iter().enumerate() {
                if chosen.contains(&j) || norm == 0.0 {
                    continue;
                }
                let score = corr.row(j).norm() / norm;
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((j, score));
                }
            }
            let (pick, _) = best.ok_or_else(|| Error::Singular("B has no usable columns".into()))?;
            chosen.push(pick);
            let qr = b.select_columns(&chosen).qr();
            let q = qr.q();
            residual = z - &q * (q.adjoint() * z);
            residual_norm = residual.norm();
        }

        chosen.sort_unstable();
        Ok(SupportEstimate {
            support: chosen.into_iter().map(|c| prob.band_at(c)).collect(),
            residual: residual_norm,
            runner_up: None,
            z_norm: z.norm(),
            degenerate: z.norm() == 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_support::planted;
    use super::super::Exhaustive;
    use super::*;
    use crate::frontend::build_b;
    use crate::model::C64;

    #[test]
    fn single_row_matches_exhaustive() {
        let b = build_b(4, 15).unwrap();
        let row = CMatrix::from_fn(1, 4, |_, j| C64::new(0.3, j as f64));
        let z = b.select_columns(&[3]) * row;
        let prob = MmvProblem::new(z, b, 1).unwrap();
        let greedy = Somp.identify(&prob).unwrap();
        let full = Exhaustive::default().identify(&prob).unwrap();
        assert_eq!(greedy.support, vec![-4]);
        assert_eq!(greedy.support, full.support);
    }

    #[test]
    fn exact_under_orthogonal_columns() {
        // rows of the full 15-point DFT: all columns mutually orthogonal
        let b = build_b(15, 15).unwrap();
        for seed in 0..50 {
            let (z, support, _) = planted(&b, 3, 2, seed);
            let prob = MmvProblem::new(z, b.clone(), 3).unwrap();
            assert_eq!(Somp.identify(&prob).unwrap().support, support);
        }
    }

    #[test]
    fn never_beats_the_exhaustive_optimum() {
        // B has coherence near 0.9 between neighbours, so greedy picks often
        // land between two occupied bands; about 60% agree at this shape
        let b = build_b(4, 15).unwrap();
        let trials = 200;
        let mut agree = 0;
        for seed in 0..trials {
            let (z, _, _) = planted(&b, 2, 8, seed);
            let prob = MmvProblem::new(z, b.clone(), 2).unwrap();
            let greedy = Somp.identify(&prob).unwrap();
            let full = Exhaustive::default().identify(&prob).unwrap();
            assert!(full.residual <= greedy.residual + 1e-12 * full.z_norm);
            agree += usize::from(greedy.support == full.support);
        }
        assert!(agree * 2 >= trials as usize, "{agree}/{trials}");
    }

    #[test]
    fn more_columns_do_not_hurt() {
        let b = build_b(4, 15).unwrap();
        let rate = |width: usize| {
            (0..300u64)
                .filter(|&seed| {
                    let (z, support, _) = planted(&b, 2, width, 10_000 + seed);
                    let prob = MmvProblem::new(z, b.clone(), 2).unwrap();
                    Somp.identify(&prob).unwrap().support == support
                })
                .count()
        };
        let (single, multi) = (rate(1), rate(8));
        assert!(multi >= single, "W=8: {multi}, W=1: {single}");
    }

    #[test]
    fn rejects_sparsity_above_rows() {
        let b = build_b(2, 15).unwrap();
        let prob = MmvProblem::new(CMatrix::zeros(2, 1), b, 3).unwrap();
        assert!(Somp.identify(&prob).is_err());
    }
}
