use itertools::Itertools;
use rayon::prelude::*;

use super::{has_full_column_rank, projection_residual, MmvProblem, SupportEstimate, SupportStrategy};
use crate::error::{Error, Result};

/// Largest number of candidate supports the exhaustive search will score.
pub const SUBSET_LIMIT: u128 = 1_000_000;

/// Residuals within this fraction of `||Z||_F` of the best count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Scores every `N`-subset of columns by its projection residual and keeps
/// the smallest; ties go to the lexicographically first subset.
#[derive(Clone, Copy, Debug)]
pub struct Exhaustive {
    pub limit: u128,
}

impl Default for Exhaustive {
    fn default() -> Self {
        Self { limit: SUBSET_LIMIT }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

impl SupportStrategy for Exhaustive {
    fn name(&self) -> &'static str {
        "exhaustive"
    }

    fn identify(&self, prob: &MmvProblem) -> Result<SupportEstimate> {
        let l = prob.band_count();
        let n = prob.sparsity();
        let count = binomial(l, n);
        if count > self.limit {
            return Err(Error::Scale {
                subsets: count,
                limit: self.limit,
            });
        }
        let z = prob.z();
        let z_norm = z.norm();
        let subsets: Vec<Vec<usize>> = (0..l).combinations(n).collect();
        let residuals: Vec<f64> = subsets
            .par_iter()
            .map(|cols| {
                let sub = prob.b().select_columns(cols);
                if sub.nrows() < sub.ncols() || !has_full_column_rank(&sub) {
                    return f64::INFINITY;
                }
                projection_residual(&sub.qr(), z)
            })
            .collect();

        let best = residuals.iter().copied().fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            return Err(Error::Singular(format!(
                "no {n}-column subset of B has full rank"
            )));
        }
        let cutoff = best + TIE_TOLERANCE * z_norm;
        let winner = residuals
            .iter()
            .position(|&r| r <= cutoff)
            .expect("minimum is attained");
        let runner_up = residuals
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != winner)
            .map(|(_, &r)| r)
            .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.min(r))));

        Ok(SupportEstimate {
            support: subsets[winner].iter().map(|&c| prob.band_at(c)).collect(),
            residual: residuals[winner],
            runner_up,
            z_norm,
            degenerate: z_norm == 0.0,
        })
    }
}
