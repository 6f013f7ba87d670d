//! Low-rank completion by truncated SVD and alternating projection.
//!
//! The input matrix is mean-filled on unobserved cells, truncated to rank d,
//! and then refined: each iteration pulls observed entries back toward the
//! input values,
//!
//! ```text
//! x_ij <- lambda * x_ij + (1 - lambda) * r_ij    for observed (i, j)
//! ```
//!
//! and every `t_reproject`-th iteration the whole iterate is re-projected
//! onto the rank-d manifold by SVD truncation. Clipping to the rating range
//! happens once, at the very end, and the result is dense: every cell holds
//! a prediction, with the original mask carried along.
//!
//! Singular vector signs are fixed (largest-magnitude component of each left
//! vector made non-negative) so repeated runs and re-projections are
//! bit-reproducible.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ratings::RatingMatrix;

/// Rank, mixing weight, iteration count, and re-projection period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowRankParams {
    pub rank_d: usize,
    pub lambda_mix: f64,
    pub n_iter: usize,
    pub t_reproject: usize,
}

impl LowRankParams {
    pub fn new(rank_d: usize, lambda_mix: f64, n_iter: usize, t_reproject: usize) -> Result<Self> {
        if rank_d == 0 {
            return Err(Error::InvalidParameter("rank_d must be >= 1".to_string()));
        }
        if !(0.0..=1.0).contains(&lambda_mix) {
            return Err(Error::InvalidParameter(format!(
                "lambda_mix {lambda_mix} outside [0, 1]"
            )));
        }
        if t_reproject == 0 {
            return Err(Error::InvalidParameter(
                "t_reproject must be >= 1".to_string(),
            ));
        }
        Ok(Self {
            rank_d,
            lambda_mix,
            n_iter,
            t_reproject,
        })
    }
}

/// Top-d singular triplet of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u_left: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v_right: DMatrix<f64>,
}

impl SvdFactors {
    /// `U * diag(sigma) * V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = self.sigma.len();
        let mut scaled = self.u_left.clone();
        for l in 0..d {
            for i in 0..scaled.nrows() {
                scaled[(i, l)] *= self.sigma[l];
            }
        }
        scaled * self.v_right.transpose()
    }
}

/// Copy observed cells, set everything else to `fill`.
pub fn fill_unobserved(r: &RatingMatrix, fill: f64) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(r.nrows(), r.ncols(), fill);
    for (i, j, v) in r.observed() {
        out[(i, j)] = v;
    }
    out
}

/// Top-d singular triplet with the deterministic sign convention. The
/// reconstruction is the Frobenius-optimal rank-d approximation.
pub fn truncated_svd(matrix: &DMatrix<f64>, d: usize) -> Result<SvdFactors> {
    let (m, n) = (matrix.nrows(), matrix.ncols());
    if d == 0 || d > m.min(n) {
        return Err(Error::RankOutOfRange { d, m, n });
    }
    // nalgebra returns singular values sorted in decreasing order.
    let svd = matrix.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");

    let mut u_left = DMatrix::zeros(m, d);
    let mut v_right = DMatrix::zeros(n, d);
    let mut sigma = Vec::with_capacity(d);
    for l in 0..d {
        sigma.push(svd.singular_values[l]);
        for i in 0..m {
            u_left[(i, l)] = u[(i, l)];
        }
        for j in 0..n {
            v_right[(j, l)] = v_t[(l, j)];
        }
    }

    // Sign convention: make the largest-magnitude component of each left
    // singular vector non-negative.
    for l in 0..d {
        let mut pivot = 0;
        for i in 1..m {
            if u_left[(i, l)].abs() > u_left[(pivot, l)].abs() {
                pivot = i;
            }
        }
        if u_left[(pivot, l)] < 0.0 {
            for i in 0..m {
                u_left[(i, l)] = -u_left[(i, l)];
            }
            for j in 0..n {
                v_right[(j, l)] = -v_right[(j, l)];
            }
        }
    }

    Ok(SvdFactors {
        u_left,
        sigma,
        v_right,
    })
}

/// Rank-d projection: truncated SVD followed by reconstruction.
fn project_rank_d(matrix: &DMatrix<f64>, d: usize) -> Result<DMatrix<f64>> {
    Ok(truncated_svd(matrix, d)?.reconstruct())
}

/// Complete a rating matrix: mean-fill, rank-d truncation, then `n_iter`
/// rounds of observed-entry mixing with periodic re-projection, clipped to
/// the rating range at the end. The returned matrix is dense with the
/// original mask attached.
pub fn stage3_complete(r2: &RatingMatrix, params: &LowRankParams) -> Result<RatingMatrix> {
    stage3_complete_observed(r2, params, |_, _| {})
}

/// As [`stage3_complete`], invoking `observer(t, iterate)` after each
/// observed-entry mixing step (before any re-projection that round).
pub(crate) fn stage3_complete_observed(
    r2: &RatingMatrix,
    params: &LowRankParams,
    mut observer: impl FnMut(usize, &DMatrix<f64>),
) -> Result<RatingMatrix> {
    let (m, n) = (r2.nrows(), r2.ncols());
    if params.rank_d > m.min(n) {
        return Err(Error::RankOutOfRange {
            d: params.rank_d,
            m,
            n,
        });
    }
    let fill = crate::ratings::global_mean(r2)?;
    let mut x = fill_unobserved(r2, fill);
    x = project_rank_d(&x, params.rank_d)?;

    for t in 0..params.n_iter {
        for (i, j, v) in r2.observed() {
            x[(i, j)] = params.lambda_mix * x[(i, j)] + (1.0 - params.lambda_mix) * v;
        }
        observer(t, &x);
        if (t + 1) % params.t_reproject == 0 {
            x = project_rank_d(&x, params.rank_d)?;
        }
    }

    let (lo, hi) = (r2.r_min(), r2.r_max());
    let clipped = x.map(|v| v.clamp(lo, hi));
    RatingMatrix::new(clipped, r2.mask().clone(), lo, hi)
}
