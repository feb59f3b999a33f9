use nalgebra::{DMatrix, DVector};

use super::{ensure_finite, singular_values};
use crate::error::{Error, Result};

/// When to stop the column-pivoted factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// Stop after exactly `r` pivots.
    FixedRank(usize),
    /// Stop at the first rank whose trailing residual has Frobenius norm
    /// at most the given absolute tolerance.
    Tolerance(f64),
}

/// Truncated column-pivoted QR: `U P ≈ Q [R11 | R12]`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// m × r, orthonormal columns.
    pub q: DMatrix<f64>,
    /// r × r upper triangular.
    pub r11: DMatrix<f64>,
    /// r × (N − r).
    pub r12: DMatrix<f64>,
    /// `permutation[j]` is the original index of the j-th pivoted column.
    pub permutation: Vec<usize>,
    /// Frobenius norm of the unfactored trailing block.
    pub trailing_norm: f64,
}

impl PivotedQr {
    pub fn rank(&self) -> usize {
        self.r11.nrows()
    }
}

/// Householder QR with greedy column pivoting (largest remaining column norm).
///
/// Trailing column norms are recomputed at every step rather than downdated,
/// so the tolerance test never suffers from cancellation.
pub fn pivoted_qr(u: &DMatrix<f64>, termination: Termination) -> Result<PivotedQr> {
    ensure_finite(u)?;
    let (m, n) = u.shape();
    if m == 0 || n == 0 {
        return Err(Error::Dimension("pivoted_qr on an empty matrix".into()));
    }
    let kmax = m.min(n);
    let target = match termination {
        Termination::FixedRank(r) => {
            if r > kmax {
                return Err(Error::Dimension(format!(
                    "rank {r} exceeds min(m, N) = {kmax}"
                )));
            }
            Some(r)
        }
        Termination::Tolerance(tol) => {
            if !(tol >= 0.0) {
                return Err(Error::Data(format!("invalid ID tolerance {tol}")));
            }
            None
        }
    };

    let mut a = u.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut reflectors: Vec<(DVector<f64>, f64)> = Vec::new();
    let mut norms2 = vec![0.0; n];
    let mut rank = 0;

    loop {
        let k = rank;
        for (j, slot) in norms2.iter_mut().enumerate().skip(k) {
            *slot = if k < m {
                a.view((k, j), (m - k, 1)).norm_squared()
            } else {
                0.0
            };
        }
        let trailing: f64 = norms2[k..].iter().sum::<f64>().sqrt();
        match (target, termination) {
            (Some(r), _) if k == r => break,
            (None, Termination::Tolerance(tol)) if trailing <= tol || k == kmax => break,
            _ => {}
        }

        let mut p = k;
        for j in k + 1..n {
            if norms2[j] > norms2[p] {
                p = j;
            }
        }
        if p != k {
            a.swap_columns(k, p);
            perm.swap(k, p);
            norms2.swap(k, p);
        }

        let (v, beta) = householder(&a.view((k, k), (m - k, 1)).column(0).into_owned());
        if beta != 0.0 {
            let mut block = a.view_mut((k, k), (m - k, n - k));
            let w = block.tr_mul(&v) * beta;
            block.ger(-1.0, &v, &w, 1.0);
        }
        for i in k + 1..m {
            a[(i, k)] = 0.0;
        }
        reflectors.push((v, beta));
        rank += 1;
    }

    let trailing_norm = if rank < m && rank < n {
        a.view((rank, rank), (m - rank, n - rank)).norm()
    } else {
        0.0
    };

    let mut q = DMatrix::<f64>::zeros(m, rank);
    for i in 0..rank {
        q[(i, i)] = 1.0;
    }
    for (k, (v, beta)) in reflectors.iter().enumerate().rev() {
        if *beta == 0.0 {
            continue;
        }
        let mut block = q.view_mut((k, 0), (m - k, rank));
        let w = block.tr_mul(v) * *beta;
        block.ger(-1.0, v, &w, 1.0);
    }

    let r11 = a.view((0, 0), (rank, rank)).upper_triangle();
    let r12 = a.view((0, rank), (rank, n - rank)).into_owned();
    Ok(PivotedQr {
        q,
        r11,
        r12,
        permutation: perm,
        trailing_norm,
    })
}

/// Householder vector `v` (with `v[0] = 1`) and `beta` such that
/// `(I − beta v vᵀ) x = ∓‖x‖ e₁`.
fn householder(x: &DVector<f64>) -> (DVector<f64>, f64) {
    let mut v = x.clone();
    let alpha = x.norm();
    if alpha == 0.0 {
        v.fill(0.0);
        v[0] = 1.0;
        return (v, 0.0);
    }
    let x0 = x[0];
    let v0 = if x0 >= 0.0 { x0 + alpha } else { x0 - alpha };
    v /= v0;
    v[0] = 1.0;
    let beta = 2.0 / v.norm_squared();
    (v, beta)
}

/// Condition threshold above which triangular solves switch to a truncated SVD.
pub const CONDITION_LIMIT: f64 = 1e10;
/// Relative singular value cutoff for the truncated solve.
pub const SVD_TRUNCATION: f64 = 1e-12;

/// Solve `R11 T = R12`.
///
/// Uses back-substitution when `R11` is well conditioned, otherwise the
/// minimum-Frobenius-norm solution from a truncated SVD of `R11`.
pub fn solve_t(r11: &DMatrix<f64>, r12: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = r11.nrows();
    if r11.ncols() != r || r12.nrows() != r {
        return Err(Error::Dimension(format!(
            "solve_t: R11 is {}x{}, R12 is {}x{}",
            r11.nrows(),
            r11.ncols(),
            r12.nrows(),
            r12.ncols()
        )));
    }
    if r == 0 || r12.ncols() == 0 {
        return Ok(DMatrix::zeros(r, r12.ncols()));
    }
    let sv = singular_values(r11)?;
    let (smax, smin) = (sv[0], sv[r - 1]);
    if smin > 0.0 && smax / smin < CONDITION_LIMIT {
        Ok(back_substitute(r11, r12))
    } else {
        Ok(truncated_pinv(r11, SVD_TRUNCATION) * r12)
    }
}

pub(crate) fn back_substitute(r: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = r.nrows();
    let mut x = b.clone();
    for col in 0..b.ncols() {
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in i + 1..n {
                s -= r[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / r[(i, i)];
        }
    }
    x
}

/// Pseudo-inverse keeping singular values above `rel * σ₁`.
pub(crate) fn truncated_pinv(a: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = smax * rel;
    let mut pinv = DMatrix::zeros(a.ncols(), a.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            pinv += (vt.row(i).transpose() / s) * u.column(i).transpose();
        }
    }
    pinv
}
