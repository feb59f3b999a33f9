use nalgebra::{DMatrix, DVector};

use super::qr::{
    back_substitute, pivoted_qr, truncated_pinv, Termination, CONDITION_LIMIT, SVD_TRUNCATION,
};
use super::{ensure_finite, singular_values};
use crate::error::{Error, Result};

/// A least-squares solver for a fixed basis, factored once and reused.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    rows: usize,
    cols: usize,
    kind: Factor,
}

#[derive(Debug, Clone)]
enum Factor {
    Qr {
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        permutation: Vec<usize>,
    },
    /// Rank-deficient basis: truncated pseudo-inverse.
    Pinv(DMatrix<f64>),
}

impl LeastSquares {
    pub fn new(basis: &DMatrix<f64>) -> Result<Self> {
        ensure_finite(basis)?;
        let (m, r) = basis.shape();
        if r == 0 || r > m {
            return Err(Error::Dimension(format!(
                "least squares basis is {m}x{r}; need 1 <= r <= m"
            )));
        }
        let qr = pivoted_qr(basis, Termination::FixedRank(r))?;
        let sv = singular_values(&qr.r11)?;
        let kind = if sv[r - 1] > 0.0 && sv[0] / sv[r - 1] < CONDITION_LIMIT {
            Factor::Qr {
                q: qr.q,
                r: qr.r11,
                permutation: qr.permutation,
            }
        } else {
            Factor::Pinv(truncated_pinv(basis, SVD_TRUNCATION))
        };
        Ok(Self {
            rows: m,
            cols: r,
            kind,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Coefficients `c` minimizing `‖B c − q‖₂`.
    pub fn solve(&self, q: &[f64]) -> Result<DVector<f64>> {
        if q.len() != self.rows {
            return Err(Error::Dimension(format!(
                "right-hand side has length {}, basis has {} rows",
                q.len(),
                self.rows
            )));
        }
        let q = DVector::from_column_slice(q);
        match &self.kind {
            Factor::Qr {
                q: qq,
                r,
                permutation,
            } => {
                let rhs = DMatrix::from_column_slice(self.cols, 1, qq.tr_mul(&q).as_slice());
                let y = back_substitute(r, &rhs);
                let mut c = DVector::zeros(self.cols);
                for (j, &p) in permutation.iter().enumerate() {
                    c[p] = y[(j, 0)];
                }
                Ok(c)
            }
            Factor::Pinv(p) => Ok(p * q),
        }
    }
}

/// One-shot least squares; prefer [`LeastSquares`] for repeated solves.
pub fn least_squares(basis: &DMatrix<f64>, q: &[f64]) -> Result<DVector<f64>> {
    LeastSquares::new(basis)?.solve(q)
}
