use nalgebra::DMatrix;

use super::qr::{pivoted_qr, solve_t, Termination};
use super::spectral_norm;
use crate::error::{Error, Result};

/// Column interpolative decomposition `U ≈ Uᶜ C`, where `Uᶜ` collects the
/// columns `selected` of `U`.
#[derive(Debug, Clone)]
pub struct IdFactorization {
    pub selected: Vec<usize>,
    /// r × N; the columns at `selected` form the identity exactly.
    pub coefficients: DMatrix<f64>,
    pub rank: usize,
    /// Spectral norm of `U − Uᶜ C`.
    pub residual_norm: f64,
}

impl IdFactorization {
    /// Gather the skeleton columns of `u`.
    pub fn skeleton(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        u.select_columns(self.selected.iter())
    }

    /// Largest absolute coefficient. Not bounded by 1 under greedy pivoting.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.coefficients.amax()
    }
}

/// Interpolative decomposition built from greedy pivoted QR:
/// `C = [I | T] Pᵀ` with `R11 T = R12`.
pub fn interpolative_decomposition(
    u: &DMatrix<f64>,
    termination: Termination,
) -> Result<IdFactorization> {
    let qr = pivoted_qr(u, termination)?;
    let r = qr.rank();
    if r == 0 {
        return Err(Error::Numerical(
            "interpolative decomposition has rank 0".into(),
        ));
    }
    let n = u.ncols();
    let t = solve_t(&qr.r11, &qr.r12)?;
    let mut c = DMatrix::zeros(r, n);
    for (j, &col) in qr.permutation.iter().enumerate() {
        if j < r {
            c[(j, col)] = 1.0;
        } else {
            c.column_mut(col).copy_from(&t.column(j - r));
        }
    }
    let selected = qr.permutation[..r].to_vec();
    let residual = u - u.select_columns(selected.iter()) * &c;
    let residual_norm = spectral_norm(&residual)?;
    Ok(IdFactorization {
        selected,
        coefficients: c,
        rank: r,
        residual_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::singular_values;
    use crate::linalg::testing::{matrix_with_spectrum, random_matrix};

    fn identity_block_exact(f: &IdFactorization) {
        for (k, &col) in f.selected.iter().enumerate() {
            for i in 0..f.rank {
                let expect = if i == k { 1.0 } else { 0.0 };
                assert_eq!(f.coefficients[(i, col)], expect);
            }
        }
    }

    #[test]
    fn square_invertible_is_exact() {
        let u = random_matrix(4, 4, 21);
        let f = interpolative_decomposition(&u, Termination::FixedRank(4)).unwrap();
        identity_block_exact(&f);
        let rec = f.skeleton(&u) * &f.coefficients;
        assert!((rec - &u).norm() <= 1e-12 * u.norm());
    }

    #[test]
    fn duplicated_columns_rank_two() {
        let a = random_matrix(6, 1, 1);
        let b = random_matrix(6, 1, 2);
        let u = DMatrix::from_columns(&[a.column(0), a.column(0), b.column(0)]);
        let f = interpolative_decomposition(&u, Termination::Tolerance(1e-10)).unwrap();
        assert_eq!(f.rank, 2);
        assert!(f.selected.contains(&2));
        assert!(f.selected.contains(&0) ^ f.selected.contains(&1));
        identity_block_exact(&f);
    }

    #[test]
    fn cubic_spectrum_bound() {
        let sigma: Vec<f64> = (1..=30).map(|k| (k as f64).powi(-3)).collect();
        let u = matrix_with_spectrum(30, 100, &sigma, 5);
        let r = 8;
        let f = interpolative_decomposition(&u, Termination::FixedRank(r)).unwrap();
        let sv = singular_values(&u).unwrap();
        let resid = singular_values(&(&u - f.skeleton(&u) * &f.coefficients)).unwrap()[0];
        let bound = 1.5 * ((r * (100 - r) + 1) as f64).sqrt() * sv[r];
        assert!(resid <= bound, "{resid} > {bound}");
        assert!((f.residual_norm - resid).abs() <= 1e-10 * resid.max(1e-300));
        assert!(f.max_abs_coefficient().is_finite());
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let u = DMatrix::zeros(3, 4);
        assert!(interpolative_decomposition(&u, Termination::Tolerance(1e-12)).is_err());
    }
}
