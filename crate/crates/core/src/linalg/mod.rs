//! Dense kernels behind the reduced-basis construction: greedy pivoted QR,
//! interpolative decomposition, cached least squares, and an SVD oracle.

mod id;
mod lstsq;
mod qr;

pub use id::{interpolative_decomposition, IdFactorization};
pub use lstsq::{least_squares, LeastSquares};
pub use qr::{pivoted_qr, solve_t, PivotedQr, Termination, CONDITION_LIMIT, SVD_TRUNCATION};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub(crate) fn ensure_finite(u: &DMatrix<f64>) -> Result<()> {
    if let Some(pos) = u.iter().position(|x| !x.is_finite()) {
        let (i, j) = (pos % u.nrows(), pos / u.nrows());
        return Err(Error::Data(format!("non-finite entry at ({i}, {j})")));
    }
    Ok(())
}

/// Singular values in descending order.
pub fn singular_values(u: &DMatrix<f64>) -> Result<Vec<f64>> {
    ensure_finite(u)?;
    if u.is_empty() {
        return Ok(Vec::new());
    }
    let mut sv: Vec<f64> = u.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Spectral norm, via the largest singular value.
pub fn spectral_norm(u: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(u)?.first().copied().unwrap_or(0.0))
}

/// Deterministic test matrices.
#[doc(hidden)]
pub mod testing {
    use nalgebra::DMatrix;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    use crate::rng::normal_quantile;

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        let u = ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
        normal_quantile(u)
    }

    /// Matrix of i.i.d. standard Gaussian entries.
    pub fn random_matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| gaussian(&mut rng))
    }

    /// Random orthonormal columns (m × k).
    pub fn random_orthonormal(m: usize, k: usize, seed: u64) -> DMatrix<f64> {
        random_matrix(m, k, seed)
            .qr()
            .q()
            .columns(0, k)
            .into_owned()
    }

    /// `U diag(sigma) Vᵀ` with random orthonormal factors.
    pub fn matrix_with_spectrum(m: usize, n: usize, sigma: &[f64], seed: u64) -> DMatrix<f64> {
        let k = sigma.len();
        assert!(k <= m.min(n));
        let u = random_orthonormal(m, k, seed);
        let v = random_orthonormal(n, k, seed.wrapping_add(0x5eed));
        let mut us = u;
        for (j, s) in sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * v.transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::testing::random_matrix;
    use super::*;

    #[test]
    fn singular_values_identity_and_diagonal() {
        assert_eq!(
            singular_values(&DMatrix::identity(4, 4)).unwrap(),
            vec![1.0; 4]
        );
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let sv = singular_values(&d).unwrap();
        for (a, b) in sv.iter().zip([3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_values_match_frobenius_norm() {
        let u = random_matrix(10, 10, 11);
        let sv = singular_values(&u).unwrap();
        let rss = sv.iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!((rss - u.norm()).abs() <= 1e-10 * u.norm());
    }

    #[test]
    fn singular_values_reject_nan() {
        let mut u = random_matrix(3, 3, 1);
        u[(0, 2)] = f64::INFINITY;
        assert!(singular_values(&u).is_err());
    }
}
