// Column interpolative decomposition of a matrix with decaying spectrum,
// compared against the SVD.

use mlcv::linalg::testing::matrix_with_spectrum;
use mlcv::linalg::{interpolative_decomposition, singular_values, Termination};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sigma: Vec<f64> = (1..=40).map(|k| 1.0 / (k * k) as f64).collect();
    let u = matrix_with_spectrum(40, 120, &sigma, 7);
    let sv = singular_values(&u)?;

    for r in [2, 5, 10, 20] {
        let id = interpolative_decomposition(&u, Termination::FixedRank(r))?;
        let n = u.ncols() as f64;
        let bound = (r as f64 * (n - r as f64) + 1.0).sqrt() * sv[r];
        println!(
            "rank {r:2}: |U - UcC| = {:.3e}, sigma_(r+1) = {:.3e}, bound = {:.3e}",
            id.residual_norm, sv[r], bound
        );
        assert!(id.residual_norm <= 1.5 * bound);
        for (k, &j) in id.selected.iter().enumerate() {
            assert_eq!(id.coefficients[(k, j)], 1.0);
        }
    }

    let id = interpolative_decomposition(&u, Termination::Tolerance(1e-3))?;
    println!(
        "tolerance 1e-3 picks rank {} (columns {:?})",
        id.rank,
        &id.selected[..id.rank.min(6)]
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("interpolative decomposition example failed");
}
