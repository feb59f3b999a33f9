use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stationary covariance kernels on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Kernel {
    /// σ² exp(−|x − y| / l)
    Exponential { variance: f64, length: f64 },
    /// σ² exp(−|x − y|² / l)
    SquaredExponential { variance: f64, length: f64 },
    /// σ² everywhere; rank one.
    Constant { variance: f64 },
}

impl Kernel {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Kernel::Exponential { variance, length } => variance * (-(x - y).abs() / length).exp(),
            Kernel::SquaredExponential { variance, length } => {
                variance * (-(x - y).powi(2) / length).exp()
            }
            Kernel::Constant { variance } => variance,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Kernel::Exponential { variance, length }
            | Kernel::SquaredExponential { variance, length } => {
                variance > 0.0 && length > 0.0 && variance.is_finite() && length.is_finite()
            }
            Kernel::Constant { variance } => variance > 0.0 && variance.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(
                "kernel",
                format!("kernel parameters must be positive: {self:?}"),
            ))
        }
    }
}

/// `n` equispaced points covering [0, 1].
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Truncated Karhunen-Loève expansion `mean + amplitude Σ √λᵢ φᵢ(x) ξᵢ`.
#[derive(Debug, Clone)]
pub struct KlField {
    pub grid: Vec<f64>,
    /// Trapezoid quadrature weights on `grid`.
    pub weights: Vec<f64>,
    pub kernel: Kernel,
    /// Retained eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// n × d; columns orthonormal under the quadrature weights.
    pub eigenvectors: DMatrix<f64>,
    /// Sum of all n discrete eigenvalues (the weighted kernel trace).
    pub trace: f64,
    pub mean: f64,
    pub amplitude: f64,
}

/// Nyström discretization of the kernel's integral operator on `grid`,
/// keeping the `d` leading eigenpairs.
pub fn kl_decompose(kernel: Kernel, grid: &[f64], d: usize) -> Result<KlField> {
    kernel.validate()?;
    let n = grid.len();
    if n < 2 {
        return Err(Error::config("kl.grid", "need at least two grid points"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("kl.grid", "grid must be strictly increasing"));
    }
    if d == 0 || d > n {
        return Err(Error::config(
            "kl.modes",
            format!("need 1 <= d <= n, got d = {d}, n = {n}"),
        ));
    }
    let mut weights = vec![0.0; n];
    for i in 0..n - 1 {
        let h = grid[i + 1] - grid[i];
        weights[i] += 0.5 * h;
        weights[i + 1] += 0.5 * h;
    }
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let b = DMatrix::from_fn(n, n, |i, j| sw[i] * kernel.eval(grid[i], grid[j]) * sw[j]);
    let trace = b.trace();
    let eig = SymmetricEigen::new(b);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });

    let mut eigenvalues = Vec::with_capacity(d);
    let mut eigenvectors = DMatrix::zeros(n, d);
    for (k, &idx) in order.iter().take(d).enumerate() {
        eigenvalues.push(eig.eigenvalues[idx].max(0.0));
        let mut col: Vec<f64> = (0..n).map(|i| eig.eigenvectors[(i, idx)] / sw[i]).collect();
        let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-12 * scale) {
            if *first < 0.0 {
                col.iter_mut().for_each(|v| *v = -*v);
            }
        }
        eigenvectors.column_mut(k).copy_from_slice(&col);
    }
    Ok(KlField {
        grid: grid.to_vec(),
        weights,
        kernel,
        eigenvalues,
        eigenvectors,
        trace,
        mean: 0.0,
        amplitude: 1.0,
    })
}

impl KlField {
    pub fn with_mean(mut self, mean: f64) -> Self {
        self.mean = mean;
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Field values on the grid.
    pub fn sample_field(&self, xi: &[f64]) -> Result<Vec<f64>> {
        if xi.len() != self.modes() {
            return Err(Error::Dimension(format!(
                "field has {} modes, got {} coefficients",
                self.modes(),
                xi.len()
            )));
        }
        let n = self.grid.len();
        let mut out = vec![self.mean; n];
        for (k, (&lam, &x)) in self.eigenvalues.iter().zip(xi).enumerate() {
            let c = self.amplitude * lam.sqrt() * x;
            for (o, phi) in out.iter_mut().zip(self.eigenvectors.column(k).iter()) {
                *o += c * phi;
            }
        }
        Ok(out)
    }

    /// Eigenfunctions at arbitrary points by Nyström interpolation,
    /// `φₖ(x) = λₖ⁻¹ Σⱼ wⱼ K(x, xⱼ) φₖ(xⱼ)`. Returns `points.len() × d`.
    pub fn eigenfunctions_at(&self, points: &[f64]) -> DMatrix<f64> {
        let kmat = DMatrix::from_fn(points.len(), self.grid.len(), |i, j| {
            self.weights[j] * self.kernel.eval(points[i], self.grid[j])
        });
        let mut phi = kmat * &self.eigenvectors;
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let s = if lam > 0.0 { 1.0 / lam } else { 0.0 };
            phi.column_mut(k).scale_mut(s);
        }
        phi
    }

    /// Matrix mapping ξ to field fluctuations at `points`:
    /// column k is `amplitude √λₖ φₖ(points)`.
    pub fn mode_matrix(&self, points: &[f64]) -> DMatrix<f64> {
        let mut phi = self.eigenfunctions_at(points);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            phi.column_mut(k).scale_mut(self.amplitude * lam.sqrt());
        }
        phi
    }
}
