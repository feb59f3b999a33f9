use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kl::{kl_decompose, uniform_grid, Kernel, KlField};
use super::{check_input, check_level, LevelHierarchy, LevelOutput};
use crate::error::{Error, Result};
use crate::rng::{Distribution, InputSample};

/// Quantity of interest extracted from the diffusion solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qoi {
    /// ∫₀¹ u dx by the trapezoid rule; `q` is the interior solution.
    IntegralOfU,
    /// The flux −a u′ at x = 0; `q` holds the cell fluxes and the boundary
    /// value is extrapolated from the first two.
    FluxAtLeft,
}

/// Input law of the KL coefficients ξ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputLaw {
    StandardGaussian,
    /// uniform(−1, 1)
    Uniform,
}

/// Parameters of [`Diffusion1d`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusionParams {
    pub kernel: Kernel,
    /// Number d of retained KL modes (= input dimension).
    pub modes: usize,
    /// ā in a = ā + exp(G).
    pub mean_coefficient: f64,
    /// Multiplier of the KL fluctuation; 0 gives the constant coefficient ā + 1.
    pub amplitude: f64,
    pub input_law: InputLaw,
    /// Interior nodes M₀ on level 0.
    pub coarse_dofs: usize,
    /// Mesh refinement factor s: Mₗ + 1 = sˡ (M₀ + 1).
    pub refinement: usize,
    pub levels: usize,
    pub qoi: Qoi,
    /// γ in C(Qₗ) = Mₗ^γ.
    pub cost_exponent: f64,
    /// Nodes of the grid the KL eigenproblem is discretized on.
    pub kl_points: usize,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        Self {
            kernel: Kernel::SquaredExponential {
                variance: 0.3,
                length: 0.3,
            },
            modes: 10,
            mean_coefficient: 0.1,
            amplitude: 1.0,
            input_law: InputLaw::StandardGaussian,
            coarse_dofs: 15,
            refinement: 2,
            levels: 4,
            qoi: Qoi::IntegralOfU,
            cost_exponent: 1.0,
            kl_points: 257,
        }
    }
}

/// −(a(x, ξ) u′)′ = 1 on (0, 1), u(0) = u(1) = 0, with a = ā + exp(G(x, ξ))
/// and G a truncated KL expansion, discretized by second-order finite
/// differences on nested uniform grids.
#[derive(Debug, Clone)]
pub struct Diffusion1d {
    params: DiffusionParams,
    field: KlField,
    inputs: Arc<[Distribution]>,
    /// Per level, the (Mₗ + 1) × d map from ξ to G at the cell midpoints.
    midpoint_modes: Vec<DMatrix<f64>>,
}

impl Diffusion1d {
    pub fn new(params: DiffusionParams) -> Result<Self> {
        let p = &params;
        let bad = |field: &str, msg: &str| Err(Error::config(format!("model.{field}"), msg));
        if p.modes == 0 {
            return bad("modes", "must be at least 1");
        }
        if p.coarse_dofs < 2 {
            return bad("coarse_dofs", "must be at least 2");
        }
        if p.refinement < 2 {
            return bad("refinement", "must be at least 2");
        }
        if p.levels == 0 || p.levels > 10 {
            return bad("levels", "must be between 1 and 10");
        }
        if !(p.mean_coefficient.is_finite() && p.mean_coefficient >= 0.0) {
            return bad("mean_coefficient", "must be non-negative");
        }
        if !(p.amplitude.is_finite() && p.amplitude >= 0.0) {
            return bad("amplitude", "must be non-negative");
        }
        if !(p.cost_exponent.is_finite() && p.cost_exponent > 0.0) {
            return bad("cost_exponent", "must be positive");
        }
        if p.kl_points < p.modes || p.kl_points < 2 {
            return bad("kl_points", "must be at least the number of modes");
        }
        let field = kl_decompose(p.kernel, &uniform_grid(p.kl_points), p.modes)?
            .with_amplitude(p.amplitude);
        let law = match p.input_law {
            InputLaw::StandardGaussian => Distribution::StandardGaussian,
            InputLaw::Uniform => Distribution::Uniform {
                low: -1.0,
                high: 1.0,
            },
        };
        let mut model = Self {
            inputs: Arc::from(vec![law; p.modes]),
            field,
            midpoint_modes: Vec::new(),
            params,
        };
        model.midpoint_modes = (0..model.params.levels)
            .map(|l| {
                let n = model.dofs(l) + 1;
                let mids: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
                model.field.mode_matrix(&mids)
            })
            .collect();
        Ok(model)
    }

    pub fn params(&self) -> &DiffusionParams {
        &self.params
    }

    pub fn field(&self) -> &KlField {
        &self.field
    }

    /// Coefficient a at the Mₗ + 1 cell midpoints.
    pub fn coefficient(&self, level: usize, xi: &[f64]) -> Vec<f64> {
        let g = &self.midpoint_modes[level] * nalgebra::DVector::from_column_slice(xi);
        g.iter()
            .map(|v| self.params.mean_coefficient + v.exp())
            .collect()
    }

    /// Interior nodal solution on level `level`.
    pub fn solve(&self, level: usize, xi: &[f64]) -> Result<Vec<f64>> {
        let a = self.coefficient(level, xi);
        let m = self.dofs(level);
        let h = 1.0 / (m + 1) as f64;
        let fail = |message: String| Error::Model {
            level,
            xi: xi.to_vec(),
            message,
        };
        if let Some(v) = a.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(fail(format!(
                "coefficient value {v} is not positive and finite"
            )));
        }
        // Thomas algorithm on the symmetric tridiagonal system scaled by h².
        let mut diag: Vec<f64> = (0..m).map(|i| a[i] + a[i + 1]).collect();
        let mut rhs = vec![h * h; m];
        for i in 1..m {
            let w = -a[i] / diag[i - 1];
            diag[i] += w * a[i];
            rhs[i] -= w * rhs[i - 1];
            if !(diag[i].abs() > 0.0 && diag[i].is_finite()) {
                return Err(fail(format!("zero pivot in row {i}")));
            }
        }
        let mut u = vec![0.0; m];
        u[m - 1] = rhs[m - 1] / diag[m - 1];
        for i in (0..m - 1).rev() {
            u[i] = (rhs[i] + a[i + 1] * u[i + 1]) / diag[i];
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(fail("non-finite solution".into()));
        }
        Ok(u)
    }
}

impl LevelHierarchy for Diffusion1d {
    fn num_levels(&self) -> usize {
        self.params.levels
    }

    fn dofs(&self, level: usize) -> usize {
        (self.params.coarse_dofs + 1) * self.params.refinement.pow(level as u32) - 1
    }

    fn output_dim(&self, level: usize) -> usize {
        match self.params.qoi {
            Qoi::IntegralOfU => self.dofs(level),
            Qoi::FluxAtLeft => self.dofs(level) + 1,
        }
    }

    fn level_cost(&self, level: usize) -> f64 {
        (self.dofs(level) as f64).powf(self.params.cost_exponent)
    }

    fn inputs(&self) -> &Arc<[Distribution]> {
        &self.inputs
    }

    fn evaluate(&self, level: usize, xi: &InputSample) -> Result<LevelOutput> {
        check_level(self, level)?;
        check_input(self, xi)?;
        let u = self.solve(level, xi.as_slice())?;
        let q = match self.params.qoi {
            Qoi::IntegralOfU => u,
            Qoi::FluxAtLeft => {
                let a = self.coefficient(level, xi.as_slice());
                let h = 1.0 / (u.len() + 1) as f64;
                let node = |i: usize| if i == 0 || i > u.len() { 0.0 } else { u[i - 1] };
                (0..=u.len())
                    .map(|i| -a[i] * (node(i + 1) - node(i)) / h)
                    .collect()
            }
        };
        Ok(LevelOutput {
            value: self.qoi(level, &q),
            q,
        })
    }

    fn qoi(&self, _level: usize, q: &[f64]) -> f64 {
        match self.params.qoi {
            Qoi::IntegralOfU => q.iter().sum::<f64>() / (q.len() + 1) as f64,
            Qoi::FluxAtLeft => 1.5 * q[0] - 0.5 * q[1],
        }
    }

    fn fingerprint(&self) -> String {
        format!("diffusion_1d|{:?}", self.params)
    }
}
