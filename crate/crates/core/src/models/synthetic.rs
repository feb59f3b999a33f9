use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{check_input, check_level, LevelHierarchy, LevelOutput};
use crate::error::{Error, Result};
use crate::rng::{Distribution, InputSample};

/// Parameters of [`SyntheticLowRank`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticParams {
    /// Exact rank of the unperturbed snapshot ensemble.
    pub rank: usize,
    /// Output length m₀ on level 0.
    pub coarse_dim: usize,
    /// Refinement factor s, so mₗ = m₀ sˡ.
    pub refinement: usize,
    pub levels: usize,
    /// γ in C(Qₗ) = mₗ^γ.
    pub cost_exponent: f64,
    /// Number d of uniform(−1, 1) inputs.
    pub input_dim: usize,
    /// δ, the size of the level-dependent full-rank perturbation.
    pub perturbation: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            rank: 5,
            coarse_dim: 16,
            refinement: 2,
            levels: 3,
            cost_exponent: 1.0,
            input_dim: 8,
            perturbation: 1e-3,
        }
    }
}

/// A hierarchy whose snapshots are exactly rank `rank` up to a perturbation
/// of size `δ s⁻ˡ`:
///
/// `qₗ(x) = Σₖ φₖ(x)(1 + κₖ s⁻ˡ) gₖ(ξ) + δ s⁻ˡ cos(3πx) sin(ω·ξ + ℓ)`
///
/// on the midpoint grid `xᵢ = (i + ½)/mₗ`. The QoI is the mean of `q`.
#[derive(Debug, Clone)]
pub struct SyntheticLowRank {
    params: SyntheticParams,
    inputs: Arc<[Distribution]>,
}

const WIDTH: f64 = 0.3;

fn kappa(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        0.6
    } else {
        -0.4
    }
}

fn rate(k: usize) -> f64 {
    0.4 + 0.15 * k as f64
}

fn omega(j: usize) -> f64 {
    0.7 + 0.3 * j as f64
}

impl SyntheticLowRank {
    pub fn new(params: SyntheticParams) -> Result<Self> {
        let p = &params;
        let bad = |field: &str, msg: &str| Err(Error::config(format!("model.{field}"), msg));
        if p.rank == 0 {
            return bad("rank", "must be at least 1");
        }
        if p.coarse_dim < p.rank {
            return bad("coarse_dim", "must be at least the rank");
        }
        if p.refinement < 2 {
            return bad("refinement", "must be at least 2");
        }
        if p.levels == 0 || p.levels > 12 {
            return bad("levels", "must be between 1 and 12");
        }
        if p.input_dim == 0 {
            return bad("input_dim", "must be at least 1");
        }
        if !(p.cost_exponent.is_finite() && p.cost_exponent > 0.0) {
            return bad("cost_exponent", "must be positive");
        }
        if !(p.perturbation.is_finite() && p.perturbation >= 0.0) {
            return bad("perturbation", "must be non-negative");
        }
        let inputs = Arc::from(vec![
            Distribution::Uniform {
                low: -1.0,
                high: 1.0
            };
            p.input_dim
        ]);
        Ok(Self { params, inputs })
    }

    pub fn params(&self) -> &SyntheticParams {
        &self.params
    }

    fn grid(&self, level: usize) -> Vec<f64> {
        let m = self.dofs(level);
        (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect()
    }

    fn profile(&self, k: usize, x: f64) -> f64 {
        let c = (k as f64 + 0.5) / self.params.rank as f64;
        (-((x - c) / WIDTH).powi(2)).exp()
    }

    fn shrink(&self, level: usize) -> f64 {
        (self.params.refinement as f64).powi(-(level as i32))
    }

    fn coordinates(&self, xi: &[f64]) -> Vec<f64> {
        let d = self.params.input_dim;
        (0..self.params.rank)
            .map(|k| (rate(k) * xi[k % d]).exp() * (1.0 + 0.5 * xi[(k + 1) % d]))
            .collect()
    }

    /// E[gₖ(ξ)] for ξ uniform on [−1, 1]ᵈ.
    fn coordinate_mean(&self, k: usize) -> f64 {
        let d = self.params.input_dim;
        let a = rate(k);
        let e_exp = a.sinh() / a;
        if (k + 1) % d == k % d {
            // ξ e^{aξ} has mean d/da (sinh a / a).
            e_exp + 0.5 * (a.cosh() / a - a.sinh() / (a * a))
        } else {
            e_exp
        }
    }

    /// Exact E[Qₗ].
    pub fn exact_mean(&self, level: usize) -> f64 {
        let grid = self.grid(level);
        let sh = self.shrink(level);
        let e_sin = (level as f64).sin()
            * (0..self.params.input_dim)
                .map(|j| omega(j).sin() / omega(j))
                .product::<f64>();
        let mut total = 0.0;
        for &x in &grid {
            let mut v = 0.0;
            for k in 0..self.params.rank {
                v += self.profile(k, x) * (1.0 + kappa(k) * sh) * self.coordinate_mean(k);
            }
            v += self.params.perturbation * sh * (3.0 * PI * x).cos() * e_sin;
            total += v;
        }
        total / grid.len() as f64
    }
}

impl LevelHierarchy for SyntheticLowRank {
    fn num_levels(&self) -> usize {
        self.params.levels
    }

    fn dofs(&self, level: usize) -> usize {
        self.params.coarse_dim * self.params.refinement.pow(level as u32)
    }

    fn output_dim(&self, level: usize) -> usize {
        self.dofs(level)
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
        let xi = xi.as_slice();
        let g = self.coordinates(xi);
        let sh = self.shrink(level);
        let phase: f64 = xi
            .iter()
            .enumerate()
            .map(|(j, v)| omega(j) * v)
            .sum::<f64>()
            + level as f64;
        let wiggle = self.params.perturbation * sh * phase.sin();
        let q: Vec<f64> = self
            .grid(level)
            .into_iter()
            .map(|x| {
                let low: f64 = g
                    .iter()
                    .enumerate()
                    .map(|(k, gk)| self.profile(k, x) * (1.0 + kappa(k) * sh) * gk)
                    .sum();
                low + wiggle * (3.0 * PI * x).cos()
            })
            .collect();
        Ok(LevelOutput {
            value: self.qoi(level, &q),
            q,
        })
    }

    fn qoi(&self, _level: usize, q: &[f64]) -> f64 {
        q.iter().sum::<f64>() / q.len() as f64
    }

    fn fingerprint(&self) -> String {
        format!("synthetic_low_rank|{:?}", self.params)
    }
}
