//! The multilevel model contract and the built-in hierarchies.

mod diffusion;
mod kl;
mod synthetic;

use std::sync::Arc;

pub use diffusion::{Diffusion1d, DiffusionParams, InputLaw, Qoi};
pub use kl::{kl_decompose, uniform_grid, Kernel, KlField};
pub use synthetic::{SyntheticLowRank, SyntheticParams};

use crate::error::{Error, Result};
use crate::rng::{Distribution, InputSample};

/// Output of one level for one input realization.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelOutput {
    /// Solution-dependent vector the QoI is computed from (length mₗ).
    pub q: Vec<f64>,
    /// Scalar quantity of interest, `qoi(q)`.
    pub value: f64,
}

/// A hierarchy of discretizations indexed by level `0..num_levels()`.
///
/// Implementations are immutable and `evaluate` is a pure function of its
/// input, so a hierarchy can be shared across threads.
pub trait LevelHierarchy: Send + Sync {
    fn num_levels(&self) -> usize;

    /// Degrees of freedom Mₗ, strictly increasing in the level.
    fn dofs(&self, level: usize) -> usize;

    /// Length mₗ of the output vector `q`.
    fn output_dim(&self, level: usize) -> usize;

    /// Declared cost of one level-ℓ solve, C(Qₗ).
    fn level_cost(&self, level: usize) -> f64;

    fn inputs(&self) -> &Arc<[Distribution]>;

    fn evaluate(&self, level: usize, xi: &InputSample) -> Result<LevelOutput>;

    /// The QoI map applied to an output vector of this level.
    fn qoi(&self, level: usize, q: &[f64]) -> f64;

    /// Stable identifier of the model and its parameters.
    fn fingerprint(&self) -> String;

    fn input_dim(&self) -> usize {
        self.inputs().len()
    }

    fn finest_level(&self) -> usize {
        self.num_levels() - 1
    }

    /// Cost of one sample of Yₗ: C(Qₗ) + C(Qₗ₋₁), or C(Q₀) on level 0.
    fn correction_cost(&self, level: usize) -> f64 {
        if level == 0 {
            self.level_cost(0)
        } else {
            self.level_cost(level) + self.level_cost(level - 1)
        }
    }
}

pub(crate) fn check_level(h: &(impl LevelHierarchy + ?Sized), level: usize) -> Result<()> {
    if level >= h.num_levels() {
        return Err(Error::Dimension(format!(
            "level {level} out of range 0..{}",
            h.num_levels()
        )));
    }
    Ok(())
}

pub(crate) fn check_input(h: &(impl LevelHierarchy + ?Sized), xi: &InputSample) -> Result<()> {
    if xi.len() != h.input_dim() {
        return Err(Error::Dimension(format!(
            "input has {} coordinates, model expects {}",
            xi.len(),
            h.input_dim()
        )));
    }
    Ok(())
}

/// Fine and coarse outputs for one input realization.
#[derive(Debug, Clone)]
pub struct CoupledOutput {
    pub fine: LevelOutput,
    pub coarse: LevelOutput,
    /// C(Qₗ) + C(Qₗ₋₁).
    pub cost: f64,
}

impl CoupledOutput {
    /// Yₗ = Qₗ − Qₗ₋₁.
    pub fn correction(&self) -> f64 {
        self.fine.value - self.coarse.value
    }
}

/// Evaluate levels ℓ and ℓ−1 at the same input.
pub fn evaluate_coupled(
    h: &dyn LevelHierarchy,
    level: usize,
    xi: &InputSample,
) -> Result<CoupledOutput> {
    if level == 0 {
        return Err(Error::Dimension(
            "coupled evaluation needs level >= 1".into(),
        ));
    }
    check_level(h, level)?;
    Ok(CoupledOutput {
        fine: h.evaluate(level, xi)?,
        coarse: h.evaluate(level - 1, xi)?,
        cost: h.correction_cost(level),
    })
}

/// A hierarchy restricted to a strictly increasing subset of levels.
pub struct SubHierarchy {
    inner: Arc<dyn LevelHierarchy>,
    levels: Vec<usize>,
}

impl SubHierarchy {
    pub fn new(inner: Arc<dyn LevelHierarchy>, levels: Vec<usize>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::config("levels", "level subset is empty"));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "levels",
                "levels must be strictly increasing",
            ));
        }
        if let Some(&l) = levels.iter().find(|&&l| l >= inner.num_levels()) {
            return Err(Error::config(
                "levels",
                format!(
                    "level {l} exceeds the model's {} levels",
                    inner.num_levels()
                ),
            ));
        }
        Ok(Self { inner, levels })
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }
}

impl LevelHierarchy for SubHierarchy {
    fn num_levels(&self) -> usize {
        self.levels.len()
    }
    fn dofs(&self, level: usize) -> usize {
        self.inner.dofs(self.levels[level])
    }
    fn output_dim(&self, level: usize) -> usize {
        self.inner.output_dim(self.levels[level])
    }
    fn level_cost(&self, level: usize) -> f64 {
        self.inner.level_cost(self.levels[level])
    }
    fn inputs(&self) -> &Arc<[Distribution]> {
        self.inner.inputs()
    }
    fn evaluate(&self, level: usize, xi: &InputSample) -> Result<LevelOutput> {
        check_level(self, level)?;
        self.inner.evaluate(self.levels[level], xi)
    }
    fn qoi(&self, level: usize, q: &[f64]) -> f64 {
        self.inner.qoi(self.levels[level], q)
    }
    fn fingerprint(&self) -> String {
        format!("{}|levels={:?}", self.inner.fingerprint(), self.levels)
    }
}

/// A hierarchy whose per-level costs are replaced, e.g. by measured timings.
pub struct CostOverride {
    inner: Arc<dyn LevelHierarchy>,
    costs: Vec<f64>,
}

impl CostOverride {
    pub fn new(inner: Arc<dyn LevelHierarchy>, costs: Vec<f64>) -> Result<Self> {
        if costs.len() != inner.num_levels() {
            return Err(Error::Dimension(format!(
                "{} costs for {} levels",
                costs.len(),
                inner.num_levels()
            )));
        }
        if costs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::Data("level costs must be positive".into()));
        }
        Ok(Self { inner, costs })
    }
}

impl LevelHierarchy for CostOverride {
    fn num_levels(&self) -> usize {
        self.inner.num_levels()
    }
    fn dofs(&self, level: usize) -> usize {
        self.inner.dofs(level)
    }
    fn output_dim(&self, level: usize) -> usize {
        self.inner.output_dim(level)
    }
    fn level_cost(&self, level: usize) -> f64 {
        self.costs[level]
    }
    fn inputs(&self) -> &Arc<[Distribution]> {
        self.inner.inputs()
    }
    fn evaluate(&self, level: usize, xi: &InputSample) -> Result<LevelOutput> {
        self.inner.evaluate(level, xi)
    }
    fn qoi(&self, level: usize, q: &[f64]) -> f64 {
        self.inner.qoi(level, q)
    }
    fn fingerprint(&self) -> String {
        format!("{}|costs={:?}", self.inner.fingerprint(), self.costs)
    }
}

/// A hierarchy that ignores its input: `q` is a fixed per-level vector.
///
/// Every correction has zero variance, which makes it a convenient
/// degenerate case for the estimators.
pub struct ConstantModel {
    values: Vec<Vec<f64>>,
    inputs: Arc<[Distribution]>,
}

impl ConstantModel {
    /// `values[ℓ]` is the output vector of level ℓ; the QoI is its mean.
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| v.is_empty()) {
            return Err(Error::config(
                "model.values",
                "need non-empty level outputs",
            ));
        }
        Ok(Self {
            values,
            inputs: Arc::from(vec![Distribution::StandardGaussian]),
        })
    }
}

impl LevelHierarchy for ConstantModel {
    fn num_levels(&self) -> usize {
        self.values.len()
    }
    fn dofs(&self, level: usize) -> usize {
        4 << level
    }
    fn output_dim(&self, level: usize) -> usize {
        self.values[level].len()
    }
    fn level_cost(&self, level: usize) -> f64 {
        (4 << level) as f64
    }
    fn inputs(&self) -> &Arc<[Distribution]> {
        &self.inputs
    }
    fn evaluate(&self, level: usize, xi: &InputSample) -> Result<LevelOutput> {
        check_level(self, level)?;
        check_input(self, xi)?;
        let q = self.values[level].clone();
        Ok(LevelOutput {
            value: self.qoi(level, &q),
            q,
        })
    }
    fn qoi(&self, _level: usize, q: &[f64]) -> f64 {
        q.iter().sum::<f64>() / q.len() as f64
    }
    fn fingerprint(&self) -> String {
        format!("constant|{:?}", self.values)
    }
}
