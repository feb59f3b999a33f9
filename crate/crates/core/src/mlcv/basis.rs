use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{interpolative_decomposition, LeastSquares, Termination};
use crate::mlmc::LevelSamples;
use crate::models::LevelHierarchy;
use crate::rng::{draw_input, InputSample, Purpose, StreamKey};

/// How the rank of each level's reduced basis is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum RankPolicy {
    /// The same rank on every level.
    Fixed { rank: usize },
    /// `ranks[ℓ − 1]` for level ℓ ≥ 1.
    FixedPerLevel { ranks: Vec<usize> },
    /// Smallest rank whose ID residual is at most `tolerance`.
    Tolerance { tolerance: f64 },
}

impl RankPolicy {
    pub fn validate(&self, num_levels: usize) -> Result<()> {
        match self {
            RankPolicy::Fixed { rank } if *rank == 0 => {
                Err(Error::config("rank_policy.rank", "rank must be at least 1"))
            }
            RankPolicy::FixedPerLevel { ranks } if ranks.len() + 1 != num_levels => {
                Err(Error::config(
                    "rank_policy.ranks",
                    format!(
                        "need one rank per level >= 1 ({}), got {}",
                        num_levels.saturating_sub(1),
                        ranks.len()
                    ),
                ))
            }
            RankPolicy::FixedPerLevel { ranks } if ranks.contains(&0) => Err(Error::config(
                "rank_policy.ranks",
                "ranks must be at least 1",
            )),
            RankPolicy::Tolerance { tolerance } if !(tolerance.is_finite() && *tolerance > 0.0) => {
                Err(Error::config(
                    "rank_policy.tolerance",
                    "tolerance must be positive",
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn termination(&self, level: usize) -> Termination {
        match self {
            RankPolicy::Fixed { rank } => Termination::FixedRank(*rank),
            RankPolicy::FixedPerLevel { ranks } => Termination::FixedRank(ranks[level - 1]),
            RankPolicy::Tolerance { tolerance } => Termination::Tolerance(*tolerance),
        }
    }
}

/// Coarse reduced basis Uᶜₗ₋₁ and its fine counterpart Uᶜₗ, evaluated at the
/// same selected inputs, with a reusable least-squares factorization.
#[derive(Debug, Clone)]
pub struct ReducedBasisPair {
    pub level: usize,
    pub rank: usize,
    /// Pilot sample indices of the basis snapshots.
    pub selected: Vec<usize>,
    pub selected_inputs: Vec<Vec<f64>>,
    /// mₗ₋₁ × r
    pub coarse: DMatrix<f64>,
    /// mₗ × r
    pub fine: DMatrix<f64>,
    /// ‖Uₗ₋₁ − Uᶜₗ₋₁ C‖₂ on the pilot data.
    pub residual_norm: f64,
    solver: LeastSquares,
}

/// Build the level-ℓ basis from the pilot's coarse snapshots. The fine
/// counterpart is re-evaluated at the selected pilot inputs.
pub fn build_reduced_basis(
    h: &dyn LevelHierarchy,
    level: usize,
    samples: &LevelSamples,
    seed: u64,
    termination: Termination,
) -> Result<ReducedBasisPair> {
    if level == 0 || level >= h.num_levels() {
        return Err(Error::Dimension(format!(
            "no reduced basis for level {level}"
        )));
    }
    let n = samples.coarse_q.len();
    if let Termination::FixedRank(r) = termination {
        if n < r {
            return Err(Error::InsufficientData(format!(
                "level {level}: {n} pilot samples for a rank {r} basis"
            )));
        }
    }
    let m = h.output_dim(level - 1);
    if samples.coarse_q.iter().any(|q| q.len() != m) {
        return Err(Error::Dimension(format!(
            "level {level}: coarse snapshots must have length {m}"
        )));
    }
    let u = DMatrix::from_fn(m, n, |i, j| samples.coarse_q[j][i]);
    if u.amax() == 0.0 {
        return Err(Error::DegenerateBasis(level));
    }
    let id = match interpolative_decomposition(&u, termination) {
        Err(Error::Numerical(_)) => return Err(Error::DegenerateBasis(level)),
        other => other?,
    };
    let inputs: Vec<InputSample> = id
        .selected
        .iter()
        .map(|&i| {
            draw_input(
                &StreamKey::new(seed, Purpose::Pilot(level), i as u64),
                h.inputs(),
            )
        })
        .collect::<Result<_>>()?;
    let mut fine = DMatrix::zeros(h.output_dim(level), id.rank);
    for (k, xi) in inputs.iter().enumerate() {
        fine.column_mut(k)
            .copy_from_slice(&h.evaluate(level, xi)?.q);
    }
    let coarse = id.skeleton(&u);
    Ok(ReducedBasisPair {
        level,
        rank: id.rank,
        selected: id.selected,
        selected_inputs: inputs.into_iter().map(|x| x.values).collect(),
        solver: LeastSquares::new(&coarse)?,
        coarse,
        fine,
        residual_norm: id.residual_norm,
    })
}

impl ReducedBasisPair {
    /// Qₗ^ID for a coarse output vector: least-squares coefficients on the
    /// coarse basis applied to the fine basis.
    pub fn interpolate(&self, h: &dyn LevelHierarchy, q_coarse: &[f64]) -> Result<f64> {
        let c = self.solver.solve(q_coarse)?;
        let q_fine: DVector<f64> = &self.fine * c;
        Ok(h.qoi(self.level, q_fine.as_slice()))
    }

    /// Zₗ = Qₗ^ID − Qₗ₋₁.
    pub fn sample_z(&self, h: &dyn LevelHierarchy, q_coarse: &[f64]) -> Result<f64> {
        Ok(self.interpolate(h, q_coarse)? - h.qoi(self.level - 1, q_coarse))
    }

    pub fn to_record(&self, key: BasisKey) -> BasisRecord {
        let cols = |m: &DMatrix<f64>| {
            m.column_iter()
                .map(|c| c.iter().copied().collect())
                .collect()
        };
        BasisRecord {
            key,
            rank: self.rank,
            selected: self.selected.clone(),
            selected_inputs: self.selected_inputs.clone(),
            coarse: cols(&self.coarse),
            fine: cols(&self.fine),
            residual_norm: self.residual_norm,
        }
    }

    pub fn from_record(record: &BasisRecord) -> Result<Self> {
        let r = record.rank;
        let matrix = |cols: &[Vec<f64>], what: &str| -> Result<DMatrix<f64>> {
            let m = cols.first().map_or(0, |c| c.len());
            if cols.len() != r || m == 0 || cols.iter().any(|c| c.len() != m) {
                return Err(Error::Data(format!(
                    "malformed {what} basis in cache record"
                )));
            }
            Ok(DMatrix::from_fn(m, r, |i, j| cols[j][i]))
        };
        let coarse = matrix(&record.coarse, "coarse")?;
        let fine = matrix(&record.fine, "fine")?;
        if record.selected.len() != r || record.selected_inputs.len() != r {
            return Err(Error::Data("malformed selection in cache record".into()));
        }
        Ok(Self {
            level: record.key.level,
            rank: r,
            selected: record.selected.clone(),
            selected_inputs: record.selected_inputs.clone(),
            solver: LeastSquares::new(&coarse)?,
            coarse,
            fine,
            residual_norm: record.residual_norm,
        })
    }
}

/// Identifies a cached basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisKey {
    pub model_hash: String,
    pub level: usize,
    pub seed: u64,
    pub pilot_samples: usize,
    pub termination: String,
}

/// On-disk form of a [`ReducedBasisPair`]; matrices are stored by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisRecord {
    pub key: BasisKey,
    pub rank: usize,
    pub selected: Vec<usize>,
    pub selected_inputs: Vec<Vec<f64>>,
    pub coarse: Vec<Vec<f64>>,
    pub fine: Vec<Vec<f64>>,
    pub residual_norm: f64,
}
