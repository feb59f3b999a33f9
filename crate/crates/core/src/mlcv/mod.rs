//! Multilevel control variates: a low-rank interpolation of the fine level
//! from coarse snapshots serves as a control variate for each correction.

mod basis;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use basis::{build_reduced_basis, BasisKey, BasisRecord, RankPolicy, ReducedBasisPair};

use crate::error::{Error, Result};
use crate::mlmc::{
    allocate_mlmc, ceil_count, corrections_of, draw_level, mean_of, AllocationPlan, CvLevelResult,
    EstimatorResult, LevelResult, Method, Pilot,
};
use crate::models::LevelHierarchy;
use crate::rng::{draw_input, Purpose, StreamKey};
use crate::stats::{mse_reduction_factor, rho_squared};

/// Default cap s₂ on N′ₗ / Ñₗ.
pub const DEFAULT_S2: f64 = 10.0;

/// The rule fixing N′ₗ relative to Ñₗ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZbarRule {
    pub s1: f64,
    /// N′ₗ = ⌈multiplier · Ñₗ⌉.
    pub multiplier: f64,
}

impl ZbarRule {
    pub fn enabled(&self) -> bool {
        self.multiplier > 0.0
    }

    /// Ñₗ / N′ₗ; infinite when disabled.
    pub fn ratio(&self) -> f64 {
        if self.enabled() {
            1.0 / self.multiplier
        } else {
            f64::INFINITY
        }
    }

    pub fn n_zbar(&self, n_main: usize) -> usize {
        if self.enabled() {
            ceil_count(self.multiplier * n_main as f64).max(1)
        } else {
            0
        }
    }
}

/// `s1 = √(ρ² / (ζ(1 − ρ²)))`, multiplier `min(s2, max(0, s1 − 1))`.
pub fn allocate_zbar(rho2: f64, zeta: f64, s2: f64) -> ZbarRule {
    let s1 = (rho2 / (zeta * (1.0 - rho2))).sqrt();
    let multiplier = if s1.is_nan() {
        0.0
    } else {
        (s1 - 1.0).max(0.0).min(s2)
    };
    ZbarRule { s1, multiplier }
}

/// θ* = (cov / 𝕍[Z]) / (1 + Ñ/N′); zero when 𝕍[Z] vanishes.
pub fn theta_star(cov_yz: f64, var_z: f64, ratio: f64) -> f64 {
    if !(var_z > 0.0) || ratio.is_infinite() {
        return 0.0;
    }
    cov_yz / var_z / (1.0 + ratio)
}

/// Optimal Ñₗ with effective variances 𝕍[Yₗ] · MSERF(ρ²ₗ, ratioₗ).
pub fn allocate_mlcv(
    variances: &[f64],
    costs: &[f64],
    rho2: &[f64],
    ratios: &[f64],
    epsilon: f64,
) -> Result<AllocationPlan> {
    if rho2.len() != variances.len() || ratios.len() != variances.len() {
        return Err(Error::Dimension(
            "one ρ² and ratio per level required".into(),
        ));
    }
    let effective: Vec<f64> = variances
        .iter()
        .zip(rho2.iter().zip(ratios))
        .map(|(v, (r, q))| v * mse_reduction_factor(*r, *q))
        .collect();
    allocate_mlmc(&effective, costs, epsilon)
}

/// Control-variate settings of one level, fixed after the pilot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvLevelConfig {
    pub level: usize,
    /// Basis rank; 0 on level 0 or when the basis is degenerate.
    pub rank: usize,
    pub enabled: bool,
    pub rho2: f64,
    pub covariance: f64,
    pub var_y: f64,
    pub var_z: f64,
    /// C(Qₗ₋₁) / (C(Qₗ) + C(Qₗ₋₁)).
    pub zeta: f64,
    pub s1: f64,
    pub multiplier: f64,
    /// Ñₗ / N′ₗ; infinite (serialized as null) when disabled.
    #[serde(with = "ratio_serde")]
    pub ratio: f64,
    pub theta: f64,
    /// Non-basis pilot pairs used for the moments.
    pub n_moment_samples: usize,
}

mod ratio_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl CvLevelConfig {
    fn disabled(level: usize, rank: usize, zeta: f64) -> Self {
        Self {
            level,
            rank,
            enabled: false,
            rho2: 0.0,
            covariance: 0.0,
            var_y: 0.0,
            var_z: 0.0,
            zeta,
            s1: 0.0,
            multiplier: 0.0,
            ratio: f64::INFINITY,
            theta: 0.0,
            n_moment_samples: 0,
        }
    }

    pub fn mserf(&self) -> f64 {
        mse_reduction_factor(self.rho2, self.ratio)
    }

    pub fn rule(&self) -> ZbarRule {
        ZbarRule {
            s1: self.s1,
            multiplier: self.multiplier,
        }
    }
}

/// Build the bases of levels 1..L. Levels whose data is degenerate get
/// `None`.
pub fn build_bases(
    h: &dyn LevelHierarchy,
    pilot: &Pilot,
    policy: &RankPolicy,
) -> Result<Vec<Option<ReducedBasisPair>>> {
    policy.validate(h.num_levels())?;
    let mut out = vec![None];
    for l in 1..h.num_levels() {
        match build_reduced_basis(h, l, &pilot.levels[l], pilot.seed, policy.termination(l)) {
            Ok(b) => out.push(Some(b)),
            Err(Error::DegenerateBasis(_)) => out.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Estimate ρ², cov(Y, Z), 𝕍[Z] on the pilot pairs outside each basis and
/// fix N′/Ñ and θ* per level. `force_no_cv` sets ρ² = 0 everywhere.
pub fn configure_cv(
    h: &dyn LevelHierarchy,
    pilot: &Pilot,
    bases: &[Option<ReducedBasisPair>],
    s2: f64,
    force_no_cv: bool,
) -> Result<Vec<CvLevelConfig>> {
    if !(s2.is_finite() && s2 > 1.0) {
        return Err(Error::config("s2", "s2 must exceed 1"));
    }
    if bases.len() != h.num_levels() {
        return Err(Error::Dimension(format!(
            "{} bases for {} levels",
            bases.len(),
            h.num_levels()
        )));
    }
    let mut out = vec![CvLevelConfig::disabled(0, 0, 0.0)];
    for l in 1..h.num_levels() {
        let zeta = h.level_cost(l - 1) / (h.level_cost(l) + h.level_cost(l - 1));
        let Some(basis) = &bases[l] else {
            out.push(CvLevelConfig::disabled(l, 0, zeta));
            continue;
        };
        let samples = &pilot.levels[l];
        let keep: Vec<usize> = (0..samples.len())
            .filter(|i| !basis.selected.contains(i))
            .collect();
        let mut cfg = CvLevelConfig::disabled(l, basis.rank, zeta);
        cfg.n_moment_samples = keep.len();
        if keep.len() >= 2 {
            let y: Vec<f64> = keep
                .iter()
                .map(|&i| samples.fine[i] - samples.coarse[i])
                .collect();
            let z: Vec<f64> = keep
                .par_iter()
                .map(|&i| basis.sample_z(h, &samples.coarse_q[i]))
                .collect::<Result<_>>()?;
            let c = rho_squared(&y, &z)?;
            cfg.covariance = c.covariance;
            cfg.var_y = c.var_y;
            cfg.var_z = c.var_z;
            if !force_no_cv && !c.degenerate {
                cfg.rho2 = c.rho2;
                let rule = allocate_zbar(c.rho2, zeta, s2);
                cfg.s1 = rule.s1;
                cfg.multiplier = rule.multiplier;
                cfg.ratio = rule.ratio();
                cfg.enabled = rule.enabled();
                cfg.theta = theta_star(c.covariance, c.var_z, cfg.ratio);
            }
        }
        out.push(cfg);
    }
    Ok(out)
}

/// Main-run sample counts: Ñₗ per level and N′ₗ for the Z̄ₗ estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlcvPlan {
    pub plan: AllocationPlan,
    pub n_zbar: Vec<usize>,
}

pub fn plan_mlcv(pilot: &Pilot, configs: &[CvLevelConfig], epsilon: f64) -> Result<MlcvPlan> {
    let rho2: Vec<f64> = configs
        .iter()
        .map(|c| if c.enabled { c.rho2 } else { 0.0 })
        .collect();
    let ratios: Vec<f64> = configs.iter().map(|c| c.ratio).collect();
    let plan = allocate_mlcv(&pilot.variances(), &pilot.costs(), &rho2, &ratios, epsilon)?;
    let n_zbar = configs
        .iter()
        .zip(&plan.samples)
        .map(|(c, n)| c.rule().n_zbar(*n))
        .collect();
    Ok(MlcvPlan { plan, n_zbar })
}

/// Evaluation counts of an MLCV run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLog {
    /// C(Qₗ) per level.
    pub level_costs: Vec<f64>,
    pub level0_samples: usize,
    /// Coupled main-run pairs per level; index 0 unused.
    pub main_pairs: Vec<usize>,
    /// Coupled basis pairs per level; index 0 unused.
    pub basis_pairs: Vec<usize>,
    /// Coarse-only evaluations for Z̄ₗ; index 0 unused.
    pub zbar_coarse: Vec<usize>,
}

impl CostLog {
    /// Ñ₀C(Q₀) + Σₗ (Ñₗ + r)(C(Qₗ₋₁) + C(Qₗ)) + Σₗ N′ₗ C(Qₗ₋₁).
    pub fn total(&self) -> f64 {
        let c = &self.level_costs;
        let mut cost = self.level0_samples as f64 * c[0];
        for l in 1..c.len() {
            cost += (self.main_pairs[l] + self.basis_pairs[l]) as f64 * (c[l - 1] + c[l]);
        }
        for l in 1..c.len() {
            cost += self.zbar_coarse[l] as f64 * c[l - 1];
        }
        cost
    }

    /// Offline share: the Z̄ₗ acquisition.
    pub fn zbar_cost(&self) -> f64 {
        (1..self.level_costs.len())
            .map(|l| self.zbar_coarse[l] as f64 * self.level_costs[l - 1])
            .sum()
    }

    pub fn basis_cost(&self) -> f64 {
        (1..self.level_costs.len())
            .map(|l| self.basis_pairs[l] as f64 * (self.level_costs[l - 1] + self.level_costs[l]))
            .sum()
    }
}

/// Evaluation counts `run_mlcv` will log for `plan`.
pub fn planned_cost_log(
    h: &dyn LevelHierarchy,
    n_pilot: usize,
    configs: &[CvLevelConfig],
    plan: &MlcvPlan,
) -> CostLog {
    let nl = h.num_levels();
    let mut log = CostLog {
        level_costs: (0..nl).map(|l| h.level_cost(l)).collect(),
        level0_samples: plan.plan.samples[0].max(n_pilot),
        main_pairs: vec![0; nl],
        basis_pairs: vec![0; nl],
        zbar_coarse: vec![0; nl],
    };
    for l in 1..nl {
        let (cfg, target) = (&configs[l], plan.plan.samples[l]);
        log.basis_pairs[l] = cfg.rank;
        if cfg.enabled {
            log.main_pairs[l] = target.max(n_pilot - cfg.rank);
            log.zbar_coarse[l] = plan.n_zbar[l];
        } else {
            log.main_pairs[l] = target.max(n_pilot);
        }
    }
    log
}

/// Z̄ₗ from `n` coarse-only evaluations on the independent Z̄ stream.
pub fn estimate_zbar(
    h: &dyn LevelHierarchy,
    basis: &ReducedBasisPair,
    n: usize,
    seed: u64,
) -> Result<f64> {
    Ok(mean_of(&zbar_samples(h, basis, 0..n as u64, seed)?))
}

/// Zₗ samples from the Z̄ₗ stream with the given sample indices.
pub fn zbar_samples(
    h: &dyn LevelHierarchy,
    basis: &ReducedBasisPair,
    range: std::ops::Range<u64>,
    seed: u64,
) -> Result<Vec<f64>> {
    if range.is_empty() {
        return Err(Error::InsufficientData(
            "Z̄ needs at least one sample".into(),
        ));
    }
    let l = basis.level;
    range
        .into_par_iter()
        .map(|i| {
            let xi = draw_input(&StreamKey::new(seed, Purpose::Zbar(l), i), h.inputs())?;
            basis.sample_z(h, &h.evaluate(l - 1, &xi)?.q)
        })
        .collect()
}

/// Paired (Yₗ, Zₗ) samples from the given stream.
pub fn cv_pairs(
    h: &dyn LevelHierarchy,
    basis: &ReducedBasisPair,
    seed: u64,
    purpose: Purpose,
    range: std::ops::Range<u64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let draws = draw_level(h, basis.level, seed, purpose, range)?;
    let y = corrections_of(basis.level, &draws);
    let z = draws
        .par_iter()
        .map(|d| basis.sample_z(h, &d.coarse_q))
        .collect::<Result<_>>()?;
    Ok((y, z))
}

/// Outcome of [`run_mlcv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlcvResult {
    pub result: EstimatorResult,
    pub cost_log: CostLog,
}

/// Main MLCV run. Level 0 and disabled levels are sampled exactly as in
/// MLMC. On enabled levels the non-basis pilot pairs are recycled, fresh
/// pairs top up to Ñₗ and Wₗ = Yₗ − θ*(Zₗ − Z̄ₗ).
pub fn run_mlcv(
    h: &dyn LevelHierarchy,
    pilot: &Pilot,
    bases: &[Option<ReducedBasisPair>],
    configs: &[CvLevelConfig],
    plan: &MlcvPlan,
) -> Result<MlcvResult> {
    let nl = h.num_levels();
    if plan.plan.samples.len() != nl || configs.len() != nl || bases.len() != nl {
        return Err(Error::Dimension(
            "plan, configs and bases must cover every level".into(),
        ));
    }
    let seed = pilot.seed;
    let n_p = pilot.n_samples;
    let mut log = CostLog {
        level_costs: (0..nl).map(|l| h.level_cost(l)).collect(),
        level0_samples: 0,
        main_pairs: vec![0; nl],
        basis_pairs: vec![0; nl],
        zbar_coarse: vec![0; nl],
    };
    let mut levels = Vec::with_capacity(nl);
    for l in 0..nl {
        let target = plan.plan.samples[l];
        let cfg = &configs[l];
        let basis = bases[l].as_ref();
        if cfg.enabled && basis.is_none() {
            return Err(Error::MissingArtifact(format!(
                "reduced basis for enabled level {l}"
            )));
        }
        let var_y = pilot.stats[l].var_y;
        let row = match basis.filter(|_| cfg.enabled) {
            None => {
                let mut y = pilot.levels[l].corrections();
                let fresh = target.saturating_sub(n_p);
                if fresh > 0 {
                    let draws = draw_level(h, l, seed, Purpose::MainY(l), 0..fresh as u64)?;
                    y.extend(corrections_of(l, &draws));
                }
                let n = y.len();
                let rank = basis.map_or(0, |b| b.rank);
                if l == 0 {
                    log.level0_samples = n;
                } else {
                    log.main_pairs[l] = n;
                    log.basis_pairs[l] = rank;
                }
                LevelResult {
                    level: l,
                    n_samples: n,
                    fresh_samples: fresh,
                    estimate: mean_of(&y),
                    var_y,
                    mserf: 1.0,
                    cost: (n + rank) as f64 * h.correction_cost(l),
                    cv: (l > 0).then_some(CvLevelResult {
                        enabled: false,
                        rank,
                        rho2: cfg.rho2,
                        ratio: cfg.ratio,
                        theta: 0.0,
                        zbar: 0.0,
                        n_zbar: 0,
                        basis_pairs: rank,
                        basis_dominates: false,
                    }),
                }
            }
            Some(basis) => {
                let samples = &pilot.levels[l];
                let keep: Vec<usize> = (0..samples.len())
                    .filter(|i| !basis.selected.contains(i))
                    .collect();
                let mut y: Vec<f64> = keep
                    .iter()
                    .map(|&i| samples.fine[i] - samples.coarse[i])
                    .collect();
                let mut z: Vec<f64> = keep
                    .par_iter()
                    .map(|&i| basis.sample_z(h, &samples.coarse_q[i]))
                    .collect::<Result<_>>()?;
                let fresh = target.saturating_sub(keep.len());
                if fresh > 0 {
                    let (fy, fz) = cv_pairs(h, basis, seed, Purpose::MainY(l), 0..fresh as u64)?;
                    y.extend(fy);
                    z.extend(fz);
                }
                let n_zbar = plan.n_zbar[l];
                let zbar = estimate_zbar(h, basis, n_zbar, seed)?;
                let w: Vec<f64> = y
                    .iter()
                    .zip(&z)
                    .map(|(yi, zi)| yi - cfg.theta * (zi - zbar))
                    .collect();
                let n = w.len();
                log.main_pairs[l] = n;
                log.basis_pairs[l] = basis.rank;
                log.zbar_coarse[l] = n_zbar;
                LevelResult {
                    level: l,
                    n_samples: n,
                    fresh_samples: fresh,
                    estimate: mean_of(&w),
                    var_y,
                    mserf: cfg.mserf(),
                    cost: (n + basis.rank) as f64 * h.correction_cost(l)
                        + n_zbar as f64 * h.level_cost(l - 1),
                    cv: Some(CvLevelResult {
                        enabled: true,
                        rank: basis.rank,
                        rho2: cfg.rho2,
                        ratio: cfg.ratio,
                        theta: cfg.theta,
                        zbar,
                        n_zbar,
                        basis_pairs: basis.rank,
                        basis_dominates: target < basis.rank,
                    }),
                }
            }
        };
        levels.push(row);
    }
    let result = EstimatorResult {
        method: Method::Mlcv,
        seed,
        epsilon: plan.plan.epsilon,
        estimate: levels.iter().map(|l| l.estimate).sum(),
        sampling_error: levels
            .iter()
            .map(|l| l.var_y / l.n_samples as f64 * l.mserf)
            .sum(),
        cost: log.total(),
        levels,
    };
    Ok(MlcvResult {
        result,
        cost_log: log,
    })
}

/// Relative errors of the partial sums, |Σₖ≤ₗ Ŵₖ − ref| / |ref|.
pub fn relative_error_curves(level_estimates: &[f64], reference: f64) -> Result<Vec<f64>> {
    if reference == 0.0 || !reference.is_finite() {
        return Err(Error::Data(
            "relative error needs a non-zero reference".into(),
        ));
    }
    let mut acc = 0.0;
    Ok(level_estimates
        .iter()
        .map(|e| {
            acc += e;
            (acc - reference).abs() / reference.abs()
        })
        .collect())
}
