//! Standard multilevel Monte Carlo: pilot run, rate fits, optimal
//! allocation and the telescoping estimator.

use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{check_level, LevelHierarchy};
use crate::rng::{draw_input, Purpose, StreamKey};
use crate::stats::{sample_variance, CoMoments};

/// Smallest number of samples allocated to any level.
pub const N_MIN: usize = 2;

/// `⌈x⌉`, ignoring round-off of a few ulps above an integer.
pub(crate) fn ceil_count(x: f64) -> usize {
    if !(x > 0.0) {
        return 0;
    }
    (x * (1.0 - 1e-13)).ceil() as usize
}

/// Estimator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mc,
    Mlmc,
    Mlcv,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::Mlmc => "mlmc",
            Method::Mlcv => "mlcv",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mc" => Ok(Method::Mc),
            "mlmc" => Ok(Method::Mlmc),
            "mlcv" => Ok(Method::Mlcv),
            _ => Err(Error::config("method", format!("unknown method `{s}`"))),
        }
    }
}

/// Raw pilot samples of one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSamples {
    pub level: usize,
    /// Qₗ per sample.
    pub fine: Vec<f64>,
    /// Qₗ₋₁ per sample; empty on level 0.
    pub coarse: Vec<f64>,
    /// Coarse output vectors qₗ₋₁ per sample; empty on level 0.
    pub coarse_q: Vec<Vec<f64>>,
}

impl LevelSamples {
    pub fn len(&self) -> usize {
        self.fine.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fine.is_empty()
    }

    /// Yₗ per sample.
    pub fn corrections(&self) -> Vec<f64> {
        if self.level == 0 {
            self.fine.clone()
        } else {
            self.fine
                .iter()
                .zip(&self.coarse)
                .map(|(f, c)| f - c)
                .collect()
        }
    }
}

/// Per-level summary of a sample of corrections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: usize,
    pub n_samples: usize,
    pub mean_y: f64,
    pub var_y: f64,
    pub mean_q: f64,
    pub var_q: f64,
    /// Cost of one sample of Yₗ.
    pub cost: f64,
    /// C(Qₗ).
    pub level_cost: f64,
    /// Mₗ.
    pub dofs: usize,
}

impl LevelStats {
    pub fn from_samples(h: &dyn LevelHierarchy, samples: &LevelSamples) -> Result<Self> {
        let y = samples.corrections();
        let my = CoMoments::compute_parallel(&y, &y);
        let mq = CoMoments::compute_parallel(&samples.fine, &samples.fine);
        let need = || Error::InsufficientData("level statistics need at least 2 samples".into());
        Ok(Self {
            level: samples.level,
            n_samples: y.len(),
            mean_y: my.mean_y,
            var_y: my.covariance().ok_or_else(need)?.max(0.0),
            mean_q: mq.mean_y,
            var_q: mq.covariance().ok_or_else(need)?.max(0.0),
            cost: h.correction_cost(samples.level),
            level_cost: h.level_cost(samples.level),
            dofs: h.dofs(samples.level),
        })
    }
}

/// Cached pilot run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pilot {
    pub seed: u64,
    pub n_samples: usize,
    pub levels: Vec<LevelSamples>,
    pub stats: Vec<LevelStats>,
    /// Mean wall time in seconds of one evaluation of each level.
    #[serde(skip)]
    pub timings: Vec<f64>,
}

impl Pilot {
    pub fn variances(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.var_y).collect()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.cost).collect()
    }

    /// Recompute the statistics against `h`, e.g. after a cost override.
    pub fn restat(&mut self, h: &dyn LevelHierarchy) -> Result<()> {
        self.stats = self
            .levels
            .iter()
            .map(|s| LevelStats::from_samples(h, s))
            .collect::<Result<_>>()?;
        Ok(())
    }
}

/// One coupled draw: (Qₗ, Qₗ₋₁, qₗ₋₁). Level 0 leaves the coarse part empty.
pub(crate) struct Draw {
    pub fine: f64,
    pub coarse: f64,
    pub coarse_q: Vec<f64>,
    elapsed: [f64; 2],
}

pub(crate) fn draw_level(
    h: &dyn LevelHierarchy,
    level: usize,
    seed: u64,
    purpose: Purpose,
    range: Range<u64>,
) -> Result<Vec<Draw>> {
    check_level(h, level)?;
    range
        .into_par_iter()
        .map(|i| {
            let xi = draw_input(&StreamKey::new(seed, purpose, i), h.inputs())?;
            let t = Instant::now();
            let fine = h.evaluate(level, &xi)?;
            let t_fine = t.elapsed().as_secs_f64();
            if level == 0 {
                return Ok(Draw {
                    fine: fine.value,
                    coarse: 0.0,
                    coarse_q: Vec::new(),
                    elapsed: [t_fine, 0.0],
                });
            }
            let t = Instant::now();
            let coarse = h.evaluate(level - 1, &xi)?;
            Ok(Draw {
                fine: fine.value,
                coarse: coarse.value,
                coarse_q: coarse.q,
                elapsed: [t_fine, t.elapsed().as_secs_f64()],
            })
        })
        .collect()
}

pub(crate) fn corrections_of(level: usize, draws: &[Draw]) -> Vec<f64> {
    draws
        .iter()
        .map(|d| {
            if level == 0 {
                d.fine
            } else {
                d.fine - d.coarse
            }
        })
        .collect()
}

/// Pilot run: `n_p` coupled samples per level from the pilot streams.
pub fn pilot_mlmc(h: &dyn LevelHierarchy, n_p: usize, seed: u64) -> Result<Pilot> {
    if n_p < N_MIN {
        return Err(Error::config(
            "pilot_samples",
            format!("need at least {N_MIN} pilot samples"),
        ));
    }
    let mut levels = Vec::with_capacity(h.num_levels());
    let mut time_sum = vec![0.0; h.num_levels()];
    let mut time_n = vec![0usize; h.num_levels()];
    for l in 0..h.num_levels() {
        let draws = draw_level(h, l, seed, Purpose::Pilot(l), 0..n_p as u64)?;
        for d in &draws {
            time_sum[l] += d.elapsed[0];
            time_n[l] += 1;
            if l > 0 {
                time_sum[l - 1] += d.elapsed[1];
                time_n[l - 1] += 1;
            }
        }
        levels.push(LevelSamples {
            level: l,
            fine: draws.iter().map(|d| d.fine).collect(),
            coarse: if l == 0 {
                Vec::new()
            } else {
                draws.iter().map(|d| d.coarse).collect()
            },
            coarse_q: draws
                .into_iter()
                .map(|d| d.coarse_q)
                .filter(|q| !q.is_empty())
                .collect(),
        });
    }
    let mut pilot = Pilot {
        seed,
        n_samples: n_p,
        levels,
        stats: Vec::new(),
        timings: time_sum
            .iter()
            .zip(&time_n)
            .map(|(s, n)| s / (*n).max(1) as f64)
            .collect(),
    };
    pilot.restat(h)?;
    Ok(pilot)
}

/// Least-squares line `log y = intercept + slope · log x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the log residuals.
    pub residual: f64,
}

pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<PowerLaw> {
    if x.len() != y.len() {
        return Err(Error::Dimension("power-law fit needs aligned data".into()));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(
            "power-law fit needs at least 2 points".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Data(
            "power-law fit needs positive finite data".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Data("power-law fit needs distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(PowerLaw {
        slope,
        intercept,
        residual,
    })
}

/// Fitted exponents: |E[Yₗ]| ∝ Mₗ^−α, 𝕍[Yₗ] ∝ Mₗ^−β, C(Qₗ) ∝ Mₗ^γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub alpha_levels: Vec<usize>,
    pub beta_levels: Vec<usize>,
    pub gamma_levels: Vec<usize>,
    pub alpha_residual: f64,
    pub beta_residual: f64,
    pub gamma_residual: f64,
}

/// Log-log regression of the level statistics on Mₗ. α and β use levels
/// ℓ ≥ 1 with non-zero mean and variance; γ uses every level.
pub fn fit_rates(stats: &[LevelStats]) -> Result<RateFit> {
    let pick = |f: &dyn Fn(&LevelStats) -> f64| -> (Vec<usize>, Vec<f64>, Vec<f64>) {
        let rows: Vec<&LevelStats> = stats
            .iter()
            .filter(|s| s.level >= 1 && f(s) > 0.0)
            .collect();
        (
            rows.iter().map(|s| s.level).collect(),
            rows.iter().map(|s| s.dofs as f64).collect(),
            rows.iter().map(|s| f(s)).collect(),
        )
    };
    let (al, ax, ay) = pick(&|s| s.mean_y.abs());
    let (bl, bx, by) = pick(&|s| s.var_y);
    if al.len() < 2 || bl.len() < 2 {
        return Err(Error::InsufficientData(
            "rate fits need at least 2 levels >= 1 with non-zero statistics".into(),
        ));
    }
    let a = power_law_fit(&ax, &ay)?;
    let b = power_law_fit(&bx, &by)?;
    let gx: Vec<f64> = stats.iter().map(|s| s.dofs as f64).collect();
    let gy: Vec<f64> = stats.iter().map(|s| s.level_cost).collect();
    let g = power_law_fit(&gx, &gy)?;
    Ok(RateFit {
        alpha: -a.slope,
        beta: -b.slope,
        gamma: g.slope,
        alpha_levels: al,
        beta_levels: bl,
        gamma_levels: stats.iter().map(|s| s.level).collect(),
        alpha_residual: a.residual,
        beta_residual: b.residual,
        gamma_residual: g.residual,
    })
}

/// Per-level sample counts for a target RMSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub epsilon: f64,
    pub samples: Vec<usize>,
    /// Variances the plan was built from (effective variances for MLCV).
    pub variances: Vec<f64>,
    pub costs: Vec<f64>,
    /// Every variance was zero; the plan is N_MIN everywhere.
    pub all_zero: bool,
}

impl AllocationPlan {
    /// Σ Vₗ / Nₗ under the plan's own variances.
    pub fn sampling_error(&self) -> f64 {
        self.variances
            .iter()
            .zip(&self.samples)
            .map(|(v, n)| v / *n as f64)
            .sum()
    }

    pub fn cost(&self) -> f64 {
        self.samples
            .iter()
            .zip(&self.costs)
            .map(|(n, c)| *n as f64 * c)
            .sum()
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::config(
            "epsilons",
            format!("epsilon must be positive, got {epsilon}"),
        ));
    }
    Ok(())
}

/// Nₗ = ⌈(2/ε²) Σₖ √(Vₖ Cₖ) · √(Vₗ / Cₗ)⌉, floored at [`N_MIN`].
pub fn allocate_mlmc(variances: &[f64], costs: &[f64], epsilon: f64) -> Result<AllocationPlan> {
    check_epsilon(epsilon)?;
    if variances.len() != costs.len() || variances.is_empty() {
        return Err(Error::Dimension(format!(
            "{} variances for {} costs",
            variances.len(),
            costs.len()
        )));
    }
    if variances.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Data(
            "variances must be finite and non-negative".into(),
        ));
    }
    if costs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::Data("costs must be finite and positive".into()));
    }
    let total: f64 = variances
        .iter()
        .zip(costs)
        .map(|(v, c)| (v * c).sqrt())
        .sum();
    let scale = 2.0 / (epsilon * epsilon) * total;
    let samples = variances
        .iter()
        .zip(costs)
        .map(|(v, c)| ceil_count(scale * (v / c).sqrt()).max(N_MIN))
        .collect();
    Ok(AllocationPlan {
        epsilon,
        samples,
        variances: variances.to_vec(),
        costs: costs.to_vec(),
        all_zero: total == 0.0,
    })
}

/// Cost of plain MC on the finest level: ⌈2𝕍[Q_L]/ε²⌉ · C(Q_L).
pub fn mc_cost_reference(var_q: f64, level_cost: f64, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if !(var_q > 0.0) {
        return Err(Error::Numerical(
            "MC reference cost needs a positive variance".into(),
        ));
    }
    Ok(mc_samples(var_q, epsilon) as f64 * level_cost)
}

pub(crate) fn mc_samples(var_q: f64, epsilon: f64) -> usize {
    ceil_count(2.0 * var_q / (epsilon * epsilon)).max(N_MIN)
}

/// Cost `run_mlmc` charges for `plan` without variance updates: pilot
/// samples are recycled, so level ℓ costs max(Nₗ, N_p) coupled pairs.
pub fn planned_mlmc_cost(h: &dyn LevelHierarchy, n_pilot: usize, plan: &AllocationPlan) -> f64 {
    plan.samples
        .iter()
        .enumerate()
        .map(|(l, n)| (*n).max(n_pilot) as f64 * h.correction_cost(l))
        .sum()
}

/// Extrapolated discretization bias against the ε/√2 budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasCheck {
    /// |E[Y_L]| / (s^α − 1).
    pub extrapolated: f64,
    /// ε / √2.
    pub budget: f64,
    pub ok: bool,
}

pub fn bias_check(stats: &[LevelStats], alpha: f64, epsilon: f64) -> Option<BiasCheck> {
    let n = stats.len();
    if n < 2 || !(alpha > 0.0) {
        return None;
    }
    let s = stats[n - 1].dofs as f64 / stats[n - 2].dofs as f64;
    let extrapolated = stats[n - 1].mean_y.abs() / (s.powf(alpha) - 1.0);
    let budget = epsilon / 2f64.sqrt();
    Some(BiasCheck {
        extrapolated,
        budget,
        ok: extrapolated <= budget,
    })
}

/// Per-level outcome of an estimator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: usize,
    /// Samples of Yₗ (or Wₗ) entering the level estimate.
    pub n_samples: usize,
    /// Of those, the ones drawn beyond the pilot.
    pub fresh_samples: usize,
    /// Ŷₗ, or Ŵₗ for MLCV.
    pub estimate: f64,
    /// Variance used for the sampling error.
    pub var_y: f64,
    /// MSE reduction factor applied to `var_y / n_samples`; 1 without CV.
    pub mserf: f64,
    /// Cost charged to this level.
    pub cost: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cv: Option<CvLevelResult>,
}

/// Control-variate details of one MLCV level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvLevelResult {
    pub enabled: bool,
    pub rank: usize,
    pub rho2: f64,
    pub ratio: f64,
    pub theta: f64,
    pub zbar: f64,
    pub n_zbar: usize,
    pub basis_pairs: usize,
    /// Ñₗ fell below the basis rank, so the basis cost dominates the level.
    pub basis_dominates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub method: Method,
    pub seed: u64,
    pub epsilon: f64,
    pub estimate: f64,
    pub levels: Vec<LevelResult>,
    /// Σ 𝕍ₗ · MSERFₗ / Nₗ.
    pub sampling_error: f64,
    pub cost: f64,
}

impl EstimatorResult {
    pub fn level_estimates(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.estimate).collect()
    }
}

pub(crate) fn mean_of(values: &[f64]) -> f64 {
    CoMoments::compute_parallel(values, values).mean_y
}

/// Options for [`run_mlmc`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MlmcOptions {
    /// Re-estimate 𝕍[Yₗ] from all drawn samples and top up once.
    pub update_variances: bool,
}

/// Telescoping estimator Σ Ŷₗ. Pilot samples are recycled first, then
/// fresh samples come from the main-run streams.
pub fn run_mlmc(
    h: &dyn LevelHierarchy,
    pilot: &Pilot,
    plan: &AllocationPlan,
    options: MlmcOptions,
) -> Result<EstimatorResult> {
    let nl = h.num_levels();
    if plan.samples.len() != nl || pilot.levels.len() != nl {
        return Err(Error::Dimension(format!(
            "plan covers {} levels and pilot {}, model has {nl}",
            plan.samples.len(),
            pilot.levels.len()
        )));
    }
    let mut samples = plan.samples.clone();
    let mut ys: Vec<Vec<f64>> = pilot.levels.iter().map(|s| s.corrections()).collect();
    let mut variances = plan.variances.clone();
    let rounds = if options.update_variances { 2 } else { 1 };
    for round in 0..rounds {
        for l in 0..nl {
            let have = ys[l].len();
            if samples[l] > have {
                let fresh = have - pilot.n_samples;
                let draws = draw_level(
                    h,
                    l,
                    pilot.seed,
                    Purpose::MainY(l),
                    fresh as u64..(samples[l] - pilot.n_samples) as u64,
                )?;
                ys[l].extend(corrections_of(l, &draws));
            }
        }
        if round + 1 < rounds {
            variances = ys
                .iter()
                .map(|y| sample_variance(y))
                .collect::<Result<_>>()?;
            samples = allocate_mlmc(&variances, &plan.costs, plan.epsilon)?.samples;
        }
    }
    let levels: Vec<LevelResult> = (0..nl)
        .map(|l| LevelResult {
            level: l,
            n_samples: ys[l].len(),
            fresh_samples: ys[l].len() - pilot.n_samples,
            estimate: mean_of(&ys[l]),
            var_y: variances[l],
            mserf: 1.0,
            cost: ys[l].len() as f64 * h.correction_cost(l),
            cv: None,
        })
        .collect();
    Ok(EstimatorResult {
        method: Method::Mlmc,
        seed: pilot.seed,
        epsilon: plan.epsilon,
        estimate: levels.iter().map(|l| l.estimate).sum(),
        sampling_error: levels.iter().map(|l| l.var_y / l.n_samples as f64).sum(),
        cost: levels.iter().map(|l| l.cost).sum(),
        levels,
    })
}

/// Plain MC on the finest level with ⌈2𝕍[Q_L]/ε²⌉ samples from the oracle
/// stream.
pub fn run_mc(
    h: &dyn LevelHierarchy,
    var_q: f64,
    epsilon: f64,
    seed: u64,
) -> Result<EstimatorResult> {
    check_epsilon(epsilon)?;
    let level = h.finest_level();
    let n = mc_samples(var_q, epsilon);
    let values = oracle_samples(h, level, n, seed)?;
    let estimate = mean_of(&values);
    let cost = n as f64 * h.level_cost(level);
    Ok(EstimatorResult {
        method: Method::Mc,
        seed,
        epsilon,
        estimate,
        levels: vec![LevelResult {
            level,
            n_samples: n,
            fresh_samples: n,
            estimate,
            var_y: var_q,
            mserf: 1.0,
            cost,
            cv: None,
        }],
        sampling_error: var_q / n as f64,
        cost,
    })
}

/// `n` independent evaluations of Q at `level` from the oracle stream.
pub fn oracle_samples(
    h: &dyn LevelHierarchy,
    level: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_level(h, level)?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let xi = draw_input(&StreamKey::new(seed, Purpose::Oracle, i), h.inputs())?;
            Ok(h.evaluate(level, &xi)?.value)
        })
        .collect()
}

/// Reference E[Qₗ] by plain MC with `n` samples.
pub fn oracle_mean(h: &dyn LevelHierarchy, level: usize, n: usize, seed: u64) -> Result<f64> {
    Ok(mean_of(&oracle_samples(h, level, n, seed)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ConstantModel, SyntheticLowRank, SyntheticParams};

    fn stats_with(means: &[f64], vars: &[f64], dofs: &[usize]) -> Vec<LevelStats> {
        (0..means.len())
            .map(|l| LevelStats {
                level: l,
                n_samples: 100,
                mean_y: means[l],
                var_y: vars[l],
                mean_q: 0.0,
                var_q: 1.0,
                cost: dofs[l] as f64,
                level_cost: dofs[l] as f64,
                dofs: dofs[l],
            })
            .collect()
    }

    #[test]
    fn hand_derived_plan() {
        let p = allocate_mlmc(&[4.0, 1.0], &[1.0, 4.0], 2f64.sqrt()).unwrap();
        assert_eq!(p.samples, vec![8, 2]);
        assert!(p.sampling_error() <= 1.0 + 1e-12);
    }

    #[test]
    fn single_level_floor() {
        let p = allocate_mlmc(&[1.0], &[1.0], 2f64.sqrt()).unwrap();
        assert_eq!(p.samples, vec![2]);
    }

    #[test]
    fn halving_epsilon_quadruples() {
        let v = [3.0, 0.7, 0.05];
        let c = [1.0, 3.0, 9.0];
        let a = allocate_mlmc(&v, &c, 0.01).unwrap();
        let b = allocate_mlmc(&v, &c, 0.005).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((*y as f64 / *x as f64 - 4.0).abs() < 0.01);
        }
    }

    #[test]
    fn zero_variances_flagged() {
        let p = allocate_mlmc(&[0.0, 0.0], &[1.0, 2.0], 0.1).unwrap();
        assert!(p.all_zero);
        assert_eq!(p.samples, vec![N_MIN, N_MIN]);
        assert!(allocate_mlmc(&[1.0], &[1.0], 0.0).is_err());
        assert!(allocate_mlmc(&[1.0], &[1.0, 2.0], 0.1).is_err());
    }

    #[test]
    fn mc_reference() {
        assert_eq!(mc_cost_reference(1.0, 1.0, 2f64.sqrt()).unwrap(), 2.0);
        let a = mc_cost_reference(0.37, 5.0, 0.001).unwrap();
        let b = mc_cost_reference(0.37, 5.0, 0.003).unwrap();
        assert!((a / b - 9.0).abs() < 1e-4);
        assert!(mc_cost_reference(0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn exact_power_laws() {
        let dofs = [16, 32, 64, 128, 256];
        let means: Vec<f64> = dofs.iter().map(|m| (*m as f64).powf(-0.92)).collect();
        let vars: Vec<f64> = dofs.iter().map(|m| (*m as f64).powf(-1.7)).collect();
        let fit = fit_rates(&stats_with(&means, &vars, &dofs)).unwrap();
        assert!((fit.alpha - 0.92).abs() < 1e-10);
        assert!((fit.beta - 1.7).abs() < 1e-10);
        assert!((fit.gamma - 1.0).abs() < 1e-10);
        assert_eq!(fit.beta_levels, vec![1, 2, 3, 4]);
    }

    #[test]
    fn noisy_power_law() {
        let dofs: Vec<usize> = (0..8).map(|l| 8 << l).collect();
        let noise = [1.03, 0.96, 1.05, 0.97, 1.02, 0.95, 1.04, 0.98];
        let vars: Vec<f64> = dofs
            .iter()
            .zip(noise)
            .map(|(m, e)| (*m as f64).powf(-1.7) * e)
            .collect();
        let fit = fit_rates(&stats_with(&vars, &vars, &dofs)).unwrap();
        assert!((fit.beta - 1.7).abs() < 0.1);
    }

    #[test]
    fn rate_fit_needs_two_levels() {
        assert!(fit_rates(&stats_with(&[1.0, 0.5], &[1.0, 0.5], &[4, 8])).is_err());
    }

    fn synthetic() -> SyntheticLowRank {
        SyntheticLowRank::new(SyntheticParams::default()).unwrap()
    }

    #[test]
    fn deterministic_model_pilot_and_run() {
        let h = ConstantModel::new(vec![vec![1.0], vec![1.25], vec![1.5, 1.75]]).unwrap();
        let pilot = pilot_mlmc(&h, 10, 0).unwrap();
        assert!(pilot.stats.iter().all(|s| s.var_y == 0.0));
        let plan = allocate_mlmc(&pilot.variances(), &pilot.costs(), 0.1).unwrap();
        let r = run_mlmc(&h, &pilot, &plan, MlmcOptions::default()).unwrap();
        assert_eq!(r.estimate, 1.625);
        let pilot_cost: f64 = (0..3).map(|l| 10.0 * h.correction_cost(l)).sum();
        assert_eq!(r.cost, pilot_cost);
    }

    #[test]
    fn pilot_is_reproducible_and_decays() {
        let h = synthetic();
        let a = pilot_mlmc(&h, 200, 4).unwrap();
        let b = pilot_mlmc(&h, 200, 4).unwrap();
        assert_eq!(a.stats, b.stats);
        assert!(a.stats[1].var_y > a.stats[2].var_y);
        assert!(a.stats[0].var_y > a.stats[1].var_y);
    }

    #[test]
    fn run_is_reproducible_and_linear_in_samples() {
        let h = synthetic();
        let pilot = pilot_mlmc(&h, 50, 9).unwrap();
        let plan = allocate_mlmc(&pilot.variances(), &pilot.costs(), 0.02).unwrap();
        let a = run_mlmc(&h, &pilot, &plan, MlmcOptions::default()).unwrap();
        let b = run_mlmc(&h, &pilot, &plan, MlmcOptions::default()).unwrap();
        assert_eq!(a, b);
        let sum: f64 = a.level_estimates().iter().sum();
        assert!((a.estimate - sum).abs() <= 1e-12 * a.estimate.abs());
        let expect: f64 = (0..3)
            .map(|l| plan.samples[l].max(50) as f64 * h.correction_cost(l))
            .sum();
        assert_eq!(a.cost, expect);

        let mut doubled = pilot.clone();
        for s in &mut doubled.levels {
            s.fine.iter_mut().for_each(|v| *v *= 2.0);
            s.coarse.iter_mut().for_each(|v| *v *= 2.0);
        }
        let small = allocate_mlmc(&pilot.variances(), &pilot.costs(), 10.0).unwrap();
        let x = run_mlmc(&h, &pilot, &small, MlmcOptions::default()).unwrap();
        let y = run_mlmc(&h, &doubled, &small, MlmcOptions::default()).unwrap();
        assert_eq!(y.estimate, 2.0 * x.estimate);
    }

    #[test]
    fn update_variances_tops_up() {
        let h = synthetic();
        let pilot = pilot_mlmc(&h, 10, 2).unwrap();
        let plan = allocate_mlmc(&pilot.variances(), &pilot.costs(), 0.02).unwrap();
        let opts = MlmcOptions {
            update_variances: true,
        };
        let r = run_mlmc(&h, &pilot, &plan, opts).unwrap();
        for (lr, n) in r.levels.iter().zip(&plan.samples) {
            assert!(lr.n_samples >= (*n).max(10));
        }
    }

    #[test]
    fn oracle_agrees_with_exact_mean() {
        let h = synthetic();
        let samples = oracle_samples(&h, 2, 40_000, 1).unwrap();
        let m = mean_of(&samples);
        let se = (sample_variance(&samples).unwrap() / 40_000.0).sqrt();
        assert!((m - h.exact_mean(2)).abs() < 4.0 * se);
    }

    #[test]
    fn bias_check_flags() {
        let st = stats_with(&[1.0, 0.1, 0.025], &[1.0; 3], &[8, 16, 32]);
        let c = bias_check(&st, 2.0, 0.1).unwrap();
        assert!((c.extrapolated - 0.025 / 3.0).abs() < 1e-15);
        assert!(c.ok);
        assert!(!bias_check(&st, 2.0, 0.001).unwrap().ok);
    }
}
