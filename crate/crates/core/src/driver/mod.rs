//! Configuration-driven studies: pilot, estimate and compare, with their
//! on-disk artifacts.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use config::{short_hash, CostMode, ModelConfig, Overrides, RunConfig, SCHEMA_VERSION};
pub use report::{
    read_csv, read_json, write_csv, write_json, CompareRow, LevelRow, PilotLevelRow, PilotReport,
    PlanRow, RunReport, Totals,
};

use crate::error::{Error, Result};
use crate::mlcv::{
    build_bases, configure_cv, plan_mlcv, planned_cost_log, run_mlcv, BasisKey, BasisRecord,
    CvLevelConfig, MlcvPlan, ReducedBasisPair,
};
use crate::mlmc::{
    allocate_mlmc, bias_check, fit_rates, mc_cost_reference, pilot_mlmc, planned_mlmc_cost, run_mc,
    run_mlmc, AllocationPlan, BiasCheck, EstimatorResult, Method, MlmcOptions, Pilot, RateFit,
};
use crate::models::{CostOverride, LevelHierarchy};

pub const PILOT_REPORT: &str = "pilot.json";
pub const PILOT_SAMPLES: &str = "pilot_samples.json";
pub const PILOT_LEVELS: &str = "pilot_levels.csv";
pub const BASES_DIR: &str = "bases";
pub const COMPARE: &str = "compare.csv";

/// Pilot samples as persisted, with the costs they were planned with.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PilotArtifact {
    pilot_hash: String,
    level_costs: Vec<f64>,
    pilot: Pilot,
}

/// A cached basis; `record` is absent for a degenerate level.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct BasisEntry {
    key: BasisKey,
    record: Option<BasisRecord>,
}

/// Everything the main runs need once the pilot is done.
pub struct Study {
    pub config: RunConfig,
    pub hierarchy: Arc<dyn LevelHierarchy>,
    pub pilot: Pilot,
    pub bases: Vec<Option<ReducedBasisPair>>,
    pub cv: Vec<CvLevelConfig>,
    pub rates: Option<RateFit>,
}

/// Run `f` on a pool of `threads` workers, or on the global pool.
pub fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))?
            .install(f),
    }
}

fn epsilon_tag(eps: f64) -> String {
    format!("{eps}")
}

pub fn report_path(dir: &Path, method: Method, eps: f64) -> PathBuf {
    dir.join(format!(
        "report_{}_{}.json",
        method.as_str(),
        epsilon_tag(eps)
    ))
}

pub fn levels_path(dir: &Path, method: Method, eps: f64) -> PathBuf {
    dir.join(format!(
        "levels_{}_{}.csv",
        method.as_str(),
        epsilon_tag(eps)
    ))
}

fn basis_path(dir: &Path, level: usize) -> PathBuf {
    dir.join(BASES_DIR).join(format!("level_{level}.json"))
}

fn basis_key(config: &RunConfig, level: usize) -> BasisKey {
    BasisKey {
        model_hash: config.pilot_hash(),
        level,
        seed: config.master_seed,
        pilot_samples: config.pilot_samples,
        termination: format!("{:?}", config.rank_policy.termination(level)),
    }
}

/// Config as echoed in reports: everything except where and how fast it ran.
fn echo(config: &RunConfig) -> serde_json::Value {
    let mut v = serde_json::to_value(config).expect("config serializes");
    if let Some(map) = v.as_object_mut() {
        map.remove("output_dir");
        map.remove("threads");
    }
    v
}

fn report_hash(config: &RunConfig) -> String {
    short_hash(&echo(config).to_string())
}

fn measured(h: Arc<dyn LevelHierarchy>, costs: Vec<f64>) -> Result<Arc<dyn LevelHierarchy>> {
    Ok(Arc::new(CostOverride::new(h, costs)?))
}

impl Study {
    /// Pilot run, bases and control-variate settings, without touching disk.
    pub fn pilot(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let mut hierarchy = config.hierarchy()?;
        let mut pilot = pilot_mlmc(hierarchy.as_ref(), config.pilot_samples, config.master_seed)?;
        if config.cost_mode == CostMode::Measured {
            let costs = pilot.timings.iter().map(|t| t.max(1e-9)).collect();
            hierarchy = measured(hierarchy, costs)?;
            pilot.restat(hierarchy.as_ref())?;
        }
        let bases = build_bases(hierarchy.as_ref(), &pilot, &config.rank_policy)?;
        Self::assemble(config, hierarchy, pilot, bases)
    }

    fn assemble(
        config: RunConfig,
        hierarchy: Arc<dyn LevelHierarchy>,
        pilot: Pilot,
        bases: Vec<Option<ReducedBasisPair>>,
    ) -> Result<Self> {
        let cv = configure_cv(
            hierarchy.as_ref(),
            &pilot,
            &bases,
            config.s2,
            config.force_no_cv,
        )?;
        let rates = fit_rates(&pilot.stats).ok();
        Ok(Self {
            config,
            hierarchy,
            pilot,
            bases,
            cv,
            rates,
        })
    }

    /// Reload the artifacts written by [`cmd_pilot`] for `config`.
    pub fn load(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let dir = config.output_dir.clone();
        let rerun = |why: String| {
            Error::MissingArtifact(format!(
                "{why}; run `mlcv pilot <config>` with this configuration first"
            ))
        };
        let path = dir.join(PILOT_SAMPLES);
        if !path.exists() {
            return Err(rerun(format!("no pilot samples at {}", path.display())));
        }
        let artifact: PilotArtifact = read_json(&path)?;
        if artifact.pilot_hash != config.pilot_hash() {
            return Err(rerun(format!(
                "pilot samples at {} are stale",
                path.display()
            )));
        }
        let mut hierarchy = config.hierarchy()?;
        if config.cost_mode == CostMode::Measured {
            hierarchy = measured(hierarchy, artifact.level_costs.clone())?;
        }
        let mut bases = vec![None];
        for l in 1..hierarchy.num_levels() {
            let path = basis_path(&dir, l);
            if !path.exists() {
                return Err(rerun(format!("no cached basis at {}", path.display())));
            }
            let entry: BasisEntry = read_json(&path)?;
            if entry.key != basis_key(&config, l) {
                return Err(rerun(format!(
                    "cached basis at {} is stale",
                    path.display()
                )));
            }
            bases.push(
                entry
                    .record
                    .as_ref()
                    .map(ReducedBasisPair::from_record)
                    .transpose()?,
            );
        }
        Self::assemble(config, hierarchy, artifact.pilot, bases)
    }

    fn h(&self) -> &dyn LevelHierarchy {
        self.hierarchy.as_ref()
    }

    pub fn mlmc_plan(&self, eps: f64) -> Result<AllocationPlan> {
        allocate_mlmc(&self.pilot.variances(), &self.pilot.costs(), eps)
    }

    pub fn mlcv_plan(&self, eps: f64) -> Result<MlcvPlan> {
        plan_mlcv(&self.pilot, &self.cv, eps)
    }

    fn finest_var_q(&self) -> f64 {
        self.pilot.stats[self.h().finest_level()].var_q
    }

    pub fn mc_cost(&self, eps: f64) -> Option<f64> {
        mc_cost_reference(
            self.finest_var_q(),
            self.h().level_cost(self.h().finest_level()),
            eps,
        )
        .ok()
    }

    /// Planned MLMC cost; equal to the run cost without variance updates.
    pub fn planned_mlmc_cost(&self, eps: f64) -> Result<f64> {
        Ok(planned_mlmc_cost(
            self.h(),
            self.pilot.n_samples,
            &self.mlmc_plan(eps)?,
        ))
    }

    /// Planned MLCV cost; equal to the run cost.
    pub fn planned_mlcv_cost(&self, eps: f64) -> Result<f64> {
        Ok(planned_cost_log(
            self.h(),
            self.pilot.n_samples,
            &self.cv,
            &self.mlcv_plan(eps)?,
        )
        .total())
    }

    pub fn bias(&self, eps: f64) -> Option<BiasCheck> {
        self.rates
            .as_ref()
            .and_then(|r| bias_check(&self.pilot.stats, r.alpha, eps))
    }

    pub fn plan_row(&self, eps: f64) -> Result<PlanRow> {
        let mlmc = self.mlmc_plan(eps)?;
        let mlcv = self.mlcv_plan(eps)?;
        let cost_mlmc = self.planned_mlmc_cost(eps)?;
        let cost_mlcv = self.planned_mlcv_cost(eps)?;
        Ok(PlanRow {
            epsilon: eps,
            basis_dominated_levels: (1..self.cv.len())
                .filter(|&l| self.cv[l].enabled && mlcv.plan.samples[l] < self.cv[l].rank)
                .collect(),
            mlmc_samples: mlmc.samples,
            mlcv_samples: mlcv.plan.samples,
            n_zbar: mlcv.n_zbar,
            cost_mc: self.mc_cost(eps),
            cost_mlmc,
            cost_mlcv,
            ratio: cost_mlcv / cost_mlmc,
            bias: self.bias(eps),
        })
    }

    pub fn pilot_report(&self) -> Result<PilotReport> {
        let h = self.h();
        let levels = self
            .pilot
            .stats
            .iter()
            .map(|s| {
                let cfg = &self.cv[s.level];
                PilotLevelRow {
                    level: s.level,
                    dofs: s.dofs,
                    output_dim: h.output_dim(s.level),
                    level_cost: s.level_cost,
                    cost: s.cost,
                    mean_y: s.mean_y,
                    var_y: s.var_y,
                    mean_q: s.mean_q,
                    var_q: s.var_q,
                    rank: cfg.rank,
                    residual_norm: self.bases[s.level]
                        .as_ref()
                        .map_or(0.0, |b| b.residual_norm),
                    rho2: cfg.rho2,
                    mserf: cfg.mserf(),
                    cv_enabled: cfg.enabled,
                }
            })
            .collect();
        let plans: Vec<PlanRow> = self
            .config
            .epsilons
            .iter()
            .map(|&e| self.plan_row(e))
            .collect::<Result<_>>()?;
        let mut warnings = Vec::new();
        if self.rates.is_none() {
            warnings
                .push("rate fit unavailable (needs two levels with non-zero corrections)".into());
        }
        for p in &plans {
            warnings.extend(plan_warnings(p));
        }
        if self.pilot.variances().iter().all(|v| *v == 0.0) {
            warnings
                .push("all pilot variances are zero; plans use the minimum sample count".into());
        }
        Ok(PilotReport {
            schema_version: SCHEMA_VERSION,
            seed: self.config.master_seed,
            config_hash: report_hash(&self.config),
            pilot_hash: self.config.pilot_hash(),
            pilot_samples: self.pilot.n_samples,
            cost_mode: self.config.cost_mode,
            levels,
            cv: self.cv.clone(),
            rates: self.rates.clone(),
            plans,
            warnings,
            config: echo(&self.config),
        })
    }

    /// Run `method` at `eps` and summarize it.
    pub fn estimate(&self, method: Method, eps: f64) -> Result<RunReport> {
        let h = self.h();
        let (result, cost_log) = match method {
            Method::Mc => (
                run_mc(h, self.finest_var_q(), eps, self.config.master_seed)?,
                None,
            ),
            Method::Mlmc => {
                let options = MlmcOptions {
                    update_variances: self.config.update_variances,
                };
                (
                    run_mlmc(h, &self.pilot, &self.mlmc_plan(eps)?, options)?,
                    None,
                )
            }
            Method::Mlcv => {
                let r = run_mlcv(h, &self.pilot, &self.bases, &self.cv, &self.mlcv_plan(eps)?)?;
                (r.result, Some(r.cost_log))
            }
        };
        let mlmc_cost = self.planned_mlmc_cost(eps)?;
        let mut warnings = Vec::new();
        let bias = self.bias(eps);
        if let Some(b) = bias.filter(|b| !b.ok) {
            warnings.push(bias_warning(eps, &b));
        }
        if method == Method::Mlcv {
            for lr in &result.levels {
                if lr.cv.as_ref().is_some_and(|c| c.basis_dominates) {
                    warnings.push(format!(
                        "level {}: planned samples below the basis rank, basis cost dominates",
                        lr.level
                    ));
                }
            }
            if result.cost > mlmc_cost {
                warnings.push(format!("MLCV costs more than MLMC at epsilon {eps}"));
            }
        }
        Ok(RunReport {
            schema_version: SCHEMA_VERSION,
            method,
            seed: self.config.master_seed,
            config_hash: report_hash(&self.config),
            epsilon: eps,
            levels: self.level_rows(&result),
            totals: Totals {
                estimate: result.estimate,
                sampling_error: result.sampling_error,
                sampling_budget: eps * eps / 2.0,
                cost: result.cost,
                mc_cost: self.mc_cost(eps),
                mlmc_cost,
                cost_ratio: result.cost / mlmc_cost,
            },
            rates: self.rates.clone(),
            bias,
            cost_log,
            warnings,
            config: echo(&self.config),
        })
    }

    fn level_rows(&self, result: &EstimatorResult) -> Vec<LevelRow> {
        let h = self.h();
        result
            .levels
            .iter()
            .map(|lr| {
                let s = &self.pilot.stats[lr.level];
                let cv = lr.cv.as_ref().filter(|c| c.enabled);
                LevelRow {
                    level: lr.level,
                    dofs: h.dofs(lr.level),
                    output_dim: h.output_dim(lr.level),
                    mean_y: if result.method == Method::Mc {
                        s.mean_q
                    } else {
                        s.mean_y
                    },
                    var_y: lr.var_y,
                    rho2: cv.map_or(0.0, |c| c.rho2),
                    mserf: lr.mserf,
                    rank: lr.cv.as_ref().map_or(0, |c| c.rank),
                    theta: cv.map_or(0.0, |c| c.theta),
                    n_samples: lr.n_samples,
                    n_zbar: cv.map_or(0, |c| c.n_zbar),
                    estimate: lr.estimate,
                    cost: lr.cost,
                    cost_share: lr.cost / result.cost,
                }
            })
            .collect()
    }

    pub fn compare_row(&self, eps: f64) -> Result<CompareRow> {
        let levels = (0..self.h().num_levels())
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        let levels = match &self.config.levels {
            Some(sub) => sub
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(" "),
            None => levels,
        };
        let cost_mlmc = self.planned_mlmc_cost(eps)?;
        let cost_mlcv = self.planned_mlcv_cost(eps)?;
        Ok(CompareRow {
            epsilon: eps,
            levels,
            cost_mc: self.mc_cost(eps),
            cost_mlmc,
            cost_mlcv,
            ratio: cost_mlcv / cost_mlmc,
        })
    }
}

fn bias_warning(eps: f64, b: &BiasCheck) -> String {
    format!(
        "epsilon {eps}: extrapolated bias {:.3e} exceeds the budget {:.3e}",
        b.extrapolated, b.budget
    )
}

fn plan_warnings(p: &PlanRow) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(b) = p.bias.filter(|b| !b.ok) {
        out.push(bias_warning(p.epsilon, &b));
    }
    for l in &p.basis_dominated_levels {
        out.push(format!(
            "epsilon {}: level {l} plans fewer samples than the basis rank",
            p.epsilon
        ));
    }
    if p.ratio > 1.0 {
        out.push(format!(
            "epsilon {}: MLCV is planned to cost more than MLMC",
            p.epsilon
        ));
    }
    out
}

/// Pilot run; writes the pilot report, samples, level table and bases.
pub fn cmd_pilot(config: &RunConfig) -> Result<PilotReport> {
    in_pool(config.threads, || {
        let study = Study::pilot(config.clone())?;
        let report = study.pilot_report()?;
        let dir = &config.output_dir;
        let artifact = PilotArtifact {
            pilot_hash: config.pilot_hash(),
            level_costs: (0..study.h().num_levels())
                .map(|l| study.h().level_cost(l))
                .collect(),
            pilot: study.pilot.clone(),
        };
        write_json(&dir.join(PILOT_SAMPLES), &artifact)?;
        for l in 1..study.bases.len() {
            let key = basis_key(config, l);
            let entry = BasisEntry {
                record: study.bases[l].as_ref().map(|b| b.to_record(key.clone())),
                key,
            };
            write_json(&basis_path(dir, l), &entry)?;
        }
        write_json(&dir.join(PILOT_REPORT), &report)?;
        write_csv(
            &dir.join(PILOT_LEVELS),
            report.seed,
            &report.config_hash,
            &report.levels,
        )?;
        Ok(report)
    })
}

/// Main runs for every ε and the given method (all configured methods when
/// `None`).
pub fn cmd_estimate(config: &RunConfig, method: Option<Method>) -> Result<Vec<RunReport>> {
    let methods = method.map_or_else(|| config.methods.clone(), |m| vec![m]);
    in_pool(config.threads, || {
        let study = Study::load(config.clone())?;
        let mut out = Vec::new();
        for &eps in &config.epsilons {
            for &m in &methods {
                let report = study.estimate(m, eps)?;
                let dir = &config.output_dir;
                write_json(&report_path(dir, m, eps), &report)?;
                write_csv(
                    &levels_path(dir, m, eps),
                    report.seed,
                    &report.config_hash,
                    &report.levels,
                )?;
                out.push(report);
            }
        }
        Ok(out)
    })
}

/// Cost table over the configured ε list.
pub fn cmd_compare(config: &RunConfig) -> Result<Vec<CompareRow>> {
    in_pool(config.threads, || {
        let study = Study::load(config.clone())?;
        let rows: Vec<CompareRow> = config
            .epsilons
            .iter()
            .map(|&e| study.compare_row(e))
            .collect::<Result<_>>()?;
        write_csv(
            &config.output_dir.join(COMPARE),
            config.master_seed,
            &report_hash(config),
            &rows,
        )?;
        Ok(rows)
    })
}
