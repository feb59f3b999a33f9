use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mlcv::{RankPolicy, DEFAULT_S2};
use crate::mlmc::Method;
use crate::models::{
    ConstantModel, Diffusion1d, DiffusionParams, LevelHierarchy, SubHierarchy, SyntheticLowRank,
    SyntheticParams,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Built-in model and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelConfig {
    #[serde(rename = "synthetic_low_rank")]
    SyntheticLowRank(SyntheticParams),
    #[serde(rename = "diffusion_1d")]
    Diffusion1d(DiffusionParams),
    /// Input-independent outputs, one vector per level.
    #[serde(rename = "constant")]
    Constant { values: Vec<Vec<f64>> },
}

impl ModelConfig {
    pub fn build(&self) -> Result<Arc<dyn LevelHierarchy>> {
        Ok(match self {
            ModelConfig::SyntheticLowRank(p) => Arc::new(SyntheticLowRank::new(p.clone())?),
            ModelConfig::Diffusion1d(p) => Arc::new(Diffusion1d::new(p.clone())?),
            ModelConfig::Constant { values } => Arc::new(ConstantModel::new(values.clone())?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    /// Cost C(Qₗ) declared by the model.
    #[default]
    Declared,
    /// Mean wall time per evaluation measured during the pilot.
    Measured,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}
fn default_methods() -> Vec<Method> {
    vec![Method::Mc, Method::Mlmc, Method::Mlcv]
}
fn default_rank_policy() -> RankPolicy {
    RankPolicy::Tolerance { tolerance: 1e-8 }
}
fn default_s2() -> f64 {
    DEFAULT_S2
}
fn default_pilot() -> usize {
    100
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// A study configuration, read from JSON. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub model: ModelConfig,
    /// Subset of model levels; all levels when absent.
    #[serde(default)]
    pub levels: Option<Vec<usize>>,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_rank_policy")]
    pub rank_policy: RankPolicy,
    #[serde(default = "default_s2")]
    pub s2: f64,
    #[serde(default = "default_pilot")]
    pub pilot_samples: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub cost_mode: CostMode,
    /// Worker threads; rayon's default when absent.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub update_variances: bool,
    /// Set ρ² = 0 on every level (MLCV degenerates to MLMC).
    #[serde(default)]
    pub force_no_cv: bool,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

/// Command-line overrides of config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            Error::config(
                origin,
                format!("{e} (line {}, column {})", e.line(), e.column()),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(
                path.display().to_string(),
                format!("cannot read config: {e}"),
            )
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.master_seed = s;
        }
        if let Some(d) = &o.out_dir {
            self.output_dir = d.clone();
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!(
                    "unsupported schema version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        if self.epsilons.is_empty() {
            return Err(Error::config(
                "epsilons",
                "at least one epsilon is required",
            ));
        }
        for (i, e) in self.epsilons.iter().enumerate() {
            if !(e.is_finite() && *e > 0.0) {
                return Err(Error::config(
                    format!("epsilons[{i}]"),
                    "epsilon must be positive",
                ));
            }
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "at least one method is required"));
        }
        if let Some(levels) = &self.levels {
            if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config(
                    "levels",
                    "levels must be non-empty and strictly increasing",
                ));
            }
        }
        if !(self.s2.is_finite() && self.s2 > 1.0) {
            return Err(Error::config("s2", "s2 must exceed 1"));
        }
        if self.pilot_samples < 2 {
            return Err(Error::config(
                "pilot_samples",
                "need at least 2 pilot samples",
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "threads must be at least 1"));
        }
        Ok(())
    }

    /// The hierarchy the study runs on, restricted to `levels`.
    pub fn hierarchy(&self) -> Result<Arc<dyn LevelHierarchy>> {
        let full = self.model.build()?;
        let h: Arc<dyn LevelHierarchy> = match &self.levels {
            Some(levels) => Arc::new(SubHierarchy::new(full, levels.clone())?),
            None => full,
        };
        self.rank_policy
            .validate(h.num_levels())
            .map_err(|e| match e {
                Error::Config { path, message } => Error::config(path, message),
                other => other,
            })?;
        Ok(h)
    }

    /// Short SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        short_hash(&serde_json::to_string(self).expect("config serializes"))
    }

    /// Hash of the fields the pilot artifacts depend on.
    pub fn pilot_hash(&self) -> String {
        let key = serde_json::json!({
            "model": self.model,
            "levels": self.levels,
            "pilot_samples": self.pilot_samples,
            "master_seed": self.master_seed,
            "cost_mode": self.cost_mode,
        });
        short_hash(&key.to_string())
    }
}

pub fn short_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    format!("{digest:x}")[..16].to_string()
}
