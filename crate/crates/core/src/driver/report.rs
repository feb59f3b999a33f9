use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::CostMode;
use crate::error::{Error, Result};
use crate::mlcv::{CostLog, CvLevelConfig};
use crate::mlmc::{BiasCheck, Method, RateFit};

/// One level of an estimator report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: usize,
    /// Mₗ
    pub dofs: usize,
    /// mₗ
    pub output_dim: usize,
    /// Pilot mean of Yₗ.
    pub mean_y: f64,
    /// Pilot variance of Yₗ.
    pub var_y: f64,
    pub rho2: f64,
    pub mserf: f64,
    pub rank: usize,
    pub theta: f64,
    /// Nₗ, or Ñₗ for MLCV.
    pub n_samples: usize,
    /// N′ₗ
    pub n_zbar: usize,
    /// Ŷₗ or Ŵₗ.
    pub estimate: f64,
    pub cost: f64,
    pub cost_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub estimate: f64,
    /// Σ 𝕍ₗ · MSERFₗ / Nₗ.
    pub sampling_error: f64,
    /// ε²/2
    pub sampling_budget: f64,
    pub cost: f64,
    /// ⌈2𝕍[Q_L]/ε²⌉ C(Q_L); absent when 𝕍[Q_L] = 0.
    pub mc_cost: Option<f64>,
    /// Cost of the MLMC run for the same ε and pilot.
    pub mlmc_cost: f64,
    /// `cost / mlmc_cost`.
    pub cost_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub method: Method,
    pub seed: u64,
    pub config_hash: String,
    pub epsilon: f64,
    pub levels: Vec<LevelRow>,
    pub totals: Totals,
    pub rates: Option<RateFit>,
    pub bias: Option<BiasCheck>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cost_log: Option<CostLog>,
    pub warnings: Vec<String>,
    pub config: serde_json::Value,
}

/// Pilot statistics and basis summary of one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotLevelRow {
    pub level: usize,
    pub dofs: usize,
    pub output_dim: usize,
    /// C(Qₗ)
    pub level_cost: f64,
    /// Cost of one sample of Yₗ.
    pub cost: f64,
    pub mean_y: f64,
    pub var_y: f64,
    pub mean_q: f64,
    pub var_q: f64,
    pub rank: usize,
    pub residual_norm: f64,
    pub rho2: f64,
    pub mserf: f64,
    pub cv_enabled: bool,
}

/// Sample plans for one ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub epsilon: f64,
    pub mlmc_samples: Vec<usize>,
    pub mlcv_samples: Vec<usize>,
    pub n_zbar: Vec<usize>,
    pub cost_mc: Option<f64>,
    pub cost_mlmc: f64,
    pub cost_mlcv: f64,
    pub ratio: f64,
    pub bias: Option<BiasCheck>,
    /// Levels where Ñₗ < r.
    pub basis_dominated_levels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotReport {
    pub schema_version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub pilot_hash: String,
    pub pilot_samples: usize,
    pub cost_mode: CostMode,
    pub levels: Vec<PilotLevelRow>,
    pub cv: Vec<CvLevelConfig>,
    pub rates: Option<RateFit>,
    pub plans: Vec<PlanRow>,
    pub warnings: Vec<String>,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub epsilon: f64,
    pub levels: String,
    pub cost_mc: Option<f64>,
    pub cost_mlmc: f64,
    pub cost_mlcv: f64,
    pub ratio: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// CSV with a `# seed=… config_hash=…` comment line ahead of the header.
pub fn write_csv<T: Serialize>(
    path: &Path,
    seed: u64,
    config_hash: &str,
    rows: &[T],
) -> Result<()> {
    let mut buf = format!("# seed={seed} config_hash={config_hash}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in rows {
            w.serialize(row).map_err(csv_error)?;
        }
        w.flush()?;
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, buf)?;
    Ok(())
}

/// Rows of a file written by [`write_csv`].
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path)?;
    let body = text.split_once('\n').map_or("", |(_, rest)| rest);
    csv::Reader::from_reader(body.as_bytes())
        .deserialize()
        .map(|r| r.map_err(csv_error))
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Data(format!("csv: {e}"))
}
