//! Sample statistics with deterministic chunked reduction.
//!
//! Sums are accumulated per fixed-size chunk with Neumaier compensation and
//! chunks are merged left to right, so serial and parallel reductions agree
//! bitwise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chunk length used by every reduction.
pub const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// Co-moments of a paired sample: count, means and centered cross sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoMoments {
    pub n: usize,
    pub mean_y: f64,
    pub mean_z: f64,
    /// Σ (yᵢ − ȳ)(zᵢ − z̄)
    pub cross: f64,
}

impl CoMoments {
    fn chunk(y: &[f64], z: &[f64]) -> Self {
        let n = y.len();
        let (mut sy, mut sz) = (Neumaier::default(), Neumaier::default());
        for (a, b) in y.iter().zip(z) {
            sy.add(*a);
            sz.add(*b);
        }
        let my = sy.value() / n as f64;
        let mz = sz.value() / n as f64;
        let mut c = Neumaier::default();
        for (a, b) in y.iter().zip(z) {
            c.add((a - my) * (b - mz));
        }
        CoMoments {
            n,
            mean_y: my,
            mean_z: mz,
            cross: c.value(),
        }
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let (na, nb, nn) = (self.n as f64, other.n as f64, n as f64);
        let dy = other.mean_y - self.mean_y;
        let dz = other.mean_z - self.mean_z;
        CoMoments {
            n,
            mean_y: self.mean_y + dy * (nb / nn),
            mean_z: self.mean_z + dz * (nb / nn),
            cross: self.cross + other.cross + dy * dz * (na * nb / nn),
        }
    }

    const EMPTY: CoMoments = CoMoments {
        n: 0,
        mean_y: 0.0,
        mean_z: 0.0,
        cross: 0.0,
    };

    pub fn compute(y: &[f64], z: &[f64]) -> Self {
        y.chunks(CHUNK)
            .zip(z.chunks(CHUNK))
            .map(|(a, b)| Self::chunk(a, b))
            .fold(Self::EMPTY, Self::merge)
    }

    /// Same result as [`CoMoments::compute`], bit for bit.
    pub fn compute_parallel(y: &[f64], z: &[f64]) -> Self {
        let parts: Vec<CoMoments> = y
            .par_chunks(CHUNK)
            .zip(z.par_chunks(CHUNK))
            .map(|(a, b)| Self::chunk(a, b))
            .collect();
        parts.into_iter().fold(Self::EMPTY, Self::merge)
    }

    /// Unbiased covariance; `None` for fewer than two samples.
    pub fn covariance(&self) -> Option<f64> {
        (self.n >= 2).then(|| self.cross / (self.n - 1) as f64)
    }
}

/// Arithmetic mean.
pub fn mc_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("mean of an empty sample".into()));
    }
    Ok(CoMoments::compute(values, values).mean_y)
}

/// Unbiased sample variance (denominator N − 1).
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    sample_covariance(values, values).map(|v| v.max(0.0))
}

/// Unbiased sample covariance of index-aligned samples.
pub fn sample_covariance(y: &[f64], z: &[f64]) -> Result<f64> {
    if y.len() != z.len() {
        return Err(Error::Dimension(format!(
            "covariance of samples with lengths {} and {}",
            y.len(),
            z.len()
        )));
    }
    CoMoments::compute(y, z)
        .covariance()
        .ok_or_else(|| Error::InsufficientData("covariance needs at least 2 samples".into()))
}

/// Squared correlation between two samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    /// ρ² in [0, 1]; 0 when degenerate.
    pub rho2: f64,
    pub covariance: f64,
    pub var_y: f64,
    pub var_z: f64,
    /// Set when either variance is not positive; the control variate is
    /// not usable on this level.
    pub degenerate: bool,
}

impl Correlation {
    /// ρ² before clamping to [0, 1].
    pub fn raw(&self) -> f64 {
        if self.degenerate {
            0.0
        } else {
            self.covariance * self.covariance / (self.var_y * self.var_z)
        }
    }
}

pub fn rho_squared(y: &[f64], z: &[f64]) -> Result<Correlation> {
    if y.len() != z.len() {
        return Err(Error::Dimension(format!(
            "correlation of samples with lengths {} and {}",
            y.len(),
            z.len()
        )));
    }
    let yy = CoMoments::compute(y, y).covariance();
    let zz = CoMoments::compute(z, z).covariance();
    let yz = CoMoments::compute(y, z).covariance();
    Ok(match (yy, zz, yz) {
        (Some(var_y), Some(var_z), Some(cov)) if var_y > 0.0 && var_z > 0.0 => Correlation {
            rho2: (cov * cov / (var_y * var_z)).clamp(0.0, 1.0),
            covariance: cov,
            var_y,
            var_z,
            degenerate: false,
        },
        (vy, vz, c) => Correlation {
            rho2: 0.0,
            covariance: c.unwrap_or(0.0),
            var_y: vy.unwrap_or(0.0).max(0.0),
            var_z: vz.unwrap_or(0.0).max(0.0),
            degenerate: true,
        },
    })
}

/// Ratio MSE(Ŵ)/MSE(Ŷ) = 1 − ρ²/(1 + Ñ/N′), with `ratio = Ñ/N′`.
///
/// An infinite ratio (no samples for the mean estimate) gives 1.
pub fn mse_reduction_factor(rho2: f64, ratio: f64) -> f64 {
    if ratio.is_infinite() {
        return 1.0;
    }
    1.0 - rho2 / (1.0 + ratio)
}
