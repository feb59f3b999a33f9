//! Multilevel Monte Carlo (MLMC) and multilevel control variates (MLCV)
//! built on interpolative-decomposition reduced bases.

pub mod driver;
pub mod error;
pub mod linalg;
pub mod mlcv;
pub mod mlmc;
pub mod models;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
