//! Numerical core for modeling national CO₂ emissions from socioeconomic
//! indicators.
//!
//! Everything here is `no_std` + `alloc`: ε-insensitive support vector
//! regression with an SMO dual solver, PCA and principal component
//! regression, the augmented Dickey-Fuller test, k-fold grid search and
//! permutation importance. File formats, plots and the CLI live in the
//! `co2-pipeline` crate.
//!
//! ## Feature flags
//!
//! - `std` — implement `std::error::Error` for [`Error`].
//! - `parallel` — evaluate grid-search folds and permutation shuffles on the
//!   rayon thread pool. Results are identical to the sequential path.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is the idiom for rejecting NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod importance;
pub mod linalg;
pub mod pca;
pub mod reporting;
pub mod selection;
pub mod stationarity;
pub mod svr;

pub use error::{Error, Result};
pub use linalg::Matrix;

use alloc::vec::Vec;
use rand::SeedableRng;

/// Generator behind every seeded operation in the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Anything that maps a feature matrix to one prediction per row.
pub trait Predictor: Sync {
    fn predict(&self, x: &Matrix) -> Result<Vec<f64>>;
}

impl<F> Predictor for F
where
    F: Fn(&Matrix) -> Result<Vec<f64>> + Sync,
{
    fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        self(x)
    }
}
