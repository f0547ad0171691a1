//! Paired and residual bootstrap with deterministic per-unit seeding.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{CoefficientVector, Dataset};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BootstrapKind {
    Paired,
    Residual,
}

/// Resampling scheme. Residual mode refits a BIC-tuned ridge pilot over
/// `pilot_lambda2_grid` on the original data.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapScheme<T> {
    pub kind: BootstrapKind,
    pub pilot_lambda2_grid: Vec<T>,
}

impl<T: Real> BootstrapScheme<T> {
    pub fn paired() -> Self {
        BootstrapScheme { kind: BootstrapKind::Paired, pilot_lambda2_grid: Vec::new() }
    }

    /// Residual bootstrap with the default ridge grid.
    pub fn residual() -> Self {
        let grid = crate::model::DEFAULT_RIDGE_GRID.iter().map(|&v| T::lit(v)).collect();
        BootstrapScheme { kind: BootstrapKind::Residual, pilot_lambda2_grid: grid }
    }

    pub fn residual_with_grid(grid: Vec<T>) -> Self {
        BootstrapScheme { kind: BootstrapKind::Residual, pilot_lambda2_grid: grid }
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer (Steele, Lea & Flood constants). Bijective on u64.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `(master, replicate, draw)` into a generator seed.
///
/// For fixed `master` and `replicate` the map `draw ↦ seed` is a bijection,
/// so distinct draws never collide; likewise for `replicate` at fixed
/// `master` and `draw = 0`.
pub fn derive_seed(master: u64, replicate: u64, draw: u64) -> u64 {
    let a = mix64(master.wrapping_add(GOLDEN));
    let b = mix64(a ^ mix64(replicate.wrapping_add(GOLDEN.wrapping_mul(2))));
    mix64(b ^ mix64(draw.wrapping_add(GOLDEN.wrapping_mul(3))))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` indices drawn uniformly with replacement.
pub fn resample_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Rows `(x_i, y_i)` drawn i.i.d. with replacement.
pub fn paired_bootstrap<T: Real>(data: &Dataset<T>, seed: u64) -> Dataset<T> {
    data.select_rows(&resample_indices(data.n(), seed))
}

/// Centered residuals `ε̂_i − ε̄` of the pilot fit.
pub fn centered_residuals<T: Real>(data: &Dataset<T>, pilot: &CoefficientVector<T>) -> Array1<T> {
    let r = pilot.residuals(data);
    let m = crate::linalg::mean(r.view());
    r.mapv(|v| v - m)
}

/// `y*_i = x_iᵀβ̂ + ε*_i` with `ε*` resampled from the centered residuals;
/// `X` is returned unchanged.
pub fn residual_bootstrap<T: Real>(data: &Dataset<T>, pilot: &CoefficientVector<T>, seed: u64) -> Dataset<T> {
    assert_eq!(pilot.len(), data.p(), "pilot length must match p");
    let fitted = pilot.predict(data.x());
    let pool = centered_residuals(data, pilot);
    let idx = resample_indices(data.n(), seed);
    let y: Array1<T> = idx.iter().enumerate().map(|(i, &k)| fitted[i] + pool[k]).collect();
    data.with_response(y).expect("finite bootstrap response")
}
