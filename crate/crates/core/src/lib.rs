//! Bootstrap maximum-frequency model selection for adaptive LASSO and
//! adaptive Elastic-Net paths.
//!
//! The solution path of a penalized least-squares fit is computed exactly by
//! a LARS-type homotopy ([`path`]). Refitting that path on `B` bootstrap
//! samples and tallying the most frequent model of every size gives the
//! maximum-frequency table ([`select::mf_table`]); weighting each dimension by
//! a softmax of its multi-fold CV error and taking the argmax gives the
//! weighted maximum-frequency choice ([`select::wmf_select`]).
//!
//! Everything is generic over the scalar type through [`Real`]; the `*64`
//! and `*32` aliases below fix it.
//!
//! ```
//! use wmfsel_core::{sim, select, Dataset64};
//!
//! let data: Dataset64 = sim::example1(7).unwrap();
//! let settings = select::MfSettings::adaptive_lasso().with_replicates(20);
//! let cfg = select::CvConfig::default();
//! let result = select::wmf_select(&data, &settings, &cfg, 7).unwrap();
//! assert!(!result.model.is_empty());
//! ```

// `!(x > 0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod error;
pub mod glm;
pub mod linalg;
pub mod model;
pub mod path;
pub mod resample;
mod scalar;
pub mod screen;
pub mod select;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Real;

pub use glm::GlmDataset;
pub use model::{CoefficientVector, Dataset, PenaltyScheme, PenaltySpec};
pub use path::{SolutionPath, TransitionPoint};
pub use select::{CvConfig, Method, MfSettings, SelectionResult};

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type GlmDataset64 = GlmDataset<f64>;
pub type GlmDataset32 = GlmDataset<f32>;
pub type SolutionPath64 = SolutionPath<f64>;
pub type SolutionPath32 = SolutionPath<f32>;
pub type CoefficientVector64 = CoefficientVector<f64>;
pub type CoefficientVector32 = CoefficientVector<f32>;
pub type SelectionResult64 = SelectionResult<f64>;
pub type SelectionResult32 = SelectionResult<f32>;
