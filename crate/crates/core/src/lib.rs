//! Intrinsic-dimensionality conformity metrics between two sample sets.
//!
//! The crate estimates local intrinsic dimensionality (LID) with the
//! maximum-likelihood estimator over k-nearest-neighbor distances, and builds
//! on it:
//!
//! - [`crosslid`]: `CrossLID(A; B)`, the mean LID of points of `A` measured in
//!   neighborhoods drawn from `B`, exact or with per-query random reference
//!   batches; mode-wise deviation factors and oversampling plans.
//! - [`baselines`]: Fréchet distance between fitted Gaussians, the
//!   exponentiated KL score, Pearson/Spearman correlation.
//! - [`synth`]: Gaussian mixtures, uniform balls, rigid transforms, mode
//!   dropping and coordinate noise.
//! - [`sweep`]: parameter sweeps that combine the above into reports.
//!
//! Features are opaque `f64` vectors; whatever produced them (a classifier
//! layer, raw pixels, a synthetic generator) is outside the crate.

pub mod baselines;
pub mod crosslid;
pub mod data;
mod error;
pub mod lid;
pub mod neighbors;
pub mod presets;
pub mod rng;
mod serde_util;
pub mod sweep;
pub mod synth;

pub use crate::baselines::{correlation, fit_gaussian, frechet_distance, kl_score, ClassProbabilityMatrix, Correlation, GaussianFit};
pub use crate::crosslid::{
    crosslid_batched, crosslid_exact, modewise_crosslid, oversampling_plan, CrossLidReport, ModeWiseConfig, ModeWiseReport,
    OversamplingPlan,
};
pub use crate::data::{load_csv, load_npy, save_npy, FeatureMatrix, LabeledFeatureSet};
pub use crate::error::{Error, Result};
pub use crate::lid::{lid_mle, self_lid, DatasetLidReport, LidEstimate};
pub use crate::neighbors::{batched_knn, knn_distances, BatchSpec, NeighborDistances};
pub use crate::rng::RngSeed;
