//! CrossLID between sample sets, mode-wise deviation factors and the
//! oversampling plan derived from them.
//!
//! `CrossLID(A; B)` is the mean LID of the points of `A` estimated from their
//! neighborhoods in `B`. It is asymmetric: low `CrossLID(real; generated)`
//! means the generated set is aligned with, and covers, the real one.

use rand::Rng;
use serde::Serialize;

use crate::data::{FeatureMatrix, LabeledFeatureSet};
use crate::error::{Error, Result};
use crate::lid::{lid_mle, summarize, LidEstimate};
use crate::neighbors::{batched_knn, knn_all, BatchSpec, NeighborDistances, DEFAULT_K};
use crate::rng::RngSeed;

/// Default cap on the number of query (real) samples.
pub const DEFAULT_MAX_QUERIES: usize = 20_000;
/// Default cap on the number of reference (generated) samples.
pub const DEFAULT_MAX_REFS: usize = 20_000;
/// Fraction of non-finite per-query estimates above which a report is flagged.
pub const NONFINITE_WARNING_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossLidReport {
    #[serde(serialize_with = "crate::serde_util::finite_or_null")]
    pub score: f64,
    pub per_query: Vec<LidEstimate>,
    pub n_queries: usize,
    pub n_refs: usize,
    pub k: usize,
    pub batch_size: Option<usize>,
    pub seed: Option<RngSeed>,
    pub nonfinite_count: usize,
    pub warning: bool,
}

impl CrossLidReport {
    fn from_neighbors(
        neighbors: &[NeighborDistances],
        n_refs: usize,
        k: usize,
        batch: Option<(usize, RngSeed)>,
    ) -> Result<Self> {
        let per_query = neighbors.iter().map(lid_mle).collect::<Result<Vec<_>>>()?;
        let (score, nonfinite_count) = summarize(&per_query);
        let n_queries = per_query.len();
        Ok(CrossLidReport {
            score,
            n_queries,
            n_refs,
            k,
            batch_size: batch.map(|b| b.0),
            seed: batch.map(|b| b.1),
            nonfinite_count,
            warning: nonfinite_count as f64 > NONFINITE_WARNING_FRACTION * n_queries as f64,
            per_query,
        })
    }
}

/// CrossLID of `a` against all of `b`.
///
/// `exclude_identical` is for `a` and `b` being the same set: each query then
/// skips its own row, which makes `crosslid_exact(x, x, k, true)` equal to
/// the self-LID of `x`.
pub fn crosslid_exact(
    a: &FeatureMatrix,
    b: &FeatureMatrix,
    k: usize,
    exclude_identical: bool,
) -> Result<CrossLidReport> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    let neighbors = knn_all(a, b, k, exclude_identical)?;
    CrossLidReport::from_neighbors(&neighbors, b.rows(), k, None)
}

/// CrossLID where each query of `a` searches only a random batch of `b`.
pub fn crosslid_batched(a: &FeatureMatrix, b: &FeatureMatrix, spec: &BatchSpec) -> Result<CrossLidReport> {
    if spec.k < 2 {
        return Err(Error::InvalidK(spec.k));
    }
    let neighbors = batched_knn(a, b, spec)?;
    CrossLidReport::from_neighbors(&neighbors, b.rows(), spec.k, Some((spec.batch_size, spec.seed)))
}

/// Relative deviation of a class's cross score from its self score.
pub fn deviation_factor(self_score: f64, cross_score: f64) -> f64 {
    (self_score - cross_score).abs() / self_score
}

/// Normalizes deviation factors to sum to one.
///
/// Returns all zeros and `true` when every factor is zero.
pub fn normalize_gammas(gammas: &[f64]) -> (Vec<f64>, bool) {
    let total: f64 = gammas.iter().sum();
    if total == 0.0 {
        return (vec![0.0; gammas.len()], true);
    }
    (gammas.iter().map(|g| g / total).collect(), false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeWiseConfig {
    pub k: usize,
    /// Per-class cap on real samples.
    pub max_per_class: usize,
    /// Cap on generated samples, shared by all classes.
    pub max_generated: usize,
    pub seed: RngSeed,
}

impl Default for ModeWiseConfig {
    fn default() -> Self {
        ModeWiseConfig {
            k: DEFAULT_K,
            max_per_class: DEFAULT_MAX_QUERIES,
            max_generated: DEFAULT_MAX_REFS,
            seed: RngSeed::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassDeviation {
    pub class: usize,
    pub n_samples: usize,
    pub self_score: f64,
    pub cross_score: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeWiseReport {
    pub per_class: Vec<ClassDeviation>,
    pub normalized_gamma: Vec<f64>,
    pub all_zero: bool,
    pub k: usize,
    pub n_generated: usize,
}

/// Self and cross CrossLID per class of `real`, and the resulting deviation
/// factors.
///
/// `generated` is subsampled once (shared by every class); each class is
/// subsampled independently. Both use exact neighbor search.
pub fn modewise_crosslid(
    real: &LabeledFeatureSet,
    generated: &FeatureMatrix,
    config: &ModeWiseConfig,
) -> Result<ModeWiseReport> {
    let k = config.k;
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    if real.features().cols() != generated.cols() {
        return Err(Error::DimensionMismatch {
            expected: real.features().cols(),
            found: generated.cols(),
        });
    }
    let n_generated = generated.rows().min(config.max_generated);
    if n_generated < k {
        return Err(Error::KTooLarge {
            k,
            available: n_generated,
        });
    }
    let generated = generated.subsample(n_generated, config.seed.derive(0))?;

    let mut per_class = Vec::with_capacity(real.n_classes());
    for class in 0..real.n_classes() {
        let rows = real.class_indices(class);
        let take = rows.len().min(config.max_per_class);
        if take < k + 1 {
            return Err(Error::ClassTooSmall {
                class,
                have: take,
                need: k + 1,
            });
        }
        let class_seed = config.seed.derive(1 + class as u64);
        let picked = crate::data::subsample_indices(rows.len(), take, class_seed)?;
        let members: Vec<usize> = picked.into_iter().map(|i| rows[i]).collect();
        let xc = real.features().select_rows(&members);

        let self_score = crosslid_exact(&xc, &xc, k, true)?.score;
        let cross_score = crosslid_exact(&xc, &generated, k, false)?.score;
        per_class.push(ClassDeviation {
            class,
            n_samples: take,
            self_score,
            cross_score,
            gamma: deviation_factor(self_score, cross_score),
        });
    }
    let gammas: Vec<f64> = per_class.iter().map(|c| c.gamma).collect();
    let (normalized_gamma, all_zero) = normalize_gammas(&gammas);
    Ok(ModeWiseReport {
        per_class,
        normalized_gamma,
        all_zero,
        k,
        n_generated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassCount {
    pub class: usize,
    pub count: usize,
}

/// Extra real samples to add per class before the next training interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OversamplingPlan {
    pub per_class_counts: Vec<ClassCount>,
    pub m: usize,
    /// Every original row index followed by the sampled extras.
    pub augmented_indices: Vec<usize>,
}

impl OversamplingPlan {
    pub fn extra_rows(&self) -> usize {
        self.per_class_counts.iter().map(|c| c.count).sum()
    }

    /// Builds the augmented dataset from the plan's indices.
    pub fn materialize(&self, real: &LabeledFeatureSet) -> LabeledFeatureSet {
        real.select_rows(&self.augmented_indices)
    }
}

/// Rounded per-class counts `round_half_even(m * gamma_norm)`.
pub fn class_counts(normalized_gamma: &[f64], m: usize) -> Vec<usize> {
    normalized_gamma
        .iter()
        .map(|g| (m as f64 * g).round_ties_even() as usize)
        .collect()
}

/// Samples the per-class extras uniformly with replacement from `real`.
pub fn oversampling_plan(
    report: &ModeWiseReport,
    real: &LabeledFeatureSet,
    m: usize,
    seed: RngSeed,
) -> Result<OversamplingPlan> {
    if report.normalized_gamma.len() != real.n_classes() {
        return Err(Error::DimensionMismatch {
            expected: real.n_classes(),
            found: report.normalized_gamma.len(),
        });
    }
    let counts = class_counts(&report.normalized_gamma, m);
    let mut rng = seed.rng();
    let mut augmented_indices: Vec<usize> = (0..real.len()).collect();
    let mut per_class_counts = Vec::with_capacity(counts.len());
    for (class, &count) in counts.iter().enumerate() {
        let rows = real.class_indices(class);
        if count > 0 && rows.is_empty() {
            return Err(Error::ClassTooSmall {
                class,
                have: 0,
                need: 1,
            });
        }
        augmented_indices.extend((0..count).map(|_| rows[rng.random_range(0..rows.len())]));
        per_class_counts.push(ClassCount { class, count });
    }
    Ok(OversamplingPlan {
        per_class_counts,
        m,
        augmented_indices,
    })
}
