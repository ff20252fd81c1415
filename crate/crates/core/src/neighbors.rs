//! Exact and batched k-nearest-neighbor Euclidean distances.
//!
//! Distances are `sqrt` of a squared-difference sum accumulated in `f64` with a
//! fixed lane order, so every pair gets the same bits no matter how queries are
//! split across threads. Ties are broken by the lower reference index.

use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Default neighborhood size.
pub const DEFAULT_K: usize = 100;
/// Default per-query reference batch size.
pub const DEFAULT_BATCH_SIZE: usize = 1000;

const LANES: usize = 8;
const QUERY_BLOCK: usize = 16;
const REF_TILE: usize = 256;

/// Ascending distances from one query to its k nearest references.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct NeighborDistances {
    distances: Vec<f64>,
}

impl NeighborDistances {
    pub fn new(distances: Vec<f64>) -> Result<Self> {
        if distances.is_empty() {
            return Err(Error::InvalidK(0));
        }
        if distances.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::param("distances must be finite and non-negative"));
        }
        if distances.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::param("distances must be sorted ascending"));
        }
        Ok(NeighborDistances { distances })
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.distances.len()
    }

    /// Largest distance in the neighborhood (`r_k`).
    #[inline]
    pub fn r_max(&self) -> f64 {
        self.distances[self.distances.len() - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.distances
    }

    /// First `k` entries (the k-NN result of a larger neighborhood).
    pub fn truncated(&self, k: usize) -> Result<NeighborDistances> {
        if k == 0 || k > self.k() {
            return Err(Error::InvalidK(k));
        }
        Ok(NeighborDistances {
            distances: self.distances[..k].to_vec(),
        })
    }
}

/// Parameters of the batched neighbor protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BatchSpec {
    pub k: usize,
    pub batch_size: usize,
    pub seed: RngSeed,
}

impl Default for BatchSpec {
    fn default() -> Self {
        BatchSpec {
            k: DEFAULT_K,
            batch_size: DEFAULT_BATCH_SIZE,
            seed: RngSeed::default(),
        }
    }
}

impl BatchSpec {
    pub fn new(k: usize, batch_size: usize, seed: RngSeed) -> Self {
        BatchSpec {
            k,
            batch_size,
            seed,
        }
    }

    /// Checks `1 <= k <= batch_size <= n_refs`.
    pub fn validate(&self, n_refs: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidK(0));
        }
        if self.batch_size > n_refs {
            return Err(Error::BatchTooLarge {
                batch_size: self.batch_size,
                available: n_refs,
            });
        }
        if self.k > self.batch_size {
            return Err(Error::KTooLarge {
                k: self.k,
                available: self.batch_size,
            });
        }
        Ok(())
    }
}

/// How pairwise squared distances are evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DistanceKernel {
    /// Accumulated squared differences.
    #[default]
    Direct,
    /// `|a|^2 + |b|^2 - 2 a.b`, clamped at zero. Faster on wide features but
    /// loses relative precision for near-duplicate points.
    Expanded,
}

#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ta, tb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    for (l, (x, y)) in ta.iter().zip(tb).enumerate() {
        let d = x - y;
        acc[l] += d * d;
    }
    reduce_lanes(&acc)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ta, tb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    for (l, (x, y)) in ta.iter().zip(tb).enumerate() {
        acc[l] += x * y;
    }
    reduce_lanes(&acc)
}

#[inline]
fn reduce_lanes(acc: &[f64; LANES]) -> f64 {
    ((acc[0] + acc[4]) + (acc[2] + acc[6])) + ((acc[1] + acc[5]) + (acc[3] + acc[7]))
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

fn check_dims(queries: &FeatureMatrix, refs: &FeatureMatrix) -> Result<()> {
    if queries.cols() != refs.cols() {
        return Err(Error::DimensionMismatch {
            expected: queries.cols(),
            found: refs.cols(),
        });
    }
    Ok(())
}

fn usable_refs(queries: &FeatureMatrix, refs: &FeatureMatrix, exclude_self: bool) -> Result<usize> {
    if exclude_self && queries.rows() != refs.rows() {
        return Err(Error::param(
            "self exclusion requires queries and references to be the same set",
        ));
    }
    Ok(refs.rows() - usize::from(exclude_self))
}

fn check_k(k: usize, available: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidK(0));
    }
    if k > available {
        return Err(Error::KTooLarge { k, available });
    }
    Ok(())
}

/// Sorts the k smallest `(squared distance, ref index)` candidates into place
/// and returns their Euclidean distances.
fn select_k(candidates: &mut [(f64, usize)], k: usize) -> NeighborDistances {
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k - 1, cmp);
    }
    let head = &mut candidates[..k];
    head.sort_unstable_by(cmp);
    NeighborDistances {
        distances: head.iter().map(|c| c.0.sqrt()).collect(),
    }
}

/// k-NN distances of a single query row against `refs`.
///
/// With `exclude_self`, `queries` and `refs` are the same set and the
/// reference row with index `query_index` is skipped.
pub fn knn_distances(
    query_index: usize,
    queries: &FeatureMatrix,
    refs: &FeatureMatrix,
    k: usize,
    exclude_self: bool,
) -> Result<NeighborDistances> {
    check_dims(queries, refs)?;
    check_k(k, usable_refs(queries, refs, exclude_self)?)?;
    if query_index >= queries.rows() {
        return Err(Error::param(format!("query index {query_index} out of range")));
    }
    let q = queries.row(query_index);
    let mut candidates: Vec<(f64, usize)> = refs
        .iter_rows()
        .enumerate()
        .filter(|(j, _)| !(exclude_self && *j == query_index))
        .map(|(j, r)| (squared_euclidean(q, r), j))
        .collect();
    Ok(select_k(&mut candidates, k))
}

/// k-NN distances for every query row, computed in parallel query blocks.
pub fn knn_all(
    queries: &FeatureMatrix,
    refs: &FeatureMatrix,
    k: usize,
    exclude_self: bool,
) -> Result<Vec<NeighborDistances>> {
    knn_all_with(queries, refs, k, exclude_self, DistanceKernel::Direct)
}

pub fn knn_all_with(
    queries: &FeatureMatrix,
    refs: &FeatureMatrix,
    k: usize,
    exclude_self: bool,
    kernel: DistanceKernel,
) -> Result<Vec<NeighborDistances>> {
    check_dims(queries, refs)?;
    check_k(k, usable_refs(queries, refs, exclude_self)?)?;

    let norms = match kernel {
        DistanceKernel::Direct => None,
        DistanceKernel::Expanded => Some((
            queries.iter_rows().map(|r| dot(r, r)).collect::<Vec<_>>(),
            refs.iter_rows().map(|r| dot(r, r)).collect::<Vec<_>>(),
        )),
    };
    let n_refs = refs.rows();

    let blocks: Vec<Vec<NeighborDistances>> = (0..queries.rows())
        .step_by(QUERY_BLOCK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| {
            let end = (start + QUERY_BLOCK).min(queries.rows());
            let mut rows: Vec<Vec<(f64, usize)>> =
                (start..end).map(|_| Vec::with_capacity(n_refs)).collect();
            for tile in (0..n_refs).step_by(REF_TILE) {
                let tile_end = (tile + REF_TILE).min(n_refs);
                for (qi, buf) in (start..end).zip(rows.iter_mut()) {
                    let q = queries.row(qi);
                    for j in tile..tile_end {
                        if exclude_self && j == qi {
                            continue;
                        }
                        let d2 = match &norms {
                            None => squared_euclidean(q, refs.row(j)),
                            Some((qn, rn)) => (qn[qi] + rn[j] - 2.0 * dot(q, refs.row(j))).max(0.0),
                        };
                        buf.push((d2, j));
                    }
                }
            }
            rows.iter_mut().map(|buf| select_k(buf, k)).collect()
        })
        .collect();
    Ok(blocks.into_iter().flatten().collect())
}

/// Reference indices sampled for one query: `batch_size` distinct rows of
/// `0..n_refs`, drawn from a ChaCha8 stream seeded with `seed ^ query_index`.
pub fn batch_indices(seed: RngSeed, query_index: usize, n_refs: usize, batch_size: usize) -> Vec<usize> {
    index::sample(&mut seed.for_query(query_index).rng(), n_refs, batch_size).into_vec()
}

/// k-NN distances of each query within its own random reference batch.
pub fn batched_knn(
    queries: &FeatureMatrix,
    refs: &FeatureMatrix,
    spec: &BatchSpec,
) -> Result<Vec<NeighborDistances>> {
    check_dims(queries, refs)?;
    spec.validate(refs.rows())?;
    Ok((0..queries.rows())
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(spec.batch_size),
            |buf, qi| {
                let q = queries.row(qi);
                buf.clear();
                buf.extend(
                    batch_indices(spec.seed, qi, refs.rows(), spec.batch_size)
                        .into_iter()
                        .map(|j| (squared_euclidean(q, refs.row(j)), j)),
                );
                select_k(buf, spec.k)
            },
        )
        .collect())
}
