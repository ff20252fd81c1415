//! Maximum-likelihood (Hill) estimation of local intrinsic dimensionality.
//!
//! For a query with ascending neighbor distances `r_1 <= ... <= r_k` and
//! `r_max = r_k`, the estimate is
//!
//! ```text
//! LID = -( (1/k) * sum_i ln(r_i / r_max) )^-1
//!     =  ( ln r_max - (1/k) * sum_i ln r_i )^-1
//! ```
//!
//! A neighborhood whose distances are all equal has no discriminability and
//! yields `+inf`. Such estimates are kept in per-point output but excluded
//! from dataset means and counted separately.

use serde::{Serialize, Serializer};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::neighbors::{knn_all, NeighborDistances};

/// Zero distances are clamped to this fraction of `r_max` before the log.
pub const ZERO_DISTANCE_FRACTION: f64 = 1e-12;

/// A single LID estimate; `value` is `+inf` for an all-equal neighborhood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidEstimate {
    pub value: f64,
    pub k: usize,
}

impl LidEstimate {
    #[inline]
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

// Serialized as a bare number, or null for the infinite sentinel.
impl Serialize for LidEstimate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.value.is_finite() {
            s.serialize_some(&self.value)
        } else {
            s.serialize_none()
        }
    }
}

fn clamped(d: &NeighborDistances) -> Result<(f64, impl Iterator<Item = f64> + '_)> {
    if d.k() < 2 {
        return Err(Error::InvalidK(d.k()));
    }
    let r_max = d.r_max();
    if r_max <= 0.0 {
        return Err(Error::AllDistancesZero);
    }
    let floor = ZERO_DISTANCE_FRACTION * r_max;
    Ok((
        r_max,
        d.as_slice().iter().map(move |&r| if r == 0.0 { floor } else { r }),
    ))
}

/// MLE estimate in ratio form, `-(mean ln(r_i / r_max))^-1`.
pub fn lid_mle(d: &NeighborDistances) -> Result<LidEstimate> {
    let k = d.k();
    let (r_max, rs) = clamped(d)?;
    let mean_log_ratio = rs.map(|r| (r / r_max).ln()).sum::<f64>() / k as f64;
    let value = if mean_log_ratio == 0.0 {
        f64::INFINITY
    } else {
        -1.0 / mean_log_ratio
    };
    Ok(LidEstimate { value, k })
}

/// The same estimate in log-difference form, `(ln r_max - mean ln r_i)^-1`.
///
/// Algebraically identical to [`lid_mle`]; kept as a cross-check. Rounding in
/// the mean can leave a tiny positive gap for an all-equal neighborhood, so
/// that case is detected on the distances directly.
pub fn lid_mle_log_difference(d: &NeighborDistances) -> Result<LidEstimate> {
    let k = d.k();
    let (r_max, rs) = clamped(d)?;
    if d.as_slice()[0] == r_max {
        return Ok(LidEstimate {
            value: f64::INFINITY,
            k,
        });
    }
    let mean_log = rs.map(f64::ln).sum::<f64>() / k as f64;
    Ok(LidEstimate {
        value: 1.0 / (r_max.ln() - mean_log),
        k,
    })
}

/// Mean of the finite estimates and the number of non-finite ones.
///
/// The mean is `+inf` when no estimate is finite.
pub(crate) fn summarize(estimates: &[LidEstimate]) -> (f64, usize) {
    let (sum, finite) = estimates
        .iter()
        .filter(|e| e.is_finite())
        .fold((0.0, 0usize), |(s, n), e| (s + e.value, n + 1));
    let mean = if finite == 0 {
        f64::INFINITY
    } else {
        sum / finite as f64
    };
    (mean, estimates.len() - finite)
}

/// Dataset-level LID: the average of per-point estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetLidReport {
    #[serde(serialize_with = "crate::serde_util::finite_or_null")]
    pub mean: f64,
    pub per_point: Vec<LidEstimate>,
    pub k: usize,
    pub n_queries: usize,
    pub nonfinite_count: usize,
}

/// LID of every row of `x` against the rest of `x` (self excluded).
pub fn self_lid(x: &FeatureMatrix, k: usize) -> Result<DatasetLidReport> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    let neighbors = knn_all(x, x, k, true)?;
    let per_point = neighbors.iter().map(lid_mle).collect::<Result<Vec<_>>>()?;
    let (mean, nonfinite_count) = summarize(&per_point);
    Ok(DatasetLidReport {
        mean,
        n_queries: per_point.len(),
        per_point,
        k,
        nonfinite_count,
    })
}
