//! Synthetic data and perturbation protocols for controlled experiments.
//!
//! Every generator draws from a single sequential ChaCha8 stream seeded by the
//! caller, so outputs are reproducible bit for bit.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, LabeledFeatureSet};
use crate::error::{Error, Result};
use crate::rng::RngSeed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureMode {
    pub mean: Vec<f64>,
    /// Isotropic standard deviation.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub modes: Vec<MixtureMode>,
    pub n: usize,
    /// Per-mode proportions; uniform when absent.
    pub weights: Option<Vec<f64>>,
    pub seed: RngSeed,
}

impl MixtureSpec {
    fn validate(&self) -> Result<usize> {
        let first = self
            .modes
            .first()
            .ok_or_else(|| Error::param("mixture needs at least one mode"))?;
        let d = first.mean.len();
        if d == 0 {
            return Err(Error::param("mode means must be non-empty"));
        }
        if self.n == 0 {
            return Err(Error::param("mixture sample count must be positive"));
        }
        for m in &self.modes {
            if m.mean.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: m.mean.len(),
                });
            }
            if !(m.scale.is_finite() && m.scale > 0.0) {
                return Err(Error::param("mode scale must be positive"));
            }
        }
        if let Some(w) = &self.weights {
            if w.len() != self.modes.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.modes.len(),
                    found: w.len(),
                });
            }
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::param("mixture weights must be non-negative and sum to 1"));
            }
        }
        Ok(d)
    }
}

/// Samples from an isotropic Gaussian mixture; the label is the mode index.
pub fn gaussian_mixture(spec: &MixtureSpec) -> Result<LabeledFeatureSet> {
    let d = spec.validate()?;
    let uniform = vec![1.0; spec.modes.len()];
    let weights = spec.weights.as_deref().unwrap_or(&uniform);
    let picker = WeightedIndex::new(weights).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = spec.seed.rng();
    let mut data = Vec::with_capacity(spec.n * d);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let c = picker.sample(&mut rng);
        let mode = &spec.modes[c];
        for mu in &mode.mean {
            let z: f64 = rng.sample(StandardNormal);
            data.push(mu + mode.scale * z);
        }
        labels.push(c);
    }
    LabeledFeatureSet::with_class_count(
        FeatureMatrix::new(spec.n, d, data)?,
        labels,
        spec.modes.len(),
    )
}

/// `n` points uniform in the `d`-ball of the given radius, centered at the origin.
pub fn uniform_ball(d: usize, n: usize, radius: f64, seed: RngSeed) -> Result<FeatureMatrix> {
    if d == 0 || n == 0 {
        return Err(Error::param("ball dimension and size must be positive"));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::param("ball radius must be positive"));
    }
    let mut rng = seed.rng();
    let mut data = Vec::with_capacity(n * d);
    let mut dir = vec![0.0; d];
    for _ in 0..n {
        let norm = loop {
            dir.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                break norm;
            }
        };
        let u: f64 = rng.random();
        let r = radius * u.powf(1.0 / d as f64);
        data.extend(dir.iter().map(|v| v / norm * r));
    }
    FeatureMatrix::new(n, d, data)
}

/// Zero-pads `x` to `ambient_d` columns, rotates by `angle_degrees` in the
/// plane spanned by the two given axes, then translates.
///
/// An empty `translation` means no translation.
pub fn embed_and_transform(
    x: &FeatureMatrix,
    ambient_d: usize,
    translation: &[f64],
    angle_degrees: f64,
    plane: (usize, usize),
) -> Result<FeatureMatrix> {
    if ambient_d < x.cols() {
        return Err(Error::param(format!(
            "ambient dimension {ambient_d} is below data dimension {}",
            x.cols()
        )));
    }
    let (i, j) = plane;
    if i == j || i >= ambient_d || j >= ambient_d {
        return Err(Error::param(format!("invalid rotation plane ({i}, {j})")));
    }
    if !translation.is_empty() && translation.len() != ambient_d {
        return Err(Error::DimensionMismatch {
            expected: ambient_d,
            found: translation.len(),
        });
    }
    let theta = angle_degrees.to_radians();
    let (sin, cos) = if angle_degrees == 0.0 { (0.0, 1.0) } else { theta.sin_cos() };
    let mut data = Vec::with_capacity(x.rows() * ambient_d);
    for row in x.iter_rows() {
        let start = data.len();
        data.extend_from_slice(row);
        data.resize(start + ambient_d, 0.0);
        let out = &mut data[start..];
        if angle_degrees != 0.0 {
            let (a, b) = (out[i], out[j]);
            out[i] = cos * a - sin * b;
            out[j] = sin * a + cos * b;
        }
        for (v, t) in out.iter_mut().zip(translation) {
            *v += t;
        }
    }
    FeatureMatrix::new(x.rows(), ambient_d, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeDropSpec {
    /// Unique samples kept per chosen class (`n`).
    pub n_unique_per_class: usize,
    /// Number of classes kept (`c`).
    pub c_classes: usize,
    /// Output size after resampling with replacement (`N`).
    pub total: usize,
    pub seed: RngSeed,
}

/// Keeps `n` random samples from each of `c` random classes, then resamples
/// that pool with replacement up to `total` rows.
pub fn mode_drop(real: &LabeledFeatureSet, spec: &ModeDropSpec) -> Result<LabeledFeatureSet> {
    let n_classes = real.n_classes();
    if spec.c_classes == 0 || spec.c_classes > n_classes {
        return Err(Error::param(format!(
            "class count {} outside [1, {n_classes}]",
            spec.c_classes
        )));
    }
    if spec.n_unique_per_class == 0 || spec.total == 0 {
        return Err(Error::param("mode drop sizes must be positive"));
    }
    let mut rng = spec.seed.rng();
    let mut classes = index::sample(&mut rng, n_classes, spec.c_classes).into_vec();
    classes.sort_unstable();

    let mut pool = Vec::with_capacity(spec.c_classes * spec.n_unique_per_class);
    for &class in &classes {
        let rows = real.class_indices(class);
        if rows.len() < spec.n_unique_per_class {
            return Err(Error::ClassTooSmall {
                class,
                have: rows.len(),
                need: spec.n_unique_per_class,
            });
        }
        pool.extend(
            index::sample(&mut rng, rows.len(), spec.n_unique_per_class)
                .into_iter()
                .map(|i| rows[i]),
        );
    }
    let picked: Vec<usize> = (0..spec.total)
        .map(|_| pool[rng.random_range(0..pool.len())])
        .collect();
    Ok(real.select_rows(&picked))
}

/// Coordinates touched per row: `ceil(fraction * d)`, ignoring float dust.
pub fn coordinates_per_row(fraction: f64, d: usize) -> usize {
    let raw = fraction * d as f64;
    let rounded = raw.round();
    let count = if (raw - rounded).abs() < 1e-9 { rounded } else { raw.ceil() };
    (count as usize).min(d)
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::param(format!("noise fraction {fraction} outside [0, 1]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianNoise {
    pub fraction: f64,
    pub location: f64,
    pub scale: f64,
    pub clamp: Option<(f64, f64)>,
}

/// Adds `N(location, scale^2)` to `ceil(fraction * D)` random coordinates of
/// every row, optionally clamping the result.
pub fn add_gaussian_noise(x: &FeatureMatrix, noise: &GaussianNoise, seed: RngSeed) -> Result<FeatureMatrix> {
    check_fraction(noise.fraction)?;
    if !(noise.scale.is_finite() && noise.scale >= 0.0) || !noise.location.is_finite() {
        return Err(Error::param("noise location/scale must be finite, scale >= 0"));
    }
    let d = x.cols();
    let per_row = coordinates_per_row(noise.fraction, d);
    let mut rng = seed.rng();
    let mut data = x.as_slice().to_vec();
    for row in data.chunks_exact_mut(d) {
        for j in index::sample(&mut rng, d, per_row) {
            let z: f64 = rng.sample(StandardNormal);
            let mut v = row[j] + noise.location + noise.scale * z;
            if let Some((lo, hi)) = noise.clamp {
                v = v.clamp(lo, hi);
            }
            row[j] = v;
        }
    }
    FeatureMatrix::new(x.rows(), d, data)
}

/// Sets `ceil(fraction * D)` random coordinates per row to `lo` or `hi` with
/// equal probability.
pub fn add_salt_pepper(x: &FeatureMatrix, fraction: f64, lo: f64, hi: f64, seed: RngSeed) -> Result<FeatureMatrix> {
    check_fraction(fraction)?;
    let d = x.cols();
    let per_row = coordinates_per_row(fraction, d);
    let mut rng = seed.rng();
    let mut data = x.as_slice().to_vec();
    for row in data.chunks_exact_mut(d) {
        for j in index::sample(&mut rng, d, per_row) {
            row[j] = if rng.random::<bool>() { hi } else { lo };
        }
    }
    FeatureMatrix::new(x.rows(), d, data)
}
