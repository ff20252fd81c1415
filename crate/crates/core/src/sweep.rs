//! Experiment sweeps that perturb a generated set along one parameter and
//! score it against a real set with CrossLID and the baselines.
//!
//! Every record is reproducible from `(inputs, grid, seed)`. Sub-seeds for
//! perturbation, batch sampling and subsampling are derived from the record
//! seed with the `STREAM_*` constants below. Timings are wall-clock and are
//! the only non-deterministic field.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{fit_gaussian, frechet_distance, kl_score, ClassProbabilityMatrix};
use crate::crosslid::{crosslid_batched, crosslid_exact};
use crate::data::{FeatureMatrix, LabeledFeatureSet};
use crate::error::{Error, Result};
use crate::neighbors::{BatchSpec, DEFAULT_BATCH_SIZE, DEFAULT_K};
use crate::rng::RngSeed;
use crate::synth::{add_gaussian_noise, add_salt_pepper, mode_drop, GaussianNoise, ModeDropSpec};

pub const STREAM_PERTURB: u64 = 1;
pub const STREAM_BATCH: u64 = 2;
pub const STREAM_SUBSAMPLE_REAL: u64 = 3;
pub const STREAM_SUBSAMPLE_GENERATED: u64 = 4;

/// Default intra-class grid (unique samples per class).
pub const INTRA_GRID: [usize; 5] = [30, 40, 50, 70, 100];
/// Default inter-class grid (number of classes kept).
pub const INTER_GRID: [usize; 5] = [2, 4, 6, 8, 10];
/// Unique samples per class in the inter-class sweep.
pub const INTER_UNIQUE_PER_CLASS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Crosslid,
    Frechet,
    KlScore,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Crosslid, Metric::Frechet, Metric::KlScore];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Crosslid => "crosslid",
            Metric::Frechet => "frechet",
            Metric::KlScore => "kl_score",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crosslid" => Ok(Metric::Crosslid),
            "frechet" | "fid" => Ok(Metric::Frechet),
            "kl_score" | "kl-score" | "is" => Ok(Metric::KlScore),
            other => Err(Error::param(format!("unknown metric '{other}'"))),
        }
    }
}

/// Soft nearest-centroid classifier standing in for a pretrained network
/// when a sweep needs class probabilities.
///
/// `p(c|x)` is a softmax of `-|x - mu_c|^2 / (2 s^2)` where `s^2` is the
/// pooled per-coordinate within-class variance.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidClassifier {
    centroids: FeatureMatrix,
    inv_two_var: f64,
}

impl CentroidClassifier {
    pub fn fit(real: &LabeledFeatureSet) -> Result<Self> {
        let (d, c) = (real.features().cols(), real.n_classes());
        let mut sums = vec![0.0; c * d];
        let mut counts = vec![0usize; c];
        for (row, &l) in real.features().iter_rows().zip(real.labels()) {
            counts[l] += 1;
            for (s, v) in sums[l * d..(l + 1) * d].iter_mut().zip(row) {
                *s += v;
            }
        }
        if let Some(class) = counts.iter().position(|&n| n == 0) {
            return Err(Error::ClassTooSmall { class, have: 0, need: 1 });
        }
        for (chunk, &n) in sums.chunks_exact_mut(d).zip(&counts) {
            chunk.iter_mut().for_each(|s| *s /= n as f64);
        }
        let centroids = FeatureMatrix::new(c, d, sums)?;
        let spread: f64 = real
            .features()
            .iter_rows()
            .zip(real.labels())
            .map(|(row, &l)| crate::neighbors::squared_euclidean(row, centroids.row(l)))
            .sum::<f64>()
            / (real.len() * d) as f64;
        let var = if spread > 0.0 { spread } else { 1.0 };
        Ok(CentroidClassifier {
            centroids,
            inv_two_var: 0.5 / var,
        })
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<ClassProbabilityMatrix> {
        if x.cols() != self.centroids.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.centroids.cols(),
                found: x.cols(),
            });
        }
        let c = self.centroids.rows();
        let mut out = Vec::with_capacity(x.rows() * c);
        for row in x.iter_rows() {
            let logits: Vec<f64> = self
                .centroids
                .iter_rows()
                .map(|mu| -crate::neighbors::squared_euclidean(row, mu) * self.inv_two_var)
                .collect();
            let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
            let z: f64 = exps.iter().sum();
            out.extend(exps.iter().map(|e| e / z));
        }
        ClassProbabilityMatrix::new(FeatureMatrix::new(x.rows(), c, out)?)
    }
}

/// CrossLID settings shared by all sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub k: usize,
    /// Batched protocol when set (clamped to the reference count); exact otherwise.
    pub batch_size: Option<usize>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            k: DEFAULT_K,
            batch_size: Some(DEFAULT_BATCH_SIZE),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub config: MetricConfig,
    /// Required for [`Metric::KlScore`] unless the sweep can fit one from labels.
    pub classifier: Option<CentroidClassifier>,
    /// Skip the warm-up pass and report zero timings (byte-stable output).
    pub disable_timing: bool,
}

/// Scores `generated` against `real` with one metric.
pub fn score_metric(
    metric: Metric,
    real: &FeatureMatrix,
    generated: &FeatureMatrix,
    config: &MetricConfig,
    classifier: Option<&CentroidClassifier>,
    seed: RngSeed,
) -> Result<f64> {
    match metric {
        Metric::Crosslid => match config.batch_size {
            Some(b) => {
                let spec = BatchSpec::new(config.k, b.min(generated.rows()), seed.derive(STREAM_BATCH));
                Ok(crosslid_batched(real, generated, &spec)?.score)
            }
            None => Ok(crosslid_exact(real, generated, config.k, false)?.score),
        },
        Metric::Frechet => frechet_distance(&fit_gaussian(real)?, &fit_gaussian(generated)?),
        Metric::KlScore => {
            let classifier = classifier.ok_or(Error::MetricUnavailable {
                metric: "kl_score",
                reason: "class probabilities need labeled real data",
            })?;
            Ok(kl_score(&classifier.predict_proba(generated)?))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    #[serde(with = "nullable_map")]
    pub metrics: BTreeMap<String, f64>,
    pub elapsed_ms: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metric_elapsed_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub sweep_name: String,
    pub records: Vec<SweepRecord>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty", with = "nullable_map")]
    pub summary: BTreeMap<String, f64>,
}

impl SweepReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::param(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::param(e.to_string()))
    }

    /// One row per record: `seed`, params, metrics, `elapsed_ms`.
    pub fn to_csv(&self) -> Result<String> {
        let mut param_keys: Vec<&String> = self.records.iter().flat_map(|r| r.params.keys()).collect();
        param_keys.sort();
        param_keys.dedup();
        let mut metric_keys: Vec<&String> = self.records.iter().flat_map(|r| r.metrics.keys()).collect();
        metric_keys.sort();
        metric_keys.dedup();

        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::param(e.to_string());
        let mut header = vec!["seed".to_string()];
        header.extend(param_keys.iter().map(|k| k.to_string()));
        header.extend(metric_keys.iter().map(|k| k.to_string()));
        header.push("elapsed_ms".into());
        w.write_record(&header).map_err(csv_err)?;
        let cell = |v: Option<&f64>| v.filter(|v| v.is_finite()).map_or_else(String::new, |v| v.to_string());
        for r in &self.records {
            let mut row = vec![r.seed.to_string()];
            row.extend(param_keys.iter().map(|k| cell(r.params.get(*k))));
            row.extend(metric_keys.iter().map(|k| cell(r.metrics.get(*k))));
            row.push(r.elapsed_ms.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::param(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::param(e.to_string()))
    }

    /// Values of one metric for records whose `param` equals `value`.
    pub fn metric_at(&self, metric: &str, param: &str, value: f64) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.params.get(param) == Some(&value))
            .filter_map(|r| r.metrics.get(metric).copied())
            .collect()
    }
}

/// Population standard deviation over absolute mean.
pub fn coefficient_of_variation(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean.abs()
}

struct Point {
    params: BTreeMap<String, f64>,
    seed: u64,
}

fn param(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Runs `evaluate` for each point, timing each metric separately.
fn run_points<F>(name: &str, points: Vec<Point>, metrics: &[Metric], options: &SweepOptions, evaluate: F) -> Result<SweepReport>
where
    F: Fn(&Point, Metric) -> Result<f64>,
{
    if metrics.is_empty() {
        return Err(Error::param("no metrics requested"));
    }
    if !options.disable_timing {
        if let Some(first) = points.first() {
            for &m in metrics {
                evaluate(first, m)?;
            }
        }
    }
    let mut records = Vec::with_capacity(points.len());
    for point in points {
        let mut values = BTreeMap::new();
        let mut timings = BTreeMap::new();
        for &m in metrics {
            let start = Instant::now();
            let v = evaluate(&point, m)?;
            let ms = if options.disable_timing { 0.0 } else { start.elapsed().as_secs_f64() * 1e3 };
            values.insert(m.name().to_string(), v);
            timings.insert(m.name().to_string(), ms);
        }
        records.push(SweepRecord {
            params: point.params,
            seed: point.seed,
            metrics: values,
            elapsed_ms: timings.values().sum(),
            metric_elapsed_ms: timings,
        });
    }
    Ok(SweepReport {
        sweep_name: name.to_string(),
        records,
        summary: BTreeMap::new(),
    })
}

fn check_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::param("no seeds given"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeDropKind {
    /// All classes kept, unique samples per class varied.
    Intra,
    /// Fixed unique samples per class, number of classes varied.
    Inter { n_unique: usize },
}

/// Applies [`mode_drop`] to `source` at each grid value and scores the result
/// against `real`. The output size equals `source.len()`.
pub fn run_mode_drop_sweep(
    real: &LabeledFeatureSet,
    source: &LabeledFeatureSet,
    kind: ModeDropKind,
    grid: &[usize],
    metrics: &[Metric],
    seeds: &[u64],
    options: &SweepOptions,
) -> Result<SweepReport> {
    check_seeds(seeds)?;
    let fitted;
    let classifier = match (&options.classifier, metrics.contains(&Metric::KlScore)) {
        (Some(c), _) => Some(c),
        (None, true) => {
            fitted = CentroidClassifier::fit(real)?;
            Some(&fitted)
        }
        (None, false) => None,
    };
    let n_classes = source.n_classes();
    let spec_for = |value: usize, seed: u64| {
        let (n_unique_per_class, c_classes) = match kind {
            ModeDropKind::Intra => (value, n_classes),
            ModeDropKind::Inter { n_unique } => (n_unique, value),
        };
        ModeDropSpec {
            n_unique_per_class,
            c_classes,
            total: source.len(),
            seed: RngSeed(seed).derive(STREAM_PERTURB),
        }
    };
    let (name, key) = match kind {
        ModeDropKind::Intra => ("mode_drop_intra", "n"),
        ModeDropKind::Inter { .. } => ("mode_drop_inter", "c"),
    };
    let points = grid
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .map(|(v, s)| {
            let spec = spec_for(v, s);
            Point {
                params: param(&[
                    (key, v as f64),
                    ("n_unique", spec.n_unique_per_class as f64),
                    ("classes", spec.c_classes as f64),
                ]),
                seed: s,
            }
        })
        .collect();

    let mut cache: Option<(u64, u64, FeatureMatrix)> = None;
    let cache = std::cell::RefCell::new(&mut cache);
    run_points(name, points, metrics, options, |p, m| {
        let value = p.params[key] as u64;
        let mut slot = cache.borrow_mut();
        if !matches!(**slot, Some((v, s, _)) if v == value && s == p.seed) {
            let dropped = mode_drop(source, &spec_for(value as usize, p.seed))?;
            **slot = Some((value, p.seed, dropped.into_parts().0));
        }
        let generated = &slot.as_ref().unwrap().2;
        score_metric(m, real.features(), generated, &options.config, classifier, RngSeed(p.seed))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian { location: f64, scale: f64, clamp: Option<(f64, f64)> },
    SaltPepper { lo: f64, hi: f64 },
}

impl NoiseKind {
    pub fn apply(&self, x: &FeatureMatrix, fraction: f64, seed: RngSeed) -> Result<FeatureMatrix> {
        match *self {
            NoiseKind::Gaussian { location, scale, clamp } => add_gaussian_noise(
                x,
                &GaussianNoise { fraction, location, scale, clamp },
                seed,
            ),
            NoiseKind::SaltPepper { lo, hi } => add_salt_pepper(x, fraction, lo, hi, seed),
        }
    }
}

/// Perturbs `generated` at each noise fraction and scores it against `real`.
///
/// Each record also carries `<metric>_normalized = (S - S_0) / (S_100 - S_0)`
/// where `S_0` and `S_100` are the scores at 0% and 100% noise for that seed.
pub fn run_noise_sweep(
    real: &FeatureMatrix,
    generated: &FeatureMatrix,
    noise: NoiseKind,
    fractions: &[f64],
    metrics: &[Metric],
    seeds: &[u64],
    options: &SweepOptions,
) -> Result<SweepReport> {
    check_seeds(seeds)?;
    let classifier = options.classifier.as_ref();
    let perturbed = |fraction: f64, seed: u64| noise.apply(generated, fraction, RngSeed(seed).derive(STREAM_PERTURB));
    let score_at = |fraction: f64, seed: u64, m: Metric| -> Result<f64> {
        score_metric(m, real, &perturbed(fraction, seed)?, &options.config, classifier, RngSeed(seed))
    };

    let points = fractions
        .iter()
        .flat_map(|&f| seeds.iter().map(move |&s| Point { params: param(&[("fraction", f)]), seed: s }))
        .collect();
    let mut report = run_points("noise", points, metrics, options, |p, m| score_at(p.params["fraction"], p.seed, m))?;

    let mut anchors = BTreeMap::new();
    for &s in seeds {
        for &m in metrics {
            anchors.insert((s, m), (score_at(0.0, s, m)?, score_at(1.0, s, m)?));
        }
    }
    for record in &mut report.records {
        for &m in metrics {
            let (s0, s100) = anchors[&(record.seed, m)];
            let span = s100 - s0;
            let v = record.metrics[m.name()];
            let normalized = if span == 0.0 { 0.0 } else { (v - s0) / span };
            record.metrics.insert(format!("{}_normalized", m.name()), normalized);
        }
    }
    Ok(report)
}

/// CrossLID (batched) at each neighborhood size, one record per `k`.
/// `spec.k` is ignored; the batch seed is `spec.seed` for every record.
pub fn run_k_sweep(
    real: &FeatureMatrix,
    generated: &FeatureMatrix,
    ks: &[usize],
    spec: &BatchSpec,
    options: &SweepOptions,
) -> Result<SweepReport> {
    let points = ks
        .iter()
        .map(|&k| Point { params: param(&[("k", k as f64)]), seed: spec.seed.0 })
        .collect();
    run_points("k_sweep", points, &[Metric::Crosslid], options, |p, _| {
        let spec = BatchSpec { k: p.params["k"] as usize, ..*spec };
        Ok(crosslid_batched(real, generated, &spec)?.score)
    })
}

/// Subsamples both sets to each size and scores them. The summary holds
/// `cv_<metric>`: the coefficient of variation across sizes of the per-size
/// mean score.
pub fn run_sample_size_sweep(
    real: &FeatureMatrix,
    generated: &FeatureMatrix,
    sizes: &[usize],
    metrics: &[Metric],
    seeds: &[u64],
    options: &SweepOptions,
) -> Result<SweepReport> {
    check_seeds(seeds)?;
    let classifier = options.classifier.as_ref();
    let points = sizes
        .iter()
        .flat_map(|&n| seeds.iter().map(move |&s| Point { params: param(&[("size", n as f64)]), seed: s }))
        .collect();
    let mut report = run_points("sample_size", points, metrics, options, |p, m| {
        let n = p.params["size"] as usize;
        let seed = RngSeed(p.seed);
        let r = real.subsample(n, seed.derive(STREAM_SUBSAMPLE_REAL))?;
        let g = generated.subsample(n, seed.derive(STREAM_SUBSAMPLE_GENERATED))?;
        score_metric(m, &r, &g, &options.config, classifier, seed)
    })?;
    for &m in metrics {
        let per_size: Vec<f64> = sizes
            .iter()
            .map(|&n| {
                let v = report.metric_at(m.name(), "size", n as f64);
                v.iter().sum::<f64>() / v.len() as f64
            })
            .collect();
        report
            .summary
            .insert(format!("cv_{}", m.name()), coefficient_of_variation(&per_size));
    }
    Ok(report)
}

mod nullable_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        map.iter()
            .map(|(k, v)| (k, v.is_finite().then_some(*v)))
            .collect::<BTreeMap<_, _>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        let raw = BTreeMap::<String, Option<f64>>::deserialize(d)?;
        Ok(raw.into_iter().map(|(k, v)| (k, v.unwrap_or(f64::INFINITY))).collect())
    }
}
