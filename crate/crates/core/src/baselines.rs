//! Reference metrics: Fréchet distance between fitted Gaussians, the
//! exponentiated KL score over class probabilities, and Pearson/Spearman
//! correlation for comparing metric curves.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

/// Eigenvalues down to `-EIGEN_TOLERANCE * max(1, |lambda|_max)` are treated
/// as zero.
pub const EIGEN_TOLERANCE: f64 = 1e-8;
/// Allowed deviation of a probability row sum from one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Sample mean and unbiased covariance of a feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFit {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianFit {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

pub fn fit_gaussian(x: &FeatureMatrix) -> Result<GaussianFit> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::Empty(format!("need at least 2 rows to fit a Gaussian, got {n}")));
    }
    let mut mean = DVector::zeros(d);
    for row in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean /= n as f64;

    let centered = DMatrix::from_fn(n, d, |i, j| x.row(i)[j] - mean[j]);
    let mut covariance = centered.tr_mul(&centered) / (n - 1) as f64;
    symmetrize(&mut covariance);
    Ok(GaussianFit { mean, covariance })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Eigenvalues of a symmetric matrix with small negatives clamped to zero.
fn psd_eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let mut eig = SymmetricEigen::new(m);
    let scale = eig.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    for v in eig.eigenvalues.iter_mut() {
        if *v < 0.0 {
            if *v < -EIGEN_TOLERANCE * scale {
                return Err(Error::IndefiniteCovariance(*v));
            }
            *v = 0.0;
        }
    }
    Ok(eig)
}

/// Fréchet distance between two Gaussians:
/// `|mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2))`.
///
/// The trace of the matrix square root is taken as the sum of square roots of
/// the eigenvalues of the symmetric PSD matrix `S_a^(1/2) S_b S_a^(1/2)`,
/// which shares its spectrum with `S_a S_b`.
pub fn frechet_distance(a: &GaussianFit, b: &GaussianFit) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let mean_term = (&a.mean - &b.mean).norm_squared();

    let eig_a = psd_eigen(a.covariance.clone())?;
    let sqrt_a = &eig_a.eigenvectors
        * DMatrix::from_diagonal(&eig_a.eigenvalues.map(f64::sqrt))
        * eig_a.eigenvectors.transpose();
    let mut inner = &sqrt_a * &b.covariance * &sqrt_a;
    symmetrize(&mut inner);
    let trace_sqrt: f64 = psd_eigen(inner)?.eigenvalues.iter().map(|v| v.sqrt()).sum();

    let value = mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * trace_sqrt;
    Ok(value.max(0.0))
}

/// N×C matrix of per-sample class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbabilityMatrix(FeatureMatrix);

impl ClassProbabilityMatrix {
    pub fn new(probs: FeatureMatrix) -> Result<Self> {
        for (row, p) in probs.iter_rows().enumerate() {
            let sum: f64 = p.iter().sum();
            if p.iter().any(|v| !(0.0..=1.0).contains(v)) || (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidDistribution { row });
            }
        }
        Ok(ClassProbabilityMatrix(probs))
    }

    pub fn matrix(&self) -> &FeatureMatrix {
        &self.0
    }
}

/// `exp(mean_x KL(p(y|x) || p(y)))` with `p(y)` the row mean and `0 ln 0 = 0`.
pub fn kl_score(p: &ClassProbabilityMatrix) -> f64 {
    let m = p.matrix();
    let n = m.rows() as f64;
    let mut marginal = vec![0.0; m.cols()];
    for row in m.iter_rows() {
        for (acc, v) in marginal.iter_mut().zip(row) {
            *acc += v;
        }
    }
    marginal.iter_mut().for_each(|v| *v /= n);

    let mean_kl = m
        .iter_rows()
        .map(|row| {
            row.iter()
                .zip(&marginal)
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, q)| p * (p / q).ln())
                .sum::<f64>()
        })
        .sum::<f64>()
        / n;
    mean_kl.max(0.0).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub pearson: f64,
    pub spearman: f64,
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> Result<Correlation> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::UndefinedCorrelation("need at least 3 pairs"));
    }
    Ok(Correlation {
        pearson: pearson(xs, ys)?,
        spearman: pearson(&average_ranks(xs), &average_ranks(ys))?,
    })
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their positions.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}
