//! End-to-end acceptance criteria. Each test prints one `PASS`/`FAIL` line;
//! run with `--nocapture --test-threads=1` to see them in order.

use std::time::{Duration, Instant};

use crosslid_core::crosslid::class_counts;
use crosslid_core::lid::lid_mle_log_difference;
use crosslid_core::neighbors::NeighborDistances;
use crosslid_core::presets;
use crosslid_core::sweep::{
    run_k_sweep, run_mode_drop_sweep, run_noise_sweep, run_sample_size_sweep, Metric, MetricConfig, ModeDropKind,
    NoiseKind, SweepOptions, SweepReport, INTER_GRID, INTER_UNIQUE_PER_CLASS, INTRA_GRID,
};
use crosslid_core::synth::{embed_and_transform, gaussian_mixture, uniform_ball, MixtureMode, MixtureSpec};
use crosslid_core::{
    crosslid_batched, crosslid_exact, fit_gaussian, frechet_distance, kl_score, lid_mle, modewise_crosslid,
    self_lid, BatchSpec, ClassProbabilityMatrix, FeatureMatrix, GaussianFit, LabeledFeatureSet, ModeWiseConfig,
    RngSeed,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(name: &str, pass: bool, detail: impl AsRef<str>) {
    println!("{} {name}: {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    assert!(pass, "{name}: {}", detail.as_ref());
}

fn mixture(means: &[&[f64]], scale: f64, n: usize, seed: u64) -> LabeledFeatureSet {
    gaussian_mixture(&MixtureSpec {
        modes: means.iter().map(|m| MixtureMode { mean: m.to_vec(), scale }).collect(),
        n,
        weights: None,
        seed: RngSeed(seed),
    })
    .unwrap()
}

fn features(set: LabeledFeatureSet) -> FeatureMatrix {
    set.into_parts().0
}

fn default_batched(a: &FeatureMatrix, b: &FeatureMatrix, seed: u64) -> f64 {
    let spec = BatchSpec::new(100, 1000.min(b.rows()), RngSeed(seed));
    crosslid_batched(a, b, &spec).unwrap().score
}

/// Per-seed series of one metric along a grid parameter.
fn series(report: &SweepReport, metric: &str, key: &str, grid: &[usize], seed: u64) -> Vec<f64> {
    grid.iter()
        .map(|&v| {
            report
                .records
                .iter()
                .find(|r| r.seed == seed && r.params[key] == v as f64)
                .unwrap()
                .metrics[metric]
        })
        .collect()
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

#[test]
fn dimension_recovery_on_uniform_balls() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for m in [1usize, 2, 5, 8] {
        let x = uniform_ball(m, 10_000, 1.0, RngSeed(m as u64)).unwrap();
        let mean = self_lid(&x, 100).unwrap().mean;
        let ok = (mean - m as f64).abs() <= 0.15 * m as f64;
        pass &= ok;
        detail.push(format!("m={m}: {mean:.3}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    verdict(
        "dimension recovery within 15%, under 60 s",
        pass,
        format!("{} in {:.1?}", detail.join(", "), elapsed),
    );
}

#[test]
fn estimator_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut scale_ok, mut shift_ok, mut forms_ok) = (true, true, true);
    let mut worst_form_gap: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(2..200);
        let mut d: Vec<f64> = (0..k).map(|_| rng.random_range(1e-3..10.0)).collect();
        d.sort_by(f64::total_cmp);
        let base = NeighborDistances::new(d.clone()).unwrap();
        let lid = lid_mle(&base).unwrap().value;

        let pow2 = 2f64.powi(rng.random_range(-20..20));
        let scaled = NeighborDistances::new(d.iter().map(|v| v * pow2).collect()).unwrap();
        scale_ok &= lid_mle(&scaled).unwrap().value == lid;
        let s = rng.random_range(1e-3..1e3);
        let scaled = NeighborDistances::new(d.iter().map(|v| v * s).collect()).unwrap();
        scale_ok &= (lid_mle(&scaled).unwrap().value - lid).abs() <= 1e-12 * lid;

        let shift = rng.random_range(1e-3..5.0);
        let shifted = NeighborDistances::new(d.iter().map(|v| v + shift).collect()).unwrap();
        shift_ok &= lid_mle(&shifted).unwrap().value > lid;

        let other = lid_mle_log_difference(&base).unwrap().value;
        let gap = (other - lid).abs() / lid;
        worst_form_gap = worst_form_gap.max(gap);
        forms_ok &= gap <= 1e-12;
    }
    verdict(
        "estimator algebra on 1000 random profiles",
        scale_ok && shift_ok && forms_ok,
        format!("scale invariant: {scale_ok}, shift increases: {shift_ok}, forms agree: {forms_ok} (worst {worst_form_gap:.1e})"),
    );
}

/// Bimodal real set against four generated scenarios, from worst to best.
fn scenario_scores(seed: u64) -> [f64; 4] {
    let base = seed * 10;
    let real = features(mixture(&[&[-4.0, 0.0], &[4.0, 0.0]], 1.0, 1000, base));
    let far_uniform = embed_and_transform(
        &uniform_ball(2, 1000, 1.0, RngSeed(base + 1)).unwrap().scaled(10.0).unwrap(),
        2,
        &[0.0, 60.0],
        0.0,
        (0, 1),
    )
    .unwrap();
    let far_bimodal = features(mixture(&[&[-4.0, 12.0], &[4.0, 12.0]], 1.0, 1000, base + 2));
    let one_mode = features(mixture(&[&[-4.0, 0.0]], 1.0, 1000, base + 3));
    let both_modes = features(mixture(&[&[-4.0, 0.0], &[4.0, 0.0]], 1.0, 1000, base + 4));
    [far_uniform, far_bimodal, one_mode, both_modes].map(|g| default_batched(&real, &g, seed))
}

#[test]
fn scenario_ordering_on_bimodal_scene() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for seed in 1..=5 {
        let s = scenario_scores(seed);
        pass &= s.windows(2).all(|w| w[0] > w[1]);
        detail.push(fmt(&s));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    verdict(
        "far-uniform > far-bimodal > one-mode > two-mode, 5 seeds, under 30 s",
        pass,
        format!("{} in {:.1?}", detail.join(" "), elapsed),
    );
}

#[test]
fn offset_and_rotation_monotonicity() {
    let x2 = features(mixture(&[&[0.0, 0.0]], 1.0, 2000, 31));
    let y2 = features(mixture(&[&[0.0, 0.0]], 1.0, 2000, 32));
    let x = embed_and_transform(&x2, 3, &[], 0.0, (0, 1)).unwrap();
    let self_score = self_lid(&x, 100).unwrap().mean;

    let offsets = [0.0, 1.0, 2.0, 4.0, 8.0];
    let by_offset: Vec<f64> = offsets
        .iter()
        .map(|&d| {
            let y = embed_and_transform(&y2, 3, &[0.0, 0.0, d], 0.0, (0, 1)).unwrap();
            default_batched(&x, &y, 5)
        })
        .collect();
    let angles = [0.0, 15.0, 30.0, 60.0, 90.0];
    let by_angle: Vec<f64> = angles
        .iter()
        .map(|&t| {
            let y = embed_and_transform(&y2, 3, &[], t, (1, 2)).unwrap();
            default_batched(&x, &y, 5)
        })
        .collect();
    let non_decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0]);
    let near_self = |v: f64| (v - self_score).abs() <= 0.05 * self_score;
    verdict(
        "non-decreasing in offset and angle, self-LID within 5% at zero",
        non_decreasing(&by_offset) && non_decreasing(&by_angle) && near_self(by_offset[0]) && near_self(by_angle[0]),
        format!("self {self_score:.3}; offset {}; angle {}", fmt(&by_offset), fmt(&by_angle)),
    );
}

#[test]
fn mode_drop_sensitivity() {
    let scene = presets::mode_drop_scene().unwrap();
    let seeds: Vec<u64> = (0..10).collect();
    let batched = SweepOptions { disable_timing: true, ..SweepOptions::default() };
    let inter = run_mode_drop_sweep(
        &scene.real,
        &scene.source,
        ModeDropKind::Inter { n_unique: INTER_UNIQUE_PER_CLASS },
        &INTER_GRID,
        &[Metric::Crosslid],
        &seeds,
        &batched,
    )
    .unwrap();
    let exact = SweepOptions {
        config: MetricConfig { k: 100, batch_size: None },
        ..batched.clone()
    };
    let intra = run_mode_drop_sweep(
        &scene.real,
        &scene.source,
        ModeDropKind::Intra,
        &INTRA_GRID,
        &[Metric::Crosslid],
        &seeds,
        &exact,
    )
    .unwrap();

    let mut pass = true;
    let mut detail = Vec::new();
    for &s in &seeds {
        let a = series(&inter, "crosslid", "c", &INTER_GRID, s);
        let b = series(&intra, "crosslid", "n", &INTRA_GRID, s);
        let ok = a.windows(2).all(|w| w[1] < w[0]) && b.windows(2).all(|w| w[1] <= w[0]);
        pass &= ok;
        if !ok || s == 0 {
            detail.push(format!("seed {s}: inter {} intra {}", fmt(&a), fmt(&b)));
        }
    }
    verdict(
        "inter-class strictly decreasing in c, intra-class non-increasing in n, 10 seeds",
        pass,
        detail.join("; "),
    );
}

#[test]
fn noise_robustness_ordering() {
    let scene = presets::noise_scene().unwrap();
    let noise = NoiseKind::Gaussian { location: 127.5, scale: 127.5f64.sqrt(), clamp: Some((0.0, 255.0)) };
    let options = SweepOptions { disable_timing: true, ..SweepOptions::default() };
    let seeds = [0, 1, 2];
    let report = run_noise_sweep(
        scene.real.features(),
        scene.source.features(),
        noise,
        &[0.0, 0.02],
        &[Metric::Crosslid, Metric::Frechet],
        &seeds,
        &options,
    )
    .unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for &s in &seeds {
        let rel = |m: &str| {
            let at = |f: f64| report.records.iter().find(|r| r.seed == s && r.params["fraction"] == f).unwrap().metrics[m];
            (at(0.02) - at(0.0)).abs() / at(0.0).abs()
        };
        let (c, f) = (rel("crosslid"), rel("frechet"));
        pass &= c < f;
        detail.push(format!("seed {s}: crosslid {:.2}% vs frechet {:.1}%", 100.0 * c, 100.0 * f));
    }
    verdict("relative change at 2% noise: crosslid below frechet", pass, detail.join("; "));
}

#[test]
fn sample_size_stability() {
    let scene = presets::sample_size_scene().unwrap();
    let options = SweepOptions::default();
    let report = run_sample_size_sweep(
        scene.real.features(),
        scene.source.features(),
        &[5000, 10000, 15000, 20000, 25000],
        &[Metric::Crosslid, Metric::Frechet],
        &[0, 1, 2],
        &options,
    )
    .unwrap();
    let (c, f) = (report.summary["cv_crosslid"], report.summary["cv_frechet"]);
    verdict(
        "coefficient of variation across sizes: crosslid below frechet",
        c < f,
        format!("cv crosslid {c:.4}, cv frechet {f:.4}"),
    );
}

#[test]
fn batched_protocol_fidelity() {
    let mut pass = true;
    let mut detail = Vec::new();
    for (i, d) in [2usize, 8, 32].into_iter().enumerate() {
        let (a, b) = (
            features(mixture(&[&vec![0.0; d]], 1.0, 2000, 40 + i as u64)),
            features(mixture(&[&vec![0.0; d]], 1.0, 2000, 50 + i as u64)),
        );
        let exact = crosslid_exact(&a, &b, 100, false).unwrap().score;
        let batched = default_batched(&a, &b, 7);
        let full = crosslid_batched(&a, &b, &BatchSpec::new(100, 2000, RngSeed(7))).unwrap().score;
        let ok = (batched - exact).abs() <= 0.1 * exact && full == exact;
        pass &= ok;
        detail.push(format!("d={d}: exact {exact:.3}, batch-1000 {batched:.3}, full batch {full:.3}"));
    }
    verdict("batched within 10% of exact, equal at full batch", pass, detail.join("; "));
}

#[test]
fn oversampling_oracle() {
    let means: [&[f64]; 3] = [&[0.0, 0.0, 0.0], &[10.0, 0.0, 0.0], &[0.0, 10.0, 0.0]];
    let cfg = ModeWiseConfig::default();
    let mut hits = 0;
    let mut sums_ok = true;
    for trial in 0..10u64 {
        let real = mixture(&means, 1.0, 3000, 100 + trial);
        let missing = (trial % 3) as usize;
        let kept: Vec<&[f64]> = (0..3).filter(|&c| c != missing).map(|c| means[c]).collect();
        let generated = features(mixture(&kept, 1.0, 3000, 200 + trial));
        let report = modewise_crosslid(&real, &generated, &ModeWiseConfig { seed: RngSeed(trial), ..cfg }).unwrap();
        let argmax = report.per_class.iter().max_by(|a, b| a.gamma.total_cmp(&b.gamma)).unwrap().class;
        hits += usize::from(argmax == missing);
        sums_ok &= (report.normalized_gamma.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
    }

    let real = mixture(&means, 1.0, 3000, 300);
    let generated = features(mixture(&means, 1.0, 3000, 301));
    let report = modewise_crosslid(&real, &generated, &cfg).unwrap();
    let gammas: Vec<f64> = report.per_class.iter().map(|c| c.gamma).collect();
    let identical_ok = gammas.iter().all(|&g| g < 0.15);
    sums_ok &= (report.normalized_gamma.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
    let counts = class_counts(&[0.25, 0.75], 100);

    verdict(
        "missing class has max gamma in >= 9/10, identical gammas < 0.15, sums to 1, counts (25, 75)",
        hits >= 9 && identical_ok && sums_ok && counts == [25, 75],
        format!("missing-class hits {hits}/10; identical gammas {}; counts {counts:?}", fmt(&gammas)),
    );
}

#[test]
fn baseline_analytic_suite() {
    let fit = |mean: &[f64], var: &[f64]| GaussianFit {
        mean: DVector::from_column_slice(mean),
        covariance: DMatrix::from_diagonal(&DVector::from_column_slice(var)),
    };
    let id = fit(&[0.0, 0.0], &[1.0, 1.0]);
    let values = [
        (frechet_distance(&id, &id).unwrap(), 0.0),
        (frechet_distance(&id, &fit(&[3.0, 4.0], &[1.0, 1.0])).unwrap(), 25.0),
        (frechet_distance(&fit(&[0.0], &[4.0]), &fit(&[0.0], &[9.0])).unwrap(), 1.0),
        (
            kl_score(&ClassProbabilityMatrix::new(FeatureMatrix::new(3, 5, vec![0.2; 15]).unwrap()).unwrap()),
            1.0,
        ),
        (
            kl_score(&ClassProbabilityMatrix::new(FeatureMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap()).unwrap()),
            2.0,
        ),
    ];
    let sample = features(mixture(&[&[1.0, -2.0, 0.5]], 2.0, 500, 9));
    let fitted = fit_gaussian(&sample).unwrap();
    let same = frechet_distance(&fitted, &fitted).unwrap();
    let pass = values.iter().all(|(got, want)| (got - want).abs() <= 1e-8) && same.abs() <= 1e-8;
    let got: Vec<f64> = values.iter().map(|v| v.0).collect();
    verdict(
        "frechet 0 / 25 / 1, kl_score 1 / 2, to 1e-8",
        pass,
        format!("{} identical-fit {same:.1e}", fmt(&got)),
    );
}

#[test]
fn performance_budget() {
    let real = gaussian_features(20_000, 512, 1);
    let generated = gaussian_features(20_000, 512, 2);
    let start = Instant::now();
    let report = crosslid_batched(&real, &generated, &BatchSpec::new(100, 1000, RngSeed(42))).unwrap();
    let elapsed = start.elapsed();
    verdict(
        "20000 x 20000, D=512, batch 1000, k=100 under 5 minutes",
        elapsed < Duration::from_secs(300) && report.score.is_finite(),
        format!("score {:.3} in {:.1?} on {} threads", report.score, elapsed, rayon::current_num_threads()),
    );
}

fn gaussian_features(n: usize, d: usize, seed: u64) -> FeatureMatrix {
    features(mixture(&[&vec![0.0; d]], 1.0, n, seed))
}

#[test]
fn k_sweep_trend() {
    let (real, generated) = presets::gaussian_pair(8, 2000, 5000).unwrap();
    let ks = [20, 50, 100, 200];
    let options = SweepOptions { disable_timing: true, ..SweepOptions::default() };
    let report = run_k_sweep(&real, &generated, &ks, &BatchSpec::default(), &options).unwrap();
    let scores = series(&report, "crosslid", "k", &ks, BatchSpec::default().seed.0);
    let inversions = scores.windows(2).filter(|w| w[1] < w[0]).count();
    verdict(
        "non-decreasing in k over {20, 50, 100, 200}, at most 1 inversion",
        inversions <= 1,
        format!("scores {} ({inversions} inversions)", fmt(&scores)),
    );
}
