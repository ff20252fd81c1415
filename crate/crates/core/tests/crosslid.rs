use crosslid_core::crosslid::class_counts;
use crosslid_core::synth::{gaussian_mixture, MixtureMode, MixtureSpec};
use crosslid_core::{
    crosslid_batched, crosslid_exact, modewise_crosslid, oversampling_plan, self_lid, BatchSpec, FeatureMatrix,
    LabeledFeatureSet, ModeWiseConfig, RngSeed,
};

fn gaussian(d: usize, n: usize, scale: f64, seed: u64) -> FeatureMatrix {
    gaussian_mixture(&MixtureSpec {
        modes: vec![MixtureMode { mean: vec![0.0; d], scale }],
        n,
        weights: None,
        seed: RngSeed(seed),
    })
    .unwrap()
    .into_parts()
    .0
}

fn three_class(n: usize, seed: u64) -> LabeledFeatureSet {
    gaussian_mixture(&MixtureSpec {
        modes: [[0.0, 0.0, 0.0], [12.0, 0.0, 0.0], [0.0, 12.0, 0.0]]
            .iter()
            .map(|m| MixtureMode { mean: m.to_vec(), scale: 1.0 })
            .collect(),
        n,
        weights: None,
        seed: RngSeed(seed),
    })
    .unwrap()
}

#[test]
fn exact_self_convention_equals_self_lid() {
    let x = gaussian(4, 400, 1.0, 1);
    let cross = crosslid_exact(&x, &x, 20, true).unwrap();
    let own = self_lid(&x, 20).unwrap();
    assert_eq!(cross.score, own.mean);
    assert_eq!(cross.per_query, own.per_point);
}

#[test]
fn crosslid_is_asymmetric() {
    let narrow = gaussian(3, 1000, 0.2, 2);
    let broad = gaussian(3, 1000, 3.0, 3);
    let ab = crosslid_exact(&narrow, &broad, 20, false).unwrap().score;
    let ba = crosslid_exact(&broad, &narrow, 20, false).unwrap().score;
    assert!((ab - ba).abs() > 0.5, "{ab} vs {ba}");
}

#[test]
fn reference_order_does_not_matter() {
    let a = gaussian(3, 200, 1.0, 4);
    let b = gaussian(3, 500, 1.0, 5);
    let reversed: Vec<usize> = (0..b.rows()).rev().collect();
    let base = crosslid_exact(&a, &b, 15, false).unwrap();
    let perm = crosslid_exact(&a, &b.select_rows(&reversed), 15, false).unwrap();
    assert_eq!(base.per_query, perm.per_query);
}

#[test]
fn query_order_only_permutes_estimates() {
    let a = gaussian(3, 200, 1.0, 6);
    let b = gaussian(3, 500, 1.0, 7);
    let reversed: Vec<usize> = (0..a.rows()).rev().collect();
    let base = crosslid_exact(&a, &b, 15, false).unwrap();
    let perm = crosslid_exact(&a.select_rows(&reversed), &b, 15, false).unwrap();
    let mut back = perm.per_query.clone();
    back.reverse();
    assert_eq!(back, base.per_query);
    assert!((base.score - perm.score).abs() < 1e-12 * base.score);
}

#[test]
fn full_batch_equals_exact() {
    let a = gaussian(5, 300, 1.0, 8);
    let b = gaussian(5, 700, 1.0, 9);
    let exact = crosslid_exact(&a, &b, 30, false).unwrap();
    let batched = crosslid_batched(&a, &b, &BatchSpec::new(30, 700, RngSeed(1))).unwrap();
    assert_eq!(exact.per_query, batched.per_query);
    assert_eq!(exact.score, batched.score);
}

#[test]
fn batched_report_is_seed_deterministic() {
    let a = gaussian(5, 300, 1.0, 10);
    let b = gaussian(5, 700, 1.0, 11);
    let spec = BatchSpec::new(20, 200, RngSeed(5));
    assert_eq!(crosslid_batched(&a, &b, &spec).unwrap(), crosslid_batched(&a, &b, &spec).unwrap());
    let other = crosslid_batched(&a, &b, &BatchSpec { seed: RngSeed(6), ..spec }).unwrap();
    assert_ne!(other.per_query, crosslid_batched(&a, &b, &spec).unwrap().per_query);
}

#[test]
fn duplicate_references_flag_nonfinite() {
    let a = FeatureMatrix::new(3, 1, vec![0.0, 1.0, 2.0]).unwrap();
    let b = FeatureMatrix::new(4, 1, vec![5.0; 4]).unwrap();
    let r = crosslid_exact(&a, &b, 3, false).unwrap();
    assert_eq!(r.nonfinite_count, 3);
    assert!(r.warning);
    assert!(r.score.is_infinite());
}

#[test]
fn identical_distributions_have_small_gammas() {
    let real = three_class(3000, 20);
    let generated = three_class(3000, 21).into_parts().0;
    let cfg = ModeWiseConfig { k: 50, ..ModeWiseConfig::default() };
    let report = modewise_crosslid(&real, &generated, &cfg).unwrap();
    for c in &report.per_class {
        assert!(c.gamma < 0.15, "class {} gamma {}", c.class, c.gamma);
        assert_eq!(c.gamma, (c.self_score - c.cross_score).abs() / c.self_score);
    }
    assert!((report.normalized_gamma.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn collapsed_generator_flags_a_missing_class() {
    let real = three_class(3000, 22);
    let only_class0: Vec<usize> = (0..real.len()).filter(|&i| real.labels()[i] == 0).collect();
    let generated = three_class(3000, 23).select_rows(&only_class0).into_parts().0;
    let report = modewise_crosslid(&real, &generated, &ModeWiseConfig { k: 50, ..Default::default() }).unwrap();
    let argmax = report
        .per_class
        .iter()
        .max_by(|a, b| a.gamma.total_cmp(&b.gamma))
        .unwrap()
        .class;
    assert_ne!(argmax, 0);
}

#[test]
fn plan_counts_and_indices() {
    assert_eq!(class_counts(&[0.25, 0.75], 100), vec![25, 75]);
    assert_eq!(class_counts(&[0.5, 0.5], 3), vec![2, 2]);

    let real = three_class(900, 24);
    let generated = three_class(900, 25).into_parts().0;
    let report = modewise_crosslid(&real, &generated, &ModeWiseConfig { k: 20, ..Default::default() }).unwrap();
    let plan = oversampling_plan(&report, &real, 60, RngSeed(3)).unwrap();
    let counts = class_counts(&report.normalized_gamma, 60);
    assert_eq!(plan.per_class_counts.iter().map(|c| c.count).collect::<Vec<_>>(), counts);
    assert_eq!(&plan.augmented_indices[..real.len()], &(0..real.len()).collect::<Vec<_>>()[..]);
    assert_eq!(plan.augmented_indices.len(), real.len() + plan.extra_rows());

    let mut offset = real.len();
    for c in &plan.per_class_counts {
        for &i in &plan.augmented_indices[offset..offset + c.count] {
            assert_eq!(real.labels()[i], c.class);
        }
        offset += c.count;
    }
    assert_eq!(plan.materialize(&real).len(), plan.augmented_indices.len());

    let empty = oversampling_plan(&report, &real, 0, RngSeed(3)).unwrap();
    assert_eq!(empty.extra_rows(), 0);
    assert_eq!(empty.augmented_indices.len(), real.len());
}

#[test]
fn small_class_is_rejected() {
    let real = three_class(60, 26);
    let generated = three_class(600, 27).into_parts().0;
    assert!(modewise_crosslid(&real, &generated, &ModeWiseConfig { k: 50, ..Default::default() }).is_err());
}
