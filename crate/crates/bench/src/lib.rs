//! Fixtures shared by the criterion benchmarks.

use crosslid_core::{
    synth::{gaussian_mixture, MixtureMode, MixtureSpec},
    FeatureMatrix, RngSeed,
};

/// Standard-normal vectors of the given shape.
pub fn gaussian_features(n: usize, d: usize, seed: u64) -> FeatureMatrix {
    let spec = MixtureSpec {
        modes: vec![MixtureMode {
            mean: vec![0.0; d],
            scale: 1.0,
        }],
        n,
        weights: None,
        seed: RngSeed(seed),
    };
    gaussian_mixture(&spec)
        .expect("valid mixture")
        .into_parts()
        .0
}
