//! Bundled synthetic scenes used by the CLI `bench` presets and the
//! acceptance suite. Each scene is fully determined by its constants.

use rand::Rng;

use crate::data::{FeatureMatrix, LabeledFeatureSet};
use crate::error::Result;
use crate::rng::RngSeed;
use crate::synth::{gaussian_mixture, MixtureMode, MixtureSpec};

/// Real set and a larger labeled source to perturb into generated sets.
#[derive(Debug, Clone)]
pub struct Scene {
    pub real: LabeledFeatureSet,
    pub source: LabeledFeatureSet,
}

/// `c` isotropic modes with means uniform in `[lo, hi]^d`.
pub fn random_modes(c: usize, d: usize, lo: f64, hi: f64, scale: f64, seed: RngSeed) -> Vec<MixtureMode> {
    let mut rng = seed.rng();
    (0..c)
        .map(|_| MixtureMode {
            mean: (0..d).map(|_| rng.random_range(lo..hi)).collect(),
            scale,
        })
        .collect()
}

fn mixture(modes: &[MixtureMode], n: usize, seed: u64) -> Result<LabeledFeatureSet> {
    gaussian_mixture(&MixtureSpec {
        modes: modes.to_vec(),
        n,
        weights: None,
        seed: RngSeed(seed),
    })
}

/// Ten well separated unit-scale modes in 8 dimensions.
pub fn mode_drop_scene() -> Result<Scene> {
    let modes = random_modes(10, 8, -20.0, 20.0, 1.0, RngSeed(2024));
    Ok(Scene {
        real: mixture(&modes, 2000, 1)?,
        source: mixture(&modes, 10000, 2)?,
    })
}

/// Ten broad modes in 100 dimensions on a pixel-like `[0, 255]` range.
pub fn noise_scene() -> Result<Scene> {
    let modes = random_modes(10, 100, 60.0, 190.0, 20.0, RngSeed(77));
    Ok(Scene {
        real: mixture(&modes, 5000, 1)?,
        source: mixture(&modes, 5000, 2)?,
    })
}

/// Ten unit-scale modes in 32 dimensions, 25000 samples per set.
pub fn sample_size_scene() -> Result<Scene> {
    let modes = random_modes(10, 32, -10.0, 10.0, 1.0, RngSeed(7));
    Ok(Scene {
        real: mixture(&modes, 25000, 1)?,
        source: mixture(&modes, 25000, 2)?,
    })
}

/// Two independent samples of a standard Gaussian in `d` dimensions.
pub fn gaussian_pair(d: usize, n_real: usize, n_generated: usize) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let modes = [MixtureMode { mean: vec![0.0; d], scale: 1.0 }];
    Ok((
        mixture(&modes, n_real, 1)?.into_parts().0,
        mixture(&modes, n_generated, 2)?.into_parts().0,
    ))
}
