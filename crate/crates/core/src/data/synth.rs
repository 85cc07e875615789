use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{stream_rng, Stream};

use super::LabeledDataset;

/// Spread of the class centers before squashing.
const CENTER_STD: f64 = 1.5;
pub const DEFAULT_NOISE: f64 = 0.3;

/// Gaussian class blobs squashed into `(0, 1)` by a logistic map. Sample `i`
/// has label `i % classes`, so classes are balanced to within one sample.
pub fn synth_dataset(n: usize, d: usize, classes: usize, seed: u64) -> Result<LabeledDataset> {
    synth_dataset_with_noise(n, d, classes, DEFAULT_NOISE, seed)
}

pub fn synth_dataset_with_noise(
    n: usize,
    d: usize,
    classes: usize,
    noise: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if n == 0 || d == 0 || classes == 0 {
        return Err(Error::Validation(format!(
            "synthetic dataset needs positive n, d and classes, got ({n}, {d}, {classes})"
        )));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::Validation(format!("noise must be non-negative, got {noise}")));
    }
    let mut rng = stream_rng(seed, Stream::Synth, d as u64, classes as u64);
    let center_dist = Normal::new(0.0, CENTER_STD).expect("valid std");
    let centers: Vec<f64> = (0..classes * d).map(|_| center_dist.sample(&mut rng)).collect();

    let noise_dist = Normal::new(0.0, noise).expect("valid std");
    let mut rng = stream_rng(seed, Stream::Synth, n as u64, u64::MAX);
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let mut data = Vec::with_capacity(n * d);
    for &label in &labels {
        for k in 0..d {
            let v = centers[label * d + k] + noise_dist.sample(&mut rng);
            data.push(1.0 / (1.0 + (-v).exp()));
        }
    }
    LabeledDataset::new(Matrix::from_vec(n, d, data)?, labels, classes)
}
