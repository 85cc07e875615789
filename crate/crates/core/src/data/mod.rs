//! Datasets: IDX parsing, client partitioning and synthetic blobs.

pub mod idx;
pub mod partition;
pub mod synth;

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{stream_rng, Stream};

pub use idx::{parse_idx_images, parse_idx_labels, IdxImages};
pub use partition::{partition_dirichlet, partition_iid, PartitionPlan};
pub use synth::synth_dataset;

/// Feature rows in `[0, 1]` with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    features: Matrix,
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabeledDataset {
    pub fn new(features: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::Data("dataset must contain at least one sample".into()));
        }
        if features.rows() != labels.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Data(format!(
                "label {bad} outside [0, {num_classes})"
            )));
        }
        if let Some(bad) = features
            .as_slice()
            .iter()
            .find(|v| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::Data(format!("feature value {bad} outside [0, 1]")));
        }
        Ok(LabeledDataset {
            features,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Features and labels of the listed samples, in the listed order.
    pub fn batch(&self, indices: &[usize]) -> (Matrix, Vec<usize>) {
        (
            self.features.select_rows(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    pub fn subset(&self, indices: &[usize]) -> Result<LabeledDataset> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Validation(format!(
                "index {bad} out of range for {} samples",
                self.len()
            )));
        }
        let (features, labels) = self.batch(indices);
        LabeledDataset::new(features, labels, self.num_classes)
    }

    /// The first `n` samples after a seeded shuffle. `n >= len()` returns the
    /// full dataset unchanged.
    pub fn seeded_subset(&self, n: usize, seed: u64) -> Result<LabeledDataset> {
        if n >= self.len() {
            return Ok(self.clone());
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut stream_rng(seed, Stream::Subset, self.len() as u64, 0));
        order.truncate(n);
        self.subset(&order)
    }
}

/// File names inside an MNIST directory.
pub const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::path(path, e))
}

/// Loads one IDX image/label pair from disk.
pub fn load_idx_pair(images: &Path, labels: &Path) -> Result<LabeledDataset> {
    let imgs = parse_idx_images(&read_file(images)?)?;
    let labs = parse_idx_labels(&read_file(labels)?)?;
    if imgs.count() != labs.len() {
        return Err(Error::Data(format!(
            "{} has {} images but {} has {} labels",
            images.display(),
            imgs.count(),
            labels.display(),
            labs.len()
        )));
    }
    LabeledDataset::new(imgs.to_features(), labs, 10)
}

/// Standard MNIST train and test splits from `dir`.
#[derive(Clone, Debug)]
pub struct Mnist {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

pub fn mnist_paths(dir: &Path) -> [PathBuf; 4] {
    MNIST_FILES.map(|f| dir.join(f))
}

pub fn load_mnist(dir: &Path) -> Result<Mnist> {
    let [ti, tl, vi, vl] = mnist_paths(dir);
    for p in [&ti, &tl, &vi, &vl] {
        if !p.is_file() {
            return Err(Error::path(
                p,
                std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    "MNIST file missing; run `fedkan fetch-mnist --dir <dir>` or point mnist_dir at the IDX files",
                ),
            ));
        }
    }
    Ok(Mnist {
        train: load_idx_pair(&ti, &tl)?,
        test: load_idx_pair(&vi, &vl)?,
    })
}
