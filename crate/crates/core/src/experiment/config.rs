//! Flat TOML experiment configuration. Every key is optional and has a
//! default; unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fed::{Aggregation, FailurePolicy, RoundConfig};
use crate::optim::AdamWConfig;
use crate::wavelet::{parse_wavelet_spec, MotherWavelet};

pub const MNIST_DIM: usize = 784;
pub const MNIST_CLASSES: usize = 10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Central,
    Federated,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    #[default]
    Iid,
    Dirichlet,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    #[default]
    Mnist,
    Synthetic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,

    pub wavelet: String,
    /// Mexican hat only.
    pub sigma: Option<f64>,
    /// Morlet only.
    pub omega0: Option<f64>,
    /// Shannon only.
    pub window_half_width: Option<f64>,
    pub architecture: Vec<usize>,

    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,

    /// Central mode.
    pub epochs: usize,
    /// Federated mode.
    pub rounds: usize,
    pub local_epochs: usize,
    pub clients: usize,
    pub client_fraction: f64,
    pub batch_size: usize,
    pub aggregation: Aggregation,
    pub partition: PartitionKind,
    pub dirichlet_alpha: f64,
    pub persist_optimizer: bool,
    pub failure_policy: FailurePolicy,

    pub trials: usize,
    pub seed: u64,

    pub dataset: DatasetKind,
    pub mnist_dir: PathBuf,
    /// Training images kept after a shuffle keyed by `seed`.
    pub train_subset: usize,
    /// Test images kept; absent means the whole test set.
    pub test_subset: Option<usize>,
    pub synth_train: usize,
    pub synth_test: usize,
    pub synth_dim: usize,
    pub synth_classes: usize,
    pub synth_noise: f64,

    pub output_dir: PathBuf,
    /// Also evaluate on the training set after every epoch or round.
    pub eval_train: bool,
    /// When false, `wall_seconds` is written as 0.
    pub record_wall_time: bool,
    pub save_checkpoint: bool,
    pub execution: Exec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let optim = AdamWConfig::default();
        ExperimentConfig {
            mode: Mode::Central,
            wavelet: "mexican_hat".into(),
            sigma: None,
            omega0: None,
            window_half_width: None,
            architecture: vec![MNIST_DIM, 64, MNIST_CLASSES],
            lr: optim.lr,
            weight_decay: optim.weight_decay,
            beta1: optim.beta1,
            beta2: optim.beta2,
            epsilon: optim.epsilon,
            epochs: 50,
            rounds: 10,
            local_epochs: 1,
            clients: 10,
            client_fraction: 1.0,
            batch_size: 64,
            aggregation: Aggregation::Uniform,
            partition: PartitionKind::Iid,
            dirichlet_alpha: 0.5,
            persist_optimizer: false,
            failure_policy: FailurePolicy::Abort,
            trials: 3,
            seed: 0,
            dataset: DatasetKind::Mnist,
            mnist_dir: PathBuf::from("data/mnist"),
            train_subset: 50_000,
            test_subset: None,
            synth_train: 600,
            synth_test: 200,
            synth_dim: 8,
            synth_classes: 3,
            synth_noise: crate::data::synth::DEFAULT_NOISE,
            output_dir: PathBuf::from("runs"),
            eval_train: true,
            record_wall_time: true,
            save_checkpoint: true,
            execution: Exec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml_table(table: toml::Table) -> Result<Self> {
        table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn mother_wavelet(&self) -> Result<MotherWavelet> {
        let mut overrides = BTreeMap::new();
        for (key, value) in [
            ("sigma", self.sigma),
            ("omega0", self.omega0),
            ("window_half_width", self.window_half_width),
        ] {
            if let Some(v) = value {
                overrides.insert(key.to_string(), v);
            }
        }
        parse_wavelet_spec(&self.wavelet, &overrides)
    }

    /// Round settings for trial seed `seed`.
    pub fn round_config(&self, seed: u64) -> RoundConfig {
        RoundConfig {
            total_rounds: self.rounds,
            local_epochs: self.local_epochs,
            client_fraction: self.client_fraction,
            batch_size: self.batch_size,
            aggregation: self.aggregation,
            seed,
            persist_optimizer: self.persist_optimizer,
            failure_policy: self.failure_policy,
            eval_train: self.eval_train,
        }
    }

    /// `(feature dim, classes)` of the configured dataset.
    pub fn data_shape(&self) -> (usize, usize) {
        match self.dataset {
            DatasetKind::Mnist => (MNIST_DIM, MNIST_CLASSES),
            DatasetKind::Synthetic => (self.synth_dim, self.synth_classes),
        }
    }

    pub fn train_size(&self) -> usize {
        match self.dataset {
            DatasetKind::Mnist => self.train_subset.min(60_000),
            DatasetKind::Synthetic => self.synth_train,
        }
    }

    /// Checks every constraint and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems: Vec<String> = Vec::new();
        let mut push_err = |r: Result<()>| {
            if let Err(e) = r {
                problems.push(e.to_string());
            }
        };
        push_err(self.mother_wavelet().map(|_| ()));
        push_err(self.optimizer().validate());
        push_err(self.round_config(self.seed).validate());

        if self.trials == 0 {
            problems.push("trials must be at least 1".into());
        }
        if self.architecture.len() < 2 || self.architecture.contains(&0) {
            problems.push(format!(
                "architecture needs at least two positive widths, got {:?}",
                self.architecture
            ));
        } else {
            let (dim, classes) = self.data_shape();
            if self.architecture[0] != dim {
                problems.push(format!(
                    "architecture input width {} does not match the {dim} dataset features",
                    self.architecture[0]
                ));
            }
            if *self.architecture.last().expect("nonempty") != classes {
                problems.push(format!(
                    "architecture output width {} does not match the {classes} dataset classes",
                    self.architecture.last().expect("nonempty")
                ));
            }
        }
        match self.mode {
            Mode::Central => {
                if self.epochs == 0 {
                    problems.push("epochs must be at least 1".into());
                }
            }
            Mode::Federated => {
                if self.rounds == 0 {
                    problems.push("rounds must be at least 1".into());
                }
                if self.clients == 0 {
                    problems.push("clients must be at least 1".into());
                } else if self.clients > self.train_size() {
                    problems.push(format!(
                        "{} clients cannot share {} training samples",
                        self.clients,
                        self.train_size()
                    ));
                }
                if !(self.dirichlet_alpha.is_finite() && self.dirichlet_alpha > 0.0) {
                    problems.push(format!(
                        "dirichlet_alpha must be positive, got {}",
                        self.dirichlet_alpha
                    ));
                }
            }
        }
        match self.dataset {
            DatasetKind::Mnist => {
                if self.train_subset == 0 {
                    problems.push("train_subset must be positive".into());
                }
                if self.test_subset == Some(0) {
                    problems.push("test_subset must be positive".into());
                }
            }
            DatasetKind::Synthetic => {
                for (key, v) in [
                    ("synth_train", self.synth_train),
                    ("synth_test", self.synth_test),
                    ("synth_dim", self.synth_dim),
                    ("synth_classes", self.synth_classes),
                ] {
                    if v == 0 {
                        problems.push(format!("{key} must be positive"));
                    }
                }
                if !(self.synth_noise.is_finite() && self.synth_noise >= 0.0) {
                    problems.push(format!("synth_noise must be non-negative, got {}", self.synth_noise));
                }
            }
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{} problem(s): {}",
                problems.len(),
                problems.join("; ")
            )))
        }
    }
}
