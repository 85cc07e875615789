//! Experiment flags. Each flag is named after the config key it overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use fedkan::experiment::ExperimentConfig;
use fedkan::{Error, Result};
use toml::{Table, Value};

#[derive(Args, Debug, Default, Clone)]
pub struct ConfigArgs {
    /// TOML config file; flags given on the command line override it
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// mexican_hat, morlet, dog or shannon
    #[arg(long)]
    pub wavelet: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub omega0: Option<f64>,
    #[arg(long)]
    pub window_half_width: Option<f64>,
    /// Layer widths, e.g. 784,64,10
    #[arg(long, value_delimiter = ',')]
    pub architecture: Option<Vec<usize>>,

    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,

    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub local_epochs: Option<usize>,
    #[arg(long)]
    pub clients: Option<usize>,
    #[arg(long)]
    pub client_fraction: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// uniform or size_weighted
    #[arg(long)]
    pub aggregation: Option<String>,
    /// iid or dirichlet
    #[arg(long)]
    pub partition: Option<String>,
    #[arg(long)]
    pub dirichlet_alpha: Option<f64>,
    #[arg(long)]
    pub persist_optimizer: Option<bool>,
    /// abort or drop
    #[arg(long)]
    pub failure_policy: Option<String>,

    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,

    /// mnist or synthetic
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub mnist_dir: Option<PathBuf>,
    #[arg(long)]
    pub train_subset: Option<usize>,
    #[arg(long)]
    pub test_subset: Option<usize>,
    #[arg(long)]
    pub synth_train: Option<usize>,
    #[arg(long)]
    pub synth_test: Option<usize>,
    #[arg(long)]
    pub synth_dim: Option<usize>,
    #[arg(long)]
    pub synth_classes: Option<usize>,
    #[arg(long)]
    pub synth_noise: Option<f64>,

    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub eval_train: Option<bool>,
    #[arg(long)]
    pub record_wall_time: Option<bool>,
    #[arg(long)]
    pub save_checkpoint: Option<bool>,
    /// parallel or sequential
    #[arg(long)]
    pub execution: Option<String>,
}

fn int(key: &str, v: u64) -> Result<Value> {
    i64::try_from(v)
        .map(Value::Integer)
        .map_err(|_| Error::Config(format!("{key} = {v} is too large")))
}

fn path(p: &Path) -> Value {
    Value::String(p.to_string_lossy().into_owned())
}

pub fn read_config_table(file: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", file.display())))?;
    text.parse::<Table>()
        .map_err(|e| Error::Config(format!("{}: {e}", file.display())))
}

impl ConfigArgs {
    /// Command-line values as a TOML table keyed by config key.
    pub fn overrides(&self) -> Result<Table> {
        let mut t = Table::new();
        let mut put = |key: &str, v: Value| {
            t.insert(key.to_string(), v);
        };
        macro_rules! floats {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field { put(stringify!($field), Value::Float(v)); }
            )*};
        }
        macro_rules! ints {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field { put(stringify!($field), int(stringify!($field), v as u64)?); }
            )*};
        }
        macro_rules! strings {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field { put(stringify!($field), Value::String(v.clone())); }
            )*};
        }
        macro_rules! bools {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field { put(stringify!($field), Value::Boolean(v)); }
            )*};
        }
        floats!(sigma, omega0, window_half_width, lr, weight_decay, beta1, beta2, epsilon, client_fraction, dirichlet_alpha, synth_noise);
        ints!(epochs, rounds, local_epochs, clients, batch_size, trials, seed, train_subset, test_subset, synth_train, synth_test, synth_dim, synth_classes);
        strings!(wavelet, aggregation, partition, failure_policy, dataset, execution);
        bools!(persist_optimizer, eval_train, record_wall_time, save_checkpoint);
        if let Some(widths) = &self.architecture {
            let values = widths
                .iter()
                .map(|&w| int("architecture", w as u64))
                .collect::<Result<Vec<_>>>()?;
            put("architecture", Value::Array(values));
        }
        if let Some(p) = &self.mnist_dir {
            put("mnist_dir", path(p));
        }
        if let Some(p) = &self.output_dir {
            put("output_dir", path(p));
        }
        Ok(t)
    }

    /// File values, then flags, then `extra` (e.g. the mode implied by the
    /// subcommand). The result is validated.
    pub fn resolve(&self, extra: &[(&str, Value)]) -> Result<ExperimentConfig> {
        let mut table = match &self.config {
            Some(file) => read_config_table(file)?,
            None => Table::new(),
        };
        table.extend(self.overrides()?);
        for (k, v) in extra {
            table.insert(k.to_string(), v.clone());
        }
        let cfg = ExperimentConfig::from_toml_table(table)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
