//! Multi-trial execution. Trial `i` runs with seed `seed + i`; the dataset
//! selection (subsets, synthetic draw) is keyed by the base seed and shared
//! by all trials.

use std::path::PathBuf;
use std::time::Instant;

use crate::checkpoint;
use crate::data::{load_mnist, partition_dirichlet, partition_iid, synth::synth_dataset_with_noise, LabeledDataset};
use crate::error::{Error, Result};
use crate::fed::{build_clients, run_federated};
use crate::model::{evaluate, Metrics, ModelState};
use crate::optim::AdamWState;
use crate::train::train_epoch;

use super::config::{DatasetKind, ExperimentConfig, Mode, PartitionKind};
use super::trace::{average_trials, write_trace_csv, ExperimentTrace, TraceRow};

#[derive(Clone, Debug)]
pub struct Datasets {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

#[derive(Clone, Debug)]
pub struct TrialResult {
    pub seed: u64,
    pub trace: ExperimentTrace,
    pub model: ModelState,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub trials: Vec<TrialResult>,
    pub averaged: ExperimentTrace,
}

pub fn load_datasets(cfg: &ExperimentConfig) -> Result<Datasets> {
    match cfg.dataset {
        DatasetKind::Mnist => {
            let mnist = load_mnist(&cfg.mnist_dir)?;
            let train = mnist.train.seeded_subset(cfg.train_subset, cfg.seed)?;
            let test = match cfg.test_subset {
                Some(n) => mnist.test.seeded_subset(n, cfg.seed)?,
                None => mnist.test,
            };
            Ok(Datasets { train, test })
        }
        DatasetKind::Synthetic => {
            // one draw, split, so train and test share class centers
            let n = cfg.synth_train + cfg.synth_test;
            let all = synth_dataset_with_noise(n, cfg.synth_dim, cfg.synth_classes, cfg.synth_noise, cfg.seed)?;
            let train: Vec<usize> = (0..cfg.synth_train).collect();
            let test: Vec<usize> = (cfg.synth_train..n).collect();
            Ok(Datasets {
                train: all.subset(&train)?,
                test: all.subset(&test)?,
            })
        }
    }
}

fn row(phase: &str, step: usize, train: Option<Metrics>, test: Metrics, wall: f64) -> TraceRow {
    TraceRow {
        phase: phase.into(),
        step,
        train_accuracy: train.map(|m| m.accuracy),
        test_accuracy: test.accuracy,
        train_loss: train.map(|m| m.mean_loss),
        test_loss: test.mean_loss,
        wall_seconds: wall,
    }
}

/// Runs trial `trial` of a validated configuration on preloaded data.
pub fn run_trial(cfg: &ExperimentConfig, data: &Datasets, trial: usize) -> Result<TrialResult> {
    let seed = cfg.seed.wrapping_add(trial as u64);
    let exec = cfg.execution;
    let wavelet = cfg.mother_wavelet()?;
    let mut model = ModelState::new(&cfg.architecture, wavelet, seed)?;
    let clock = |start: Instant| {
        if cfg.record_wall_time {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    };
    let (train, test) = (&data.train, &data.test);

    let rows = match cfg.mode {
        Mode::Central => {
            let mut optimizer = AdamWState::new(cfg.optimizer(), &model);
            let indices: Vec<usize> = (0..train.len()).collect();
            let mut rows = Vec::with_capacity(cfg.epochs);
            for epoch in 0..cfg.epochs {
                let start = Instant::now();
                train_epoch(
                    &mut model,
                    &mut optimizer,
                    train,
                    &indices,
                    cfg.batch_size,
                    seed,
                    0,
                    epoch as u64,
                    exec,
                )?;
                let train_m = if cfg.eval_train {
                    Some(evaluate(&model, train.features(), train.labels(), exec)?)
                } else {
                    None
                };
                let test_m = evaluate(&model, test.features(), test.labels(), exec)?;
                rows.push(row("epoch", epoch + 1, train_m, test_m, clock(start)));
            }
            rows
        }
        Mode::Federated => {
            let plan = match cfg.partition {
                PartitionKind::Iid => partition_iid(train.len(), cfg.clients, seed)?,
                PartitionKind::Dirichlet => {
                    partition_dirichlet(train.labels(), cfg.clients, cfg.dirichlet_alpha, seed)?
                }
            };
            let mut clients = build_clients(&plan, train, &model, cfg.optimizer())?;
            let run = run_federated(&mut clients, train, test, &model, &cfg.round_config(seed), exec)?;
            model = run.global;
            run.reports
                .into_iter()
                .map(|r| {
                    let wall = if cfg.record_wall_time { r.wall_seconds } else { 0.0 };
                    row("round", r.round, r.train, r.test, wall)
                })
                .collect()
        }
    };
    Ok(TrialResult {
        seed,
        trace: ExperimentTrace { rows },
        model,
    })
}

pub fn run_experiment_with_data(cfg: &ExperimentConfig, data: &Datasets) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let (dim, classes) = (data.train.dim(), data.train.num_classes());
    if cfg.architecture.first() != Some(&dim) || cfg.architecture.last() != Some(&classes) {
        return Err(Error::Config(format!(
            "architecture {:?} does not fit data with {dim} features and {classes} classes",
            cfg.architecture
        )));
    }
    let trials = (0..cfg.trials)
        .map(|t| run_trial(cfg, data, t))
        .collect::<Result<Vec<_>>>()?;
    let traces: Vec<ExperimentTrace> = trials.iter().map(|t| t.trace.clone()).collect();
    let averaged = average_trials(&traces)?;
    Ok(ExperimentOutcome { trials, averaged })
}

/// Writes `trial_<i>.csv`, `averaged.csv`, `config.toml` and, if enabled,
/// `trial_<i>.ckpt` into the output directory. Returns the written paths.
pub fn write_outcome(cfg: &ExperimentConfig, outcome: &ExperimentOutcome) -> Result<Vec<PathBuf>> {
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::path(dir, e))?;
    let mut written = Vec::new();
    for (i, trial) in outcome.trials.iter().enumerate() {
        let path = dir.join(format!("trial_{i}.csv"));
        write_trace_csv(&trial.trace, &path)?;
        written.push(path);
        if cfg.save_checkpoint {
            let path = dir.join(format!("trial_{i}.ckpt"));
            checkpoint::save(&trial.model, &path)?;
            written.push(path);
        }
    }
    let path = dir.join("averaged.csv");
    write_trace_csv(&outcome.averaged, &path)?;
    written.push(path);
    let path = dir.join("config.toml");
    std::fs::write(&path, cfg.to_toml_string()).map_err(|e| Error::path(&path, e))?;
    written.push(path);
    Ok(written)
}

/// Validates, loads data, runs every trial and writes the outputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let data = load_datasets(cfg)?;
    let outcome = run_experiment_with_data(cfg, &data)?;
    write_outcome(cfg, &outcome)?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::trace::read_trace_csv;

    fn synth_cfg(mode: Mode) -> ExperimentConfig {
        ExperimentConfig {
            mode,
            dataset: DatasetKind::Synthetic,
            synth_train: 120,
            synth_test: 60,
            synth_dim: 4,
            synth_classes: 3,
            architecture: vec![4, 6, 3],
            epochs: 3,
            rounds: 3,
            clients: 3,
            batch_size: 16,
            lr: 0.01,
            trials: 2,
            seed: 5,
            record_wall_time: false,
            ..Default::default()
        }
    }

    #[test]
    fn single_trial_average_is_the_trace() {
        let cfg = ExperimentConfig {
            trials: 1,
            ..synth_cfg(Mode::Central)
        };
        let data = load_datasets(&cfg).unwrap();
        let out = run_experiment_with_data(&cfg, &data).unwrap();
        assert_eq!(out.averaged, out.trials[0].trace);
        assert_eq!(out.averaged.rows.len(), 3);
        assert!(out.averaged.rows.iter().all(|r| r.phase == "epoch" && r.wall_seconds == 0.0));
    }

    #[test]
    fn trials_use_consecutive_seeds() {
        let cfg = synth_cfg(Mode::Federated);
        let data = load_datasets(&cfg).unwrap();
        let out = run_experiment_with_data(&cfg, &data).unwrap();
        assert_eq!(out.trials.iter().map(|t| t.seed).collect::<Vec<_>>(), vec![5, 6]);
        let solo = run_trial(&ExperimentConfig { seed: 6, trials: 1, ..cfg.clone() }, &data, 0).unwrap();
        assert_eq!(solo.trace, out.trials[1].trace);
        assert_eq!(solo.model, out.trials[1].model);
        assert_eq!(out.averaged.rows.iter().map(|r| r.step).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn writes_outputs_and_rerun_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            output_dir: dir.path().join("a"),
            ..synth_cfg(Mode::Federated)
        };
        run_experiment(&cfg).unwrap();
        let again = ExperimentConfig {
            output_dir: dir.path().join("b"),
            ..cfg.clone()
        };
        run_experiment(&again).unwrap();
        for name in ["trial_0.csv", "trial_1.csv", "averaged.csv", "trial_0.ckpt"] {
            let a = std::fs::read(cfg.output_dir.join(name)).unwrap();
            let b = std::fs::read(again.output_dir.join(name)).unwrap();
            assert_eq!(a, b, "{name}");
        }
        let avg = read_trace_csv(&cfg.output_dir.join("averaged.csv")).unwrap();
        assert_eq!(avg.rows.len(), 3);
        let written = ExperimentConfig::from_toml_str(
            &std::fs::read_to_string(cfg.output_dir.join("config.toml")).unwrap(),
        )
        .unwrap();
        assert_eq!(written, cfg);
    }

    #[test]
    fn missing_mnist_is_a_path_error() {
        let cfg = ExperimentConfig {
            mnist_dir: PathBuf::from("/nonexistent/mnist"),
            ..Default::default()
        };
        let err = load_datasets(&cfg).unwrap_err();
        assert!(matches!(err, Error::Path { .. }), "{err}");
    }
}
