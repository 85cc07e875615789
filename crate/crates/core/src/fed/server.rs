use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, PartitionPlan};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{evaluate, Metrics, ModelState};
use crate::optim::{AdamWConfig, AdamWState};

use super::{aggregate, client_local_train, select_clients, Aggregation, ClientState, ClientUpdate};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    /// The first failing client (lowest id) aborts the round.
    #[default]
    Abort,
    /// Failed clients are left out of the aggregate.
    Drop,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundConfig {
    pub total_rounds: usize,
    pub local_epochs: usize,
    pub client_fraction: f64,
    pub batch_size: usize,
    pub aggregation: Aggregation,
    pub seed: u64,
    /// Keep each client's Adam moments across rounds instead of resetting.
    pub persist_optimizer: bool,
    pub failure_policy: FailurePolicy,
    /// Also evaluate the global model on the full training set each round.
    pub eval_train: bool,
}

impl Default for RoundConfig {
    fn default() -> Self {
        RoundConfig {
            total_rounds: 1,
            local_epochs: 1,
            client_fraction: 1.0,
            batch_size: 64,
            aggregation: Aggregation::Uniform,
            seed: 0,
            persist_optimizer: false,
            failure_policy: FailurePolicy::Abort,
            eval_train: true,
        }
    }
}

impl RoundConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.client_fraction > 0.0 && self.client_fraction <= 1.0) {
            problems.push(format!(
                "client_fraction must lie in (0, 1], got {}",
                self.client_fraction
            ));
        }
        if self.batch_size == 0 {
            problems.push("batch_size must be positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems.join("; ")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundReport {
    /// 1-based round number.
    pub round: usize,
    pub selected: Vec<usize>,
    /// `(client_id, final local epoch loss)` for every aggregated client.
    pub client_losses: Vec<(usize, Option<f64>)>,
    /// Clients whose training failed under [`FailurePolicy::Drop`].
    pub dropped: Vec<usize>,
    pub train: Option<Metrics>,
    pub test: Metrics,
    pub wall_seconds: f64,
}

/// Creates one client per shard, each holding a copy of `initial`.
pub fn build_clients(
    plan: &PartitionPlan,
    train: &LabeledDataset,
    initial: &ModelState,
    optim: AdamWConfig,
) -> Result<Vec<ClientState>> {
    if initial.input_dim() != train.dim() || initial.num_classes() != train.num_classes() {
        return Err(Error::Validation(format!(
            "model {:?} does not fit data with {} features and {} classes",
            initial.architecture(),
            train.dim(),
            train.num_classes()
        )));
    }
    plan.shards()
        .iter()
        .enumerate()
        .map(|(client_id, shard)| {
            if let Some(&bad) = shard.iter().find(|&&i| i >= train.len()) {
                return Err(Error::Validation(format!(
                    "shard {client_id} references sample {bad} of {}",
                    train.len()
                )));
            }
            Ok(ClientState {
                client_id,
                shard: shard.clone(),
                model: initial.clone(),
                optimizer: AdamWState::new(optim, initial),
            })
        })
        .collect()
}

/// One round: select, train selected clients from `global`, aggregate,
/// re-clamp scales, and broadcast the result to every client.
pub fn run_round(
    clients: &mut [ClientState],
    train: &LabeledDataset,
    test: &LabeledDataset,
    global: &[f64],
    cfg: &RoundConfig,
    round_index: usize,
    exec: Exec,
) -> Result<(Vec<f64>, RoundReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let first = clients
        .first()
        .ok_or_else(|| Error::Validation("federation has no clients".into()))?;
    let template_arch = first.model.architecture().to_vec();
    if let Some(c) = clients.iter().find(|c| c.model.architecture() != template_arch) {
        return Err(Error::Validation(format!(
            "client {} has architecture {:?}, expected {template_arch:?}",
            c.client_id,
            c.model.architecture()
        )));
    }
    let selected = select_clients(clients.len(), cfg.client_fraction, round_index, cfg.seed)?;

    let mut chosen: Vec<&mut ClientState> = clients
        .iter_mut()
        .enumerate()
        .filter(|(k, _)| selected.binary_search(k).is_ok())
        .map(|(_, c)| c)
        .collect();
    let results: Vec<Result<ClientUpdate>> = exec.map_items_mut(&mut chosen, |client| {
        client_local_train(
            client,
            train,
            global,
            cfg.local_epochs,
            cfg.batch_size,
            cfg.seed,
            round_index,
            cfg.persist_optimizer,
            exec,
        )
    });
    drop(chosen);

    let mut updates = Vec::with_capacity(results.len());
    let mut dropped = Vec::new();
    for (id, result) in selected.iter().zip(results) {
        match (result, cfg.failure_policy) {
            (Ok(u), _) => updates.push(u),
            (Err(e), FailurePolicy::Abort) => return Err(e),
            (Err(_), FailurePolicy::Drop) => dropped.push(clients[*id].client_id),
        }
    }
    if updates.is_empty() {
        return Err(Error::Protocol(format!(
            "round {}: every selected client failed",
            round_index + 1
        )));
    }

    let averaged = aggregate(&updates, cfg.aggregation)?;
    let mut global_model = clients[0].model.clone();
    global_model.load_flat(&averaged)?;
    global_model.clamp_scales();
    let new_global = global_model.flatten();
    for client in clients.iter_mut() {
        client.model.load_flat(&new_global)?;
    }

    let train_metrics = if cfg.eval_train {
        Some(evaluate(&global_model, train.features(), train.labels(), exec)?)
    } else {
        None
    };
    let test_metrics = evaluate(&global_model, test.features(), test.labels(), exec)?;
    let report = RoundReport {
        round: round_index + 1,
        selected,
        client_losses: updates
            .iter()
            .map(|u| (u.client_id, u.local_train_loss))
            .collect(),
        dropped,
        train: train_metrics,
        test: test_metrics,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((new_global, report))
}

#[derive(Clone, Debug)]
pub struct FederatedRun {
    pub reports: Vec<RoundReport>,
    pub global: ModelState,
}

/// `cfg.total_rounds` rounds starting from `initial`, which every client
/// downloads first.
pub fn run_federated(
    clients: &mut [ClientState],
    train: &LabeledDataset,
    test: &LabeledDataset,
    initial: &ModelState,
    cfg: &RoundConfig,
    exec: Exec,
) -> Result<FederatedRun> {
    cfg.validate()?;
    let mut global = initial.flatten();
    for client in clients.iter_mut() {
        client.model.load_flat(&global)?;
    }
    let mut reports = Vec::with_capacity(cfg.total_rounds);
    for round_index in 0..cfg.total_rounds {
        let (next, report) = run_round(clients, train, test, &global, cfg, round_index, exec)?;
        global = next;
        reports.push(report);
    }
    let mut model = initial.clone();
    model.load_flat(&global)?;
    Ok(FederatedRun {
        reports,
        global: model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{partition_iid, synth_dataset};
    use crate::wavelet::MotherWavelet;

    fn setup(n_clients: usize) -> (LabeledDataset, LabeledDataset, ModelState, Vec<ClientState>) {
        let train = synth_dataset(120, 4, 3, 1).unwrap();
        let test = synth_dataset(30, 4, 3, 2).unwrap();
        let model = ModelState::new(&[4, 5, 3], MotherWavelet::mexican_hat(1.0).unwrap(), 3).unwrap();
        let plan = partition_iid(train.len(), n_clients, 4).unwrap();
        let clients = build_clients(&plan, &train, &model, AdamWConfig::default()).unwrap();
        (train, test, model, clients)
    }

    #[test]
    fn zero_local_epochs_leave_global_unchanged() {
        let (train, test, model, mut clients) = setup(4);
        let cfg = RoundConfig {
            local_epochs: 0,
            ..Default::default()
        };
        let global = model.flatten();
        let (next, report) = run_round(&mut clients, &train, &test, &global, &cfg, 0, Exec::default()).unwrap();
        assert_eq!(next, global);
        assert!(report.client_losses.iter().all(|(_, l)| l.is_none()));
    }

    #[test]
    fn identical_clients_aggregate_to_either_update() {
        let (train, _, model, _) = setup(1);
        let plan = PartitionPlan::from_shards(vec![(0..60).collect()]).unwrap();
        let client = build_clients(&plan, &train, &model, AdamWConfig::default()).unwrap().remove(0);
        // same shard, same shuffle stream: both uploads are identical
        let global = model.flatten();
        let mut updates: Vec<ClientUpdate> = (0..2)
            .map(|_| {
                let mut c = client.clone();
                client_local_train(&mut c, &train, &global, 2, 16, 5, 0, false, Exec::default()).unwrap()
            })
            .collect();
        updates[1].client_id = 1;
        assert_eq!(updates[0].params, updates[1].params);
        assert_eq!(aggregate(&updates, Aggregation::Uniform).unwrap(), updates[0].params);
    }

    #[test]
    fn broadcast_reaches_unselected_clients() {
        let (train, test, model, mut clients) = setup(5);
        let cfg = RoundConfig {
            client_fraction: 0.4,
            seed: 11,
            ..Default::default()
        };
        let (next, report) =
            run_round(&mut clients, &train, &test, &model.flatten(), &cfg, 0, Exec::default()).unwrap();
        assert_eq!(report.selected.len(), 2);
        for c in &clients {
            assert_eq!(c.model.flatten(), next);
            assert!(c.model.layers().iter().all(|l| l.scale.as_slice().iter().all(|s| s.abs() >= 1e-4)));
        }
    }

    #[test]
    fn zero_rounds_return_initial_model() {
        let (train, test, model, mut clients) = setup(3);
        let cfg = RoundConfig {
            total_rounds: 0,
            ..Default::default()
        };
        let run = run_federated(&mut clients, &train, &test, &model, &cfg, Exec::default()).unwrap();
        assert!(run.reports.is_empty());
        assert_eq!(run.global, model);
    }

    #[test]
    fn failure_policies() {
        let (train, test, model, mut clients) = setup(3);
        // client 1 cannot train: its shard points outside the data
        clients[1].shard = vec![];
        let cfg = RoundConfig::default();
        let err = run_round(&mut clients, &train, &test, &model.flatten(), &cfg, 0, Exec::default()).unwrap_err();
        assert!(err.to_string().contains("client 1"), "{err}");

        let cfg = RoundConfig {
            failure_policy: FailurePolicy::Drop,
            ..Default::default()
        };
        let (_, report) = run_round(&mut clients, &train, &test, &model.flatten(), &cfg, 0, Exec::default()).unwrap();
        assert_eq!(report.dropped, vec![1]);
        assert_eq!(report.client_losses.len(), 2);
    }

    #[test]
    fn wrong_length_global_is_a_protocol_error() {
        let (train, test, model, mut clients) = setup(2);
        let short = &model.flatten()[1..];
        let err = run_round(&mut clients, &train, &test, short, &RoundConfig::default(), 0, Exec::default()).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
    }

    #[test]
    fn deterministic_and_exec_independent() {
        let run = |exec| {
            let (train, test, model, mut clients) = setup(4);
            let cfg = RoundConfig {
                total_rounds: 2,
                client_fraction: 0.5,
                seed: 8,
                ..Default::default()
            };
            let r = run_federated(&mut clients, &train, &test, &model, &cfg, exec).unwrap();
            (r.global, r.reports.iter().map(|r| (r.selected.clone(), r.test)).collect::<Vec<_>>())
        };
        let a = run(Exec::Sequential);
        assert_eq!(a, run(Exec::Sequential));
        assert_eq!(a, run(Exec::Parallel));
    }
}
