use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::ModelState;
use crate::optim::AdamWState;
use crate::train::train_epoch;

/// A simulated client: its shard of the shared training set, its local copy
/// of the model and its optimizer state.
#[derive(Clone, Debug)]
pub struct ClientState {
    pub client_id: usize,
    pub shard: Vec<usize>,
    pub model: ModelState,
    pub optimizer: AdamWState,
}

impl ClientState {
    pub fn num_samples(&self) -> usize {
        self.shard.len()
    }
}

/// What a client uploads after local training: the full parameter vector in
/// canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct ClientUpdate {
    pub client_id: usize,
    pub num_samples: usize,
    pub params: Vec<f64>,
    /// Mean loss of the final local epoch; `None` when no epoch ran.
    pub local_train_loss: Option<f64>,
}

/// Loads `global_params`, runs `local_epochs` epochs of mini-batch AdamW on
/// the client's shard, and returns the resulting parameters.
///
/// Epochs are numbered across rounds (`round_index * local_epochs + k`) when
/// keying the shuffle stream. Unless `persist_optimizer` is set, the
/// optimizer starts fresh.
#[allow(clippy::too_many_arguments)]
pub fn client_local_train(
    client: &mut ClientState,
    data: &LabeledDataset,
    global_params: &[f64],
    local_epochs: usize,
    batch_size: usize,
    seed: u64,
    round_index: usize,
    persist_optimizer: bool,
    exec: Exec,
) -> Result<ClientUpdate> {
    if global_params.len() != client.model.num_params() {
        return Err(Error::Protocol(format!(
            "client {} received {} parameters, its model has {}",
            client.client_id,
            global_params.len(),
            client.model.num_params()
        )));
    }
    if client.shard.is_empty() {
        return Err(Error::Validation(format!(
            "client {} has an empty shard",
            client.client_id
        )));
    }
    client.model.load_flat(global_params)?;
    if !persist_optimizer {
        client.optimizer.reset();
    }
    let mut last_loss = None;
    for k in 0..local_epochs {
        let epoch = (round_index * local_epochs + k) as u64;
        let loss = train_epoch(
            &mut client.model,
            &mut client.optimizer,
            data,
            &client.shard,
            batch_size,
            seed,
            client.client_id as u64,
            epoch,
            exec,
        )?;
        last_loss = Some(loss);
    }
    Ok(ClientUpdate {
        client_id: client.client_id,
        num_samples: client.num_samples(),
        params: client.model.flatten(),
        local_train_loss: last_loss,
    })
}
