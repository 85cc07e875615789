//! Mini-batch training shared by centralized runs and federated clients.
//!
//! The shuffle stream for an epoch is keyed by `(seed, stream_id, epoch)`.
//! Centralized training uses stream 0; client `c` uses stream `c` and counts
//! epochs across rounds, so a lone client 0 follows the centralized
//! trajectory exactly.

use rand::seq::SliceRandom;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::ModelState;
use crate::optim::AdamWState;
use crate::rng::{stream_rng, Stream};

/// `indices` in the shuffled order used for one epoch.
pub fn epoch_order(indices: &[usize], seed: u64, stream_id: u64, epoch: u64) -> Vec<usize> {
    let mut order = indices.to_vec();
    order.shuffle(&mut stream_rng(seed, Stream::Shuffle, stream_id, epoch));
    order
}

/// One pass over `indices` in mini-batches; returns the sample-weighted mean
/// batch loss. A non-finite loss or gradient is reported as divergence of
/// `stream_id`.
#[allow(clippy::too_many_arguments)]
pub fn train_epoch(
    model: &mut ModelState,
    optimizer: &mut AdamWState,
    data: &LabeledDataset,
    indices: &[usize],
    batch_size: usize,
    seed: u64,
    stream_id: u64,
    epoch: u64,
    exec: Exec,
) -> Result<f64> {
    if batch_size == 0 {
        return Err(Error::Validation("batch_size must be positive".into()));
    }
    if indices.is_empty() {
        return Err(Error::Validation("cannot train on an empty index set".into()));
    }
    let order = epoch_order(indices, seed, stream_id, epoch);
    let mut weighted = 0.0;
    for batch in order.chunks(batch_size) {
        let (x, y) = data.batch(batch);
        let (loss, grads) = model.loss_and_grads(&x, &y, exec)?;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                client: stream_id as usize,
                detail: format!("loss became {loss} in epoch {epoch}"),
            });
        }
        optimizer.step(model, &grads).map_err(|e| match e {
            Error::NonFiniteGradient { .. } => Error::Divergence {
                client: stream_id as usize,
                detail: e.to_string(),
            },
            other => other,
        })?;
        weighted += loss * batch.len() as f64;
    }
    Ok(weighted / order.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_dataset;
    use crate::optim::AdamWConfig;
    use crate::wavelet::MotherWavelet;

    #[test]
    fn orders_are_seeded_permutations() {
        let idx: Vec<usize> = (10..40).collect();
        let a = epoch_order(&idx, 1, 0, 0);
        assert_eq!(a, epoch_order(&idx, 1, 0, 0));
        assert_ne!(a, epoch_order(&idx, 1, 0, 1));
        assert_ne!(a, epoch_order(&idx, 1, 1, 0));
        let mut sorted = a.clone();
        sorted.sort();
        assert_eq!(sorted, idx);
    }

    #[test]
    fn diverging_loss_names_the_stream() {
        let data = synth_dataset(20, 3, 2, 1).unwrap();
        let mut model = ModelState::new(&[3, 2], MotherWavelet::dog(), 1).unwrap();
        model.layers_mut()[0].weight.set(0, 0, f64::INFINITY);
        let mut opt = AdamWState::new(AdamWConfig::default(), &model);
        let idx: Vec<usize> = (0..20).collect();
        match train_epoch(&mut model, &mut opt, &data, &idx, 5, 0, 4, 0, Exec::default()) {
            Err(Error::Divergence { client, .. }) => assert_eq!(client, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_empty_work() {
        let data = synth_dataset(20, 3, 2, 1).unwrap();
        let mut model = ModelState::new(&[3, 2], MotherWavelet::dog(), 1).unwrap();
        let mut opt = AdamWState::new(AdamWConfig::default(), &model);
        assert!(train_epoch(&mut model, &mut opt, &data, &[], 5, 0, 0, 0, Exec::default()).is_err());
        assert!(train_epoch(&mut model, &mut opt, &data, &[1], 0, 0, 0, 0, Exec::default()).is_err());
    }
}
