//! Assignment of sample indices to client shards.
//!
//! Shards are stored sorted ascending; local training reshuffles each epoch,
//! so in-shard order carries no meaning. A single-client IID plan is exactly
//! `0..n`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionPlan {
    shards: Vec<Vec<usize>>,
}

impl PartitionPlan {
    /// Wraps explicit shards after checking they are nonempty and disjoint.
    pub fn from_shards(mut shards: Vec<Vec<usize>>) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::Validation("partition needs at least one shard".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for (k, shard) in shards.iter_mut().enumerate() {
            if shard.is_empty() {
                return Err(Error::Validation(format!("shard {k} is empty")));
            }
            shard.sort_unstable();
            if let Some(dup) = shard.iter().find(|&&i| !seen.insert(i)) {
                return Err(Error::Validation(format!(
                    "index {dup} assigned more than once"
                )));
            }
        }
        Ok(PartitionPlan { shards })
    }

    pub fn shards(&self) -> &[Vec<usize>] {
        &self.shards
    }

    pub fn num_clients(&self) -> usize {
        self.shards.len()
    }

    /// Sorted union of all shards.
    pub fn covered(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.shards.concat();
        all.sort_unstable();
        all
    }

    /// Per-shard label counts, `[client][class]`.
    pub fn class_histogram(&self, labels: &[usize], num_classes: usize) -> Vec<Vec<usize>> {
        self.shards
            .iter()
            .map(|shard| {
                let mut h = vec![0; num_classes];
                for &i in shard {
                    h[labels[i]] += 1;
                }
                h
            })
            .collect()
    }
}

/// Shuffles `0..n` and cuts it into `n_clients` contiguous runs whose sizes
/// differ by at most one (the first `n % n_clients` shards get the extra one).
pub fn partition_iid(n: usize, n_clients: usize, seed: u64) -> Result<PartitionPlan> {
    if n_clients == 0 || n < n_clients {
        return Err(Error::Validation(format!(
            "cannot split {n} samples across {n_clients} clients"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, Stream::Partition, 0, n as u64));
    let (base, extra) = (n / n_clients, n % n_clients);
    let mut shards = Vec::with_capacity(n_clients);
    let mut start = 0;
    for k in 0..n_clients {
        let len = base + usize::from(k < extra);
        let mut shard = order[start..start + len].to_vec();
        shard.sort_unstable();
        shards.push(shard);
        start += len;
    }
    Ok(PartitionPlan { shards })
}

/// Label-skewed split: for each class, client proportions are drawn from a
/// symmetric Dirichlet(`alpha`) and that class's (shuffled) indices are cut
/// accordingly. Empty shards are then filled by moving one index at a time
/// from the largest shard.
pub fn partition_dirichlet(
    labels: &[usize],
    n_clients: usize,
    alpha: f64,
    seed: u64,
) -> Result<PartitionPlan> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Validation(format!(
            "dirichlet alpha must be positive, got {alpha}"
        )));
    }
    if n_clients == 0 || labels.len() < n_clients {
        return Err(Error::Validation(format!(
            "cannot split {} samples across {n_clients} clients",
            labels.len()
        )));
    }
    let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let gamma = Gamma::new(alpha, 1.0)
        .map_err(|e| Error::Validation(format!("dirichlet alpha {alpha}: {e}")))?;
    let mut shards: Vec<Vec<usize>> = vec![Vec::new(); n_clients];

    for class in 0..num_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        let mut rng = stream_rng(seed, Stream::Partition, 1, class as u64);
        members.shuffle(&mut rng);
        let mut weights: Vec<f64> = (0..n_clients).map(|_| gamma.sample(&mut rng)).collect();
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            // every draw underflowed; the whole class goes to one client
            weights.iter_mut().for_each(|w| *w = 0.0);
            weights[rng.random_range(0..n_clients)] = 1.0;
        }
        let total: f64 = weights.iter().sum();
        let n_c = members.len();
        let mut cumulative = 0.0;
        let mut start = 0;
        for (k, w) in weights.iter().enumerate() {
            cumulative += w / total;
            let end = if k + 1 == n_clients {
                n_c
            } else {
                ((cumulative * n_c as f64).round() as usize).clamp(start, n_c)
            };
            shards[k].extend_from_slice(&members[start..end]);
            start = end;
        }
    }

    while let Some(empty) = shards.iter().position(Vec::is_empty) {
        let donor = (0..n_clients)
            .max_by(|&a, &b| shards[a].len().cmp(&shards[b].len()).then(b.cmp(&a)))
            .expect("at least one client");
        let moved = shards[donor].pop().expect("donor holds at least two samples");
        shards[empty].push(moved);
    }
    for shard in &mut shards {
        shard.sort_unstable();
    }
    Ok(PartitionPlan { shards })
}
