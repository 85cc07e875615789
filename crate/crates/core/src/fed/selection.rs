use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Uniform sample without replacement of `max(1, round(fraction * n))`
/// client ids, sorted ascending. Deterministic in `(seed, round_index)`.
pub fn select_clients(
    n_clients: usize,
    fraction: f64,
    round_index: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if n_clients == 0 {
        return Err(Error::Validation("no clients to select from".into()));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Validation(format!(
            "client_fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let count = ((fraction * n_clients as f64).round() as usize).clamp(1, n_clients);
    if count == n_clients {
        return Ok((0..n_clients).collect());
    }
    let mut rng = stream_rng(seed, Stream::Select, round_index as u64, 0);
    let mut ids = index::sample(&mut rng, n_clients, count).into_vec();
    ids.sort_unstable();
    Ok(ids)
}
