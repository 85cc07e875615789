use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::ClientUpdate;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// `1/N` over the updates received this round.
    #[default]
    Uniform,
    /// Each update weighted by `num_samples / Σ num_samples`.
    SizeWeighted,
}

/// Elementwise mean of the uploaded parameter vectors.
///
/// Updates are visited in ascending `client_id` order and accumulated as a
/// running mean, `m += (x - m) * w_k / W_k`. The result is therefore
/// independent of input order, returns `v` exactly for copies of `v`, and
/// stays within the per-coordinate range of the inputs.
pub fn aggregate(updates: &[ClientUpdate], mode: Aggregation) -> Result<Vec<f64>> {
    let mut sorted: Vec<&ClientUpdate> = updates.iter().collect();
    sorted.sort_by_key(|u| u.client_id);
    let first = sorted
        .first()
        .ok_or_else(|| Error::Protocol("no client updates to aggregate".into()))?;
    let len = first.params.len();
    for pair in sorted.windows(2) {
        if pair[0].client_id == pair[1].client_id {
            return Err(Error::Protocol(format!(
                "client {} uploaded more than once",
                pair[0].client_id
            )));
        }
    }
    for u in &sorted {
        if u.params.len() != len {
            return Err(Error::Protocol(format!(
                "client {} sent {} parameters, expected {len}",
                u.client_id,
                u.params.len()
            )));
        }
        if u.params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Protocol(format!(
                "client {} sent non-finite parameters",
                u.client_id
            )));
        }
    }

    let weights: Vec<f64> = match mode {
        Aggregation::Uniform => vec![1.0; sorted.len()],
        Aggregation::SizeWeighted => {
            if let Some(u) = sorted.iter().find(|u| u.num_samples == 0) {
                return Err(Error::Protocol(format!(
                    "client {} reported zero samples",
                    u.client_id
                )));
            }
            sorted.iter().map(|u| u.num_samples as f64).collect()
        }
    };

    let mut mean = first.params.clone();
    let mut total = weights[0];
    for (u, &w) in sorted.iter().zip(&weights).skip(1) {
        total += w;
        let frac = w / total;
        for (m, &x) in mean.iter_mut().zip(&u.params) {
            *m += (x - *m) * frac;
        }
    }
    Ok(mean)
}
