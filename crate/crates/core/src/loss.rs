use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Mean softmax cross-entropy over the batch and its gradient with respect
/// to the logits, `(softmax - one_hot) / batch`.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    let (batch, classes) = logits.shape();
    if labels.len() != batch {
        return Err(Error::Validation(format!(
            "{} labels for a batch of {batch}",
            labels.len()
        )));
    }
    if batch == 0 {
        return Err(Error::Validation("empty batch".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::Validation(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }
    let inv_batch = 1.0 / batch as f64;
    let mut grad = Matrix::zeros(batch, classes);
    let mut total = 0.0;
    for (b, &label) in labels.iter().enumerate() {
        let row = logits.row(b);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let g = grad.row_mut(b);
        let mut denom = 0.0;
        for (gc, &z) in g.iter_mut().zip(row) {
            *gc = (z - max).exp();
            denom += *gc;
        }
        total += denom.ln() - (row[label] - max);
        for gc in g.iter_mut() {
            *gc = *gc / denom * inv_batch;
        }
        g[label] -= inv_batch;
    }
    Ok((total * inv_batch, grad))
}
