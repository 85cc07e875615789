//! Stacked Wav-KAN layers.
//!
//! Layers compose directly: each edge already applies its wavelet, so there
//! is no extra nonlinearity between layers.
//!
//! The canonical flat parameter layout (used for client uploads, aggregation
//! and checkpoints) is: layers in order; within a layer `weight`, then
//! `scale`, then `translation`; each tensor row-major `[out_dim x in_dim]`.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::layer::{
    init_layer, layer_backward_exec, layer_forward_exec, layer_predict, ForwardCache, LayerGrads,
    LayerParams,
};
use crate::loss::softmax_cross_entropy;
use crate::matrix::Matrix;
use crate::rng::{derive_seed, Stream};
use crate::wavelet::MotherWavelet;

/// Rows per forward chunk in [`evaluate`].
const EVAL_CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelState {
    layers: Vec<LayerParams>,
    architecture: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub mean_loss: f64,
}

impl ModelState {
    /// Freshly initialized model; layer `k` draws its weights from a stream
    /// derived from `(seed, k)`.
    pub fn new(architecture: &[usize], wavelet: MotherWavelet, seed: u64) -> Result<Self> {
        if architecture.len() < 2 {
            return Err(Error::Validation(format!(
                "architecture needs at least two widths, got {architecture:?}"
            )));
        }
        let layers = architecture
            .windows(2)
            .enumerate()
            .map(|(k, w)| init_layer(w[0], w[1], wavelet, derive_seed(seed, Stream::Init, k as u64, 0)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelState {
            layers,
            architecture: architecture.to_vec(),
        })
    }

    pub fn from_layers(layers: Vec<LayerParams>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Validation("model needs at least one layer".into()))?;
        let mut architecture = vec![first.in_dim()];
        for (k, layer) in layers.iter().enumerate() {
            layer.validate()?;
            let prev = *architecture.last().expect("nonempty");
            if layer.in_dim() != prev {
                return Err(Error::Validation(format!(
                    "layer {k} expects width {}, previous layer produces {prev}",
                    layer.in_dim()
                )));
            }
            architecture.push(layer.out_dim());
        }
        Ok(ModelState {
            layers,
            architecture,
        })
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    pub fn architecture(&self) -> &[usize] {
        &self.architecture
    }

    pub fn input_dim(&self) -> usize {
        self.architecture[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.architecture.last().expect("validated")
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(LayerParams::num_params).sum()
    }

    /// Parameters in canonical order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            for (_, m) in layer.tensors() {
                out.extend_from_slice(m.as_slice());
            }
        }
        out
    }

    /// Overwrites every parameter from a canonical flat vector.
    pub fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Validation(format!(
                "parameter vector has {} entries, model has {}",
                flat.len(),
                self.num_params()
            )));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            for m in layer.tensors_mut() {
                let n = m.as_slice().len();
                m.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
                offset += n;
            }
        }
        Ok(())
    }

    pub fn clamp_scales(&mut self) {
        self.layers.iter_mut().for_each(LayerParams::clamp_scales);
    }

    fn check_width(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::Validation(format!(
                "input width {} does not match model input {}",
                x.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, Vec<ForwardCache>)> {
        self.forward_exec(x, Exec::default())
    }

    pub fn forward_exec(&self, x: &Matrix, exec: Exec) -> Result<(Matrix, Vec<ForwardCache>)> {
        self.check_width(x)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            let (y, cache) = layer_forward_exec(layer, &h, exec)?;
            caches.push(cache);
            h = y;
        }
        Ok((h, caches))
    }

    /// Logits without caches.
    pub fn predict(&self, x: &Matrix, exec: Exec) -> Result<Matrix> {
        self.check_width(x)?;
        let mut h = layer_predict(&self.layers[0], x, exec)?;
        for layer in &self.layers[1..] {
            h = layer_predict(layer, &h, exec)?;
        }
        Ok(h)
    }

    /// Chains the layer backward passes; returns per-layer gradients.
    pub fn backward(
        &self,
        caches: Vec<ForwardCache>,
        grad_logits: &Matrix,
        exec: Exec,
    ) -> Result<Vec<LayerGrads>> {
        self.backward_with_input_grad(caches, grad_logits, false, exec)
            .map(|(g, _)| g)
    }

    pub fn backward_with_input_grad(
        &self,
        caches: Vec<ForwardCache>,
        grad_logits: &Matrix,
        want_input_grad: bool,
        exec: Exec,
    ) -> Result<(Vec<LayerGrads>, Option<Matrix>)> {
        if caches.len() != self.layers.len() {
            return Err(Error::Validation(format!(
                "{} caches for {} layers",
                caches.len(),
                self.layers.len()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = grad_logits.clone();
        let mut input_grad = None;
        for (k, (layer, cache)) in self.layers.iter().zip(caches).enumerate().rev() {
            let need_x = k > 0 || want_input_grad;
            let (g, gx) = layer_backward_exec(layer, cache, &upstream, need_x, exec)?;
            grads.push(g);
            match gx {
                Some(gx) if k > 0 => upstream = gx,
                gx => input_grad = gx,
            }
        }
        grads.reverse();
        Ok((grads, input_grad))
    }

    /// Mean cross-entropy on a batch and its parameter gradients.
    pub fn loss_and_grads(
        &self,
        x: &Matrix,
        labels: &[usize],
        exec: Exec,
    ) -> Result<(f64, Vec<LayerGrads>)> {
        let (logits, caches) = self.forward_exec(x, exec)?;
        let (loss, grad) = softmax_cross_entropy(&logits, labels)?;
        let grads = self.backward(caches, &grad, exec)?;
        Ok((loss, grads))
    }
}

/// Gradients in canonical flat order.
pub fn flatten_grads(grads: &[LayerGrads]) -> Vec<f64> {
    grads
        .iter()
        .flat_map(|g| g.tensors().into_iter().flat_map(|(_, m)| m.as_slice().iter().copied()))
        .collect()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Accuracy and mean cross-entropy over a whole dataset.
pub fn evaluate(model: &ModelState, features: &Matrix, labels: &[usize], exec: Exec) -> Result<Metrics> {
    let n = features.rows();
    if n == 0 || labels.is_empty() {
        return Err(Error::Validation("cannot evaluate on an empty dataset".into()));
    }
    if labels.len() != n {
        return Err(Error::Validation(format!(
            "{} labels for {n} samples",
            labels.len()
        )));
    }
    let mut correct = 0usize;
    let mut loss_sum = 0.0;
    for start in (0..n).step_by(EVAL_CHUNK) {
        let idx: Vec<usize> = (start..(start + EVAL_CHUNK).min(n)).collect();
        let x = features.select_rows(&idx);
        let y = &labels[start..start + idx.len()];
        let logits = model.predict(&x, exec)?;
        let (loss, _) = softmax_cross_entropy(&logits, y)?;
        loss_sum += loss * idx.len() as f64;
        correct += (0..idx.len())
            .filter(|&b| argmax(logits.row(b)) == y[b])
            .count();
    }
    Ok(Metrics {
        accuracy: correct as f64 / n as f64,
        mean_loss: loss_sum / n as f64,
    })
}
