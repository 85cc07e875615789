//! One Wav-KAN layer: every edge `(j, i)` computes
//! `weight[j,i] * psi((x_i - translation[j,i]) / scale[j,i])` and output `j`
//! sums its incoming edges. There is no bias and no residual path.
//!
//! Work is split by output neuron: each task owns one row of every parameter
//! tensor and one `[batch x in_dim]` slab of the argument cache, and sums over
//! the batch in ascending order. Input gradients are then reduced over output
//! neurons in ascending order, one task per batch row.

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::matrix::Matrix;
use crate::rng::{stream_rng, Stream};
use crate::wavelet::{Activation, MotherWavelet};
use crate::with_activation;

/// Smallest admissible |scale|.
pub const SCALE_MIN: f64 = 1e-4;

/// Per-edge parameters of one layer, each `[out_dim x in_dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub weight: Matrix,
    pub scale: Matrix,
    pub translation: Matrix,
    pub wavelet: MotherWavelet,
}

/// Gradients (or any other tensor triple) shaped like [`LayerParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads {
    pub weight: Matrix,
    pub scale: Matrix,
    pub translation: Matrix,
}

impl LayerGrads {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        LayerGrads {
            weight: Matrix::zeros(out_dim, in_dim),
            scale: Matrix::zeros(out_dim, in_dim),
            translation: Matrix::zeros(out_dim, in_dim),
        }
    }

    pub fn tensors(&self) -> [(&'static str, &Matrix); 3] {
        [
            ("weight", &self.weight),
            ("scale", &self.scale),
            ("translation", &self.translation),
        ]
    }
}

/// Values saved by [`layer_forward`] for [`layer_backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub input: Matrix,
    /// `u = (x - translation) / scale`, laid out `[out_dim][batch][in_dim]`.
    pub args: Vec<f64>,
    pub out_dim: usize,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.input.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.input.cols()
    }

    /// `u` for output `j`, sample `b`, input `i`.
    pub fn arg(&self, j: usize, b: usize, i: usize) -> f64 {
        self.args[(j * self.batch() + b) * self.in_dim() + i]
    }
}

impl LayerParams {
    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn num_params(&self) -> usize {
        3 * self.out_dim() * self.in_dim()
    }

    pub fn tensors(&self) -> [(&'static str, &Matrix); 3] {
        [
            ("weight", &self.weight),
            ("scale", &self.scale),
            ("translation", &self.translation),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Matrix; 3] {
        [&mut self.weight, &mut self.scale, &mut self.translation]
    }

    /// Pushes every scale entry away from zero to at least [`SCALE_MIN`] in
    /// magnitude, keeping its sign (zero goes positive).
    pub fn clamp_scales(&mut self) {
        clamp_scales(self.scale.as_mut_slice());
    }

    pub fn validate(&self) -> Result<()> {
        let shape = self.weight.shape();
        if self.scale.shape() != shape || self.translation.shape() != shape {
            return Err(Error::Validation(format!(
                "parameter shapes differ: weight {:?}, scale {:?}, translation {:?}",
                shape,
                self.scale.shape(),
                self.translation.shape()
            )));
        }
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::Validation("layer dimensions must be positive".into()));
        }
        for (name, m) in self.tensors() {
            if !m.all_finite() {
                return Err(Error::Validation(format!("non-finite {name} entry")));
            }
        }
        if self.scale.as_slice().iter().any(|s| s.abs() < SCALE_MIN) {
            return Err(Error::Validation(format!(
                "scale entries must satisfy |s| >= {SCALE_MIN}"
            )));
        }
        Ok(())
    }
}

pub fn clamp_scales(scales: &mut [f64]) {
    for s in scales {
        if s.abs() < SCALE_MIN {
            *s = if *s < 0.0 { -SCALE_MIN } else { SCALE_MIN };
        }
    }
}

/// Weights uniform in `±1/√in_dim`, unit scales, zero translations.
pub fn init_layer(
    in_dim: usize,
    out_dim: usize,
    wavelet: MotherWavelet,
    seed: u64,
) -> Result<LayerParams> {
    if in_dim == 0 || out_dim == 0 {
        return Err(Error::Validation(format!(
            "layer dimensions must be positive, got {in_dim} -> {out_dim}"
        )));
    }
    let bound = 1.0 / (in_dim as f64).sqrt();
    let mut rng = stream_rng(seed, Stream::Init, in_dim as u64, out_dim as u64);
    let weights = (0..in_dim * out_dim)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    Ok(LayerParams {
        weight: Matrix::from_vec(out_dim, in_dim, weights)?,
        scale: Matrix::filled(out_dim, in_dim, 1.0),
        translation: Matrix::zeros(out_dim, in_dim),
        wavelet,
    })
}

fn check_input(params: &LayerParams, x: &Matrix) -> Result<()> {
    if x.cols() != params.in_dim() {
        return Err(Error::Validation(format!(
            "input width {} does not match layer in_dim {}",
            x.cols(),
            params.in_dim()
        )));
    }
    if x.rows() == 0 {
        return Err(Error::Validation("empty batch".into()));
    }
    Ok(())
}

/// Output of one edge sum for sample `x` into neuron `j`. Shared by the cached
/// and cache-free passes so both produce identical bits.
#[inline(always)]
fn neuron_sum<A: Activation + ?Sized>(
    act: &A,
    w: &[f64],
    s: &[f64],
    t: &[f64],
    x: &[f64],
    mut store: impl FnMut(usize, f64),
) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        let u = (x[i] - t[i]) / s[i];
        store(i, u);
        acc += w[i] * act.eval(u);
    }
    acc
}

pub(crate) fn forward_cached_with<A: Activation + ?Sized>(
    act: &A,
    params: &LayerParams,
    x: &Matrix,
    exec: Exec,
) -> (Matrix, ForwardCache) {
    let (batch, in_dim, out_dim) = (x.rows(), x.cols(), params.out_dim());
    let mut args = vec![0.0; out_dim * batch * in_dim];
    let columns = exec.map_chunks_mut(&mut args, batch * in_dim, |j, slab| {
        let (w, s, t) = (
            params.weight.row(j),
            params.scale.row(j),
            params.translation.row(j),
        );
        (0..batch)
            .map(|b| {
                let dst = &mut slab[b * in_dim..(b + 1) * in_dim];
                neuron_sum(act, w, s, t, x.row(b), |i, u| dst[i] = u)
            })
            .collect::<Vec<f64>>()
    });
    let mut y = Matrix::zeros(batch, out_dim);
    for (j, col) in columns.iter().enumerate() {
        for (b, &v) in col.iter().enumerate() {
            y.set(b, j, v);
        }
    }
    let cache = ForwardCache {
        input: x.clone(),
        args,
        out_dim,
    };
    (y, cache)
}

pub(crate) fn forward_with<A: Activation + ?Sized>(
    act: &A,
    params: &LayerParams,
    x: &Matrix,
    exec: Exec,
) -> Matrix {
    let (batch, out_dim) = (x.rows(), params.out_dim());
    let mut y = Matrix::zeros(batch, out_dim);
    exec.map_chunks_mut(y.as_mut_slice(), out_dim, |b, out| {
        let xb = x.row(b);
        for (j, o) in out.iter_mut().enumerate() {
            *o = neuron_sum(
                act,
                params.weight.row(j),
                params.scale.row(j),
                params.translation.row(j),
                xb,
                |_, _| {},
            );
        }
    });
    y
}

pub(crate) fn backward_with<A: Activation + ?Sized>(
    act: &A,
    params: &LayerParams,
    cache: ForwardCache,
    grad_y: &Matrix,
    want_grad_x: bool,
    exec: Exec,
) -> Result<(LayerGrads, Option<Matrix>)> {
    let (batch, in_dim, out_dim) = (cache.batch(), cache.in_dim(), cache.out_dim);
    if out_dim != params.out_dim()
        || in_dim != params.in_dim()
        || cache.args.len() != out_dim * batch * in_dim
    {
        return Err(Error::Validation(
            "forward cache does not belong to this layer".into(),
        ));
    }
    if grad_y.shape() != (batch, out_dim) {
        return Err(Error::Validation(format!(
            "upstream gradient shape {:?} does not match ({batch}, {out_dim})",
            grad_y.shape()
        )));
    }

    // The argument slabs are overwritten in place with the per-edge input
    // gradient contributions.
    let mut slabs = cache.args;
    let rows = exec.map_chunks_mut(&mut slabs, batch * in_dim, |j, slab| {
        let (w, s) = (params.weight.row(j), params.scale.row(j));
        let mut gw = vec![0.0; in_dim];
        let mut gs = vec![0.0; in_dim];
        let mut gt = vec![0.0; in_dim];
        for b in 0..batch {
            let gy = grad_y.get(b, j);
            let slab_b = &mut slab[b * in_dim..(b + 1) * in_dim];
            for i in 0..in_dim {
                let u = slab_b[i];
                let (psi, dpsi) = act.eval_with_deriv(u);
                let common = gy * w[i] * dpsi / s[i];
                gw[i] += gy * psi;
                gt[i] -= common;
                gs[i] -= common * u;
                slab_b[i] = common;
            }
        }
        (gw, gs, gt)
    });

    let mut grads = LayerGrads::zeros(out_dim, in_dim);
    for (j, (gw, gs, gt)) in rows.into_iter().enumerate() {
        grads.weight.row_mut(j).copy_from_slice(&gw);
        grads.scale.row_mut(j).copy_from_slice(&gs);
        grads.translation.row_mut(j).copy_from_slice(&gt);
    }

    let grad_x = want_grad_x.then(|| {
        let mut gx = Matrix::zeros(batch, in_dim);
        exec.map_chunks_mut(gx.as_mut_slice(), in_dim, |b, dst| {
            for j in 0..out_dim {
                let src = &slabs[(j * batch + b) * in_dim..(j * batch + b + 1) * in_dim];
                for (d, &c) in dst.iter_mut().zip(src) {
                    *d += c;
                }
            }
        });
        gx
    });
    Ok((grads, grad_x))
}

/// Forward pass keeping the cache needed by [`layer_backward`].
pub fn layer_forward(params: &LayerParams, x: &Matrix) -> Result<(Matrix, ForwardCache)> {
    layer_forward_exec(params, x, Exec::default())
}

pub fn layer_forward_exec(
    params: &LayerParams,
    x: &Matrix,
    exec: Exec,
) -> Result<(Matrix, ForwardCache)> {
    check_input(params, x)?;
    Ok(with_activation!(&params.wavelet, |act| forward_cached_with(
        act, params, x, exec
    )))
}

/// Forward pass without a cache, for evaluation.
pub fn layer_predict(params: &LayerParams, x: &Matrix, exec: Exec) -> Result<Matrix> {
    check_input(params, x)?;
    Ok(with_activation!(&params.wavelet, |act| forward_with(
        act, params, x, exec
    )))
}

/// Parameter gradients summed over the batch, and the input gradient.
pub fn layer_backward(
    params: &LayerParams,
    cache: ForwardCache,
    grad_y: &Matrix,
) -> Result<(LayerGrads, Matrix)> {
    let (grads, gx) = layer_backward_exec(params, cache, grad_y, true, Exec::default())?;
    Ok((grads, gx.expect("requested")))
}

pub fn layer_backward_exec(
    params: &LayerParams,
    cache: ForwardCache,
    grad_y: &Matrix,
    want_grad_x: bool,
    exec: Exec,
) -> Result<(LayerGrads, Option<Matrix>)> {
    with_activation!(&params.wavelet, |act| backward_with(
        act,
        params,
        cache,
        grad_y,
        want_grad_x,
        exec
    ))
}
