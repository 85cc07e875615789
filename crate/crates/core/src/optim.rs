//! AdamW with decoupled weight decay, applied uniformly to weight, scale and
//! translation tensors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layer::LayerGrads;
use crate::model::ModelState;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            lr: 1e-3,
            weight_decay: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamWConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.lr.is_finite() && self.lr > 0.0) {
            problems.push(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            problems.push(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            ));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                problems.push(format!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            problems.push(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems.join("; ")))
        }
    }
}

/// One AdamW update of a flat parameter slice. `step` is the 1-based count
/// including this update.
pub fn adamw_update(
    cfg: &AdamWConfig,
    step: u64,
    params: &mut [f64],
    grads: &[f64],
    first: &mut [f64],
    second: &mut [f64],
) {
    assert!(step >= 1, "AdamW steps are 1-based");
    let t = step.min(i32::MAX as u64) as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let decay = 1.0 - cfg.lr * cfg.weight_decay;
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(first).zip(second) {
        *p *= decay;
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Moment estimates for every parameter tensor of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamWState {
    pub config: AdamWConfig,
    pub first_moment: Vec<LayerGrads>,
    pub second_moment: Vec<LayerGrads>,
    pub step_count: u64,
}

impl AdamWState {
    pub fn new(config: AdamWConfig, model: &ModelState) -> Self {
        let zeros: Vec<LayerGrads> = model
            .layers()
            .iter()
            .map(|l| LayerGrads::zeros(l.out_dim(), l.in_dim()))
            .collect();
        AdamWState {
            config,
            first_moment: zeros.clone(),
            second_moment: zeros,
            step_count: 0,
        }
    }

    pub fn reset(&mut self) {
        for g in self.first_moment.iter_mut().chain(&mut self.second_moment) {
            for m in [&mut g.weight, &mut g.scale, &mut g.translation] {
                m.as_mut_slice().fill(0.0);
            }
        }
        self.step_count = 0;
    }

    /// Applies one update to `model` and re-clamps its scales. The model is
    /// untouched if any gradient is non-finite or shapes disagree.
    pub fn step(&mut self, model: &mut ModelState, grads: &[LayerGrads]) -> Result<()> {
        if grads.len() != model.layers().len() || self.first_moment.len() != grads.len() {
            return Err(Error::Validation(format!(
                "{} gradient layers for a {}-layer model",
                grads.len(),
                model.layers().len()
            )));
        }
        for (k, (g, layer)) in grads.iter().zip(model.layers()).enumerate() {
            for ((name, gm), (_, pm)) in g.tensors().into_iter().zip(layer.tensors()) {
                if gm.shape() != pm.shape() {
                    return Err(Error::Validation(format!(
                        "gradient shape {:?} for layer {k} {name} does not match {:?}",
                        gm.shape(),
                        pm.shape()
                    )));
                }
                if !gm.all_finite() {
                    return Err(Error::NonFiniteGradient {
                        layer: k,
                        tensor: name,
                    });
                }
            }
        }

        self.step_count += 1;
        let cfg = self.config;
        let step = self.step_count;
        for (((layer, g), m), v) in model
            .layers_mut()
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            let params = layer.tensors_mut();
            let gs = [&g.weight, &g.scale, &g.translation];
            let ms = [&mut m.weight, &mut m.scale, &mut m.translation];
            let vs = [&mut v.weight, &mut v.scale, &mut v.translation];
            for (((p, g), m), v) in params.into_iter().zip(gs).zip(ms).zip(vs) {
                adamw_update(
                    &cfg,
                    step,
                    p.as_mut_slice(),
                    g.as_slice(),
                    m.as_mut_slice(),
                    v.as_mut_slice(),
                );
            }
            layer.clamp_scales();
        }
        Ok(())
    }
}

pub fn adamw_step(
    state: &mut AdamWState,
    params: &mut ModelState,
    grads: &[LayerGrads],
) -> Result<()> {
    state.step(params, grads)
}
