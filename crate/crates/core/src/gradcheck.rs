//! Finite-difference verification of the analytic wavelet derivatives and of
//! the full backward pass.
//!
//! Derivatives are compared against a five-point central stencil, whose
//! truncation error is O(h⁴), so a step of 1e-4 keeps both truncation and
//! rounding far below the tolerances used here.

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::layer::{backward_with, forward_cached_with, forward_with, LayerGrads};
use crate::loss::softmax_cross_entropy;
use crate::matrix::Matrix;
use crate::model::{flatten_grads, ModelState};
use crate::rng::{stream_rng, Stream};
use crate::wavelet::{Activation, MotherWavelet};

pub const FD_STEP: f64 = 1e-4;
pub const DERIVATIVE_POINTS: usize = 1000;
pub const MODEL_ARCHITECTURE: [usize; 3] = [5, 4, 3];
pub const MODEL_BATCH: usize = 2;

/// Denominator floor for the relative error of near-zero gradients.
const REL_FLOOR: f64 = 1e-6;

fn five_point(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Largest `|ψ' − fd| / (1 + |ψ'|)` over evenly spaced points in [-6, 6].
pub fn check_derivative<A: Activation + ?Sized>(act: &A) -> f64 {
    (0..DERIVATIVE_POINTS)
        .map(|k| {
            let u = -6.0 + 12.0 * k as f64 / (DERIVATIVE_POINTS - 1) as f64;
            let d = act.deriv(u);
            let fd = five_point(|v| act.eval(v), u, FD_STEP);
            (d - fd).abs() / (1.0 + d.abs())
        })
        .fold(0.0, f64::max)
}

fn loss_with<A: Activation + ?Sized>(act: &A, model: &ModelState, x: &Matrix, labels: &[usize]) -> Result<f64> {
    let mut h = x.clone();
    for layer in model.layers() {
        h = forward_with(act, layer, &h, Exec::Sequential);
    }
    softmax_cross_entropy(&h, labels).map(|(l, _)| l)
}

fn grads_with<A: Activation + ?Sized>(
    act: &A,
    model: &ModelState,
    x: &Matrix,
    labels: &[usize],
) -> Result<Vec<LayerGrads>> {
    let mut caches = Vec::new();
    let mut h = x.clone();
    for layer in model.layers() {
        let (y, cache) = forward_cached_with(act, layer, &h, Exec::Sequential);
        caches.push(cache);
        h = y;
    }
    let (_, mut upstream) = softmax_cross_entropy(&h, labels)?;
    let mut grads = Vec::new();
    for (k, (layer, cache)) in model.layers().iter().zip(caches).enumerate().rev() {
        let (g, gx) = backward_with(act, layer, cache, &upstream, k > 0, Exec::Sequential)?;
        grads.push(g);
        if let Some(gx) = gx {
            upstream = gx;
        }
    }
    grads.reverse();
    Ok(grads)
}

/// Largest relative error between the backward pass and finite differences
/// of the batch loss, over every parameter of a small random network.
pub fn check_model<A: Activation + ?Sized>(act: &A, seed: u64) -> Result<f64> {
    // The stored family is ignored; every pass below evaluates `act`.
    let mut model = ModelState::new(&MODEL_ARCHITECTURE, MotherWavelet::dog(), seed)?;
    let mut rng = stream_rng(seed, Stream::Gradcheck, 0, 0);
    for layer in model.layers_mut() {
        for s in layer.scale.as_mut_slice() {
            *s = rng.random_range(0.6..1.6) * if rng.random_bool(0.2) { -1.0 } else { 1.0 };
        }
        for t in layer.translation.as_mut_slice() {
            *t = rng.random_range(-0.5..0.5);
        }
    }
    let x = Matrix::from_vec(
        MODEL_BATCH,
        MODEL_ARCHITECTURE[0],
        (0..MODEL_BATCH * MODEL_ARCHITECTURE[0]).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )?;
    let labels: Vec<usize> = (0..MODEL_BATCH).map(|_| rng.random_range(0..MODEL_ARCHITECTURE[2])).collect();

    let analytic = flatten_grads(&grads_with(act, &model, &x, &labels)?);
    let base = model.flatten();
    let mut worst: f64 = 0.0;
    for (p, &a) in analytic.iter().enumerate() {
        let loss_at = |v: f64| {
            let mut probe = model.clone();
            let mut flat = base.clone();
            flat[p] = v;
            probe.load_flat(&flat).expect("same length");
            loss_with(act, &probe, &x, &labels).expect("valid shapes")
        };
        worst = worst.max(relative_error(a, five_point(loss_at, base[p], FD_STEP)));
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveletCheck {
    pub wavelet: String,
    pub derivative_error: f64,
    pub model_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckReport {
    pub tolerance: f64,
    pub checks: Vec<WaveletCheck>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_wavelets(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.wavelet.as_str())
            .collect()
    }
}

/// Runs both checks for every target. Numerical failure is reported in the
/// returned report, not as an error.
pub fn run_gradcheck(targets: &[&dyn Activation], tolerance: f64, seed: u64) -> Result<GradcheckReport> {
    if targets.is_empty() {
        return Err(Error::Validation("gradcheck needs at least one wavelet".into()));
    }
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::Validation(format!(
            "gradcheck tolerance must be positive, got {tolerance}"
        )));
    }
    let checks = targets
        .iter()
        .map(|act| {
            let derivative_error = check_derivative(*act);
            let model_error = check_model(*act, seed)?;
            Ok(WaveletCheck {
                wavelet: act.name(),
                derivative_error,
                model_error,
                passed: derivative_error <= tolerance && model_error <= tolerance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GradcheckReport { tolerance, checks })
}

/// Convenience wrapper over concrete wavelets.
pub fn run_gradcheck_wavelets(wavelets: &[MotherWavelet], tolerance: f64, seed: u64) -> Result<GradcheckReport> {
    let targets: Vec<&dyn Activation> = wavelets.iter().map(|w| w as &dyn Activation).collect();
    run_gradcheck(&targets, tolerance, seed)
}
