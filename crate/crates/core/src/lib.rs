//! Federated training of wavelet Kolmogorov-Arnold networks (Wav-KAN).
//!
//! Every edge of a Wav-KAN layer carries its own activation
//! `w * psi((x - tau) / s)`, where `psi` is a mother wavelet and the triple
//! (weight, scale, translation) is learned by backpropagation. Client models
//! train locally with AdamW and a server averages their parameters round by
//! round.
//!
//! Module map:
//!
//! * [`wavelet`]: mother wavelets and their analytic derivatives.
//! * [`layer`], [`model`], [`loss`]: forward/backward passes and the loss.
//! * [`optim`] implements AdamW.
//! * [`data`]: IDX parsing, client partitioning, synthetic data.
//! * [`fed`]: selection, local training, aggregation, rounds.
//! * [`experiment`]: configuration, multi-trial runs, CSV traces.
//! * [`gradcheck`]: finite-difference verification of every gradient.
//!
//! Data-parallel kernels run on rayon when the `parallel` feature is enabled
//! (the default). [`Exec`] selects the strategy at runtime; both strategies
//! produce bitwise-identical results.

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod fed;
pub mod gradcheck;
pub mod layer;
pub mod loss;
pub mod matrix;
pub mod model;
pub mod optim;
pub mod rng;
pub mod train;
pub mod wavelet;

pub use error::{Error, ErrorCategory, Result};
pub use exec::Exec;
pub use matrix::Matrix;
pub use model::ModelState;
pub use wavelet::MotherWavelet;
