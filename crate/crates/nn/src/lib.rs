//! A deliberately small neural-network engine.
//!
//! Supports exactly the layer kinds the synchronization models need: dense,
//! ReLU, tanh, valid 1D convolution (stride 1), LSTM and GRU. Every layer has
//! a hand-written backward pass; recurrent layers use full backpropagation
//! through time. Training is mini-batch Adam on an MSE loss.
//!
//! All numeric code is generic over [`Real`] so that the same kernels run in
//! `f32` for training and in `f64` for finite-difference gradient checks.

pub mod adam;
pub mod checkpoint;
mod error;
pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod network;
pub mod train;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{Checkpoint, CheckpointManifest, ParamEntry};
pub use error::{NnError, Result};
pub use layers::LayerSpec;
pub use loss::mse_loss;
pub use network::{Network, Tape, Weights};
pub use train::{evaluate_loss, train, EpochStats, Samples, TrainConfig, TrainOutcome};

use ndarray::{ArrayD, NdFloat};
use num_traits::FromPrimitive;

/// Row-major n-dimensional array; the leading axis is always the batch.
pub type Tensor<F> = ArrayD<F>;

/// Floating-point element type usable by the engine (`f32` or `f64`).
pub trait Real: NdFloat + FromPrimitive + Default {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits the float type")
    }
}

impl<T: NdFloat + FromPrimitive + Default> Real for T {}
