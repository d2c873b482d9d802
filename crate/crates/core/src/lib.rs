//! IEEE 802.11ah (1 MHz) preamble synchronization lab.
//!
//! * [`phy`]: NDP preamble synthesis, OFDM primitives, resampling, wave files.
//! * [`channel`]: multipath, CFO, AWGN and the full transmit/receive chain.
//! * [`sync`]: correlation-based packet detection and two-stage CFO estimation.
//! * [`models`]: the 1D-CNN detector and the DNN/LSTM/GRU CFO estimators.
//! * [`dataset`]: reproducible detection and CFO datasets.
//! * [`eval`]: metrics, FLOP accounting and CSV/SVG reports.

pub mod channel;
pub mod dataset;
mod error;
pub mod eval;
pub mod models;
pub mod phy;
pub mod seed;
pub mod sync;

pub use error::{CoreError, Result};

/// Complex baseband sample.
pub type C64 = num_complex::Complex<f64>;
