//! Spiking convolutional network toolkit for EEG seizure prediction.
//!
//! The pipeline mirrors one inference path end to end:
//!
//! ```text
//! EEG recording -> windows -> float CNN training
//!                    |              |
//!                 encoder        weight mapping + threshold calibration
//!                    v              v
//!              spike trains -> integrate-and-fire network -> spike counts
//!                                                              |
//!                                      decision / metrics / op-count report
//! ```
//!
//! Numeric code is generic over [`Scalar`] (f32 for the production path,
//! f64 where precision matters); concrete aliases live at the crate root.

pub mod cnn;
pub mod complexity;
pub mod convert;
pub mod detmath;
pub mod eeg;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod network;
pub mod rng;
pub mod scalar;
pub mod snn;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Float network over `f32`, the production precision.
pub type Cnn32 = cnn::Cnn<f32>;
/// Float network over `f64`, for gradient checks and oracles.
pub type Cnn64 = cnn::Cnn<f64>;
/// Spiking network over `f32`.
pub type SnnModel32 = snn::SnnModel<f32>;
/// Spiking network over `f64`.
pub type SnnModel64 = snn::SnnModel<f64>;
