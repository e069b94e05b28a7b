//! OFDM transmitter fingerprinting from hardware impairments.
//!
//! The crate synthesizes OFDM training frames through per-transmitter
//! IQ-modulator and power-amplifier impairments, a block-fading multipath
//! channel and AWGN, then recovers channel-independent fingerprints:
//! Hammerstein parameter separation splits the transmitter nonlinearity from
//! the channel FIR, a grid search over the best linear PA approximation
//! reads the IQ-imbalance combination off the conjugate anti-symmetric pilot
//! bins, and a k-NN classifier scores the resulting feature vectors against
//! the envelope baseline.
//!
//! The `harness` module holds the experiment drivers (single experiments,
//! Monte Carlo sweeps, EVM calibration) and their CSV emission; the rest of
//! the modules are the signal chain they are built from.

pub mod channel;
pub mod error;
pub mod features;
pub mod frontend;
pub mod hammerstein;
pub mod harness;
pub mod iq_est;
pub mod knn;
pub mod ofdm;
pub mod sigproc;

mod exec;
mod linalg;

pub use error::{Error, Result};
pub use exec::with_threads;
