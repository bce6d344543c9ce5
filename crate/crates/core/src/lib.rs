//! Multi-class SWAP-Test classifier.
//!
//! The classifier encodes a test datum, the training data and their label
//! states into one register, runs a modified SWAP-Test and reconstructs the
//! Bloch vector of a single label qubit. That "predicted vector" is a linear
//! combination of the class label vectors weighted by class-wise kernel sums,
//! and the class whose label vector overlaps it most wins.
//!
//! Two independent routes produce the predicted vector:
//!
//! * [`classifier::run_tomography`] simulates the circuits on a dense
//!   statevector ([`qsim`]) and reads `<Z>` on the label qubit,
//! * [`classifier::predicted_classical`] sums kernel values directly.
//!
//! They agree to machine precision for amplitude encoding, which is the
//! central correctness check of this crate. [`noise`] covers the depolarizing
//! channel and the label-capacity analysis, [`data`] the datasets and
//! cross-validation plans, and [`experiment`] ties everything into
//! reproducible runs.

pub mod classifier;
pub mod data;
pub mod encoding;
mod error;
pub mod experiment;
pub mod labels;
pub mod noise;
pub mod packing;
pub mod qsim;
pub mod seed;

pub use error::{Error, Result};
