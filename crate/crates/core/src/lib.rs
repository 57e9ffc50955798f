//! Dual-rate sub-Nyquist frequency estimation.
//!
//! A multi-tone complex signal is sampled by two channels running well below
//! the Nyquist rate. Each channel is decomposed with a matrix pencil into
//! aliased (frequency, amplitude, phase) triples; the two sets are paired by
//! amplitude and phase, and the true frequencies are unfolded from the two
//! residues with a fold-index search backed by the Chinese Remainder Theorem.
//!
//! An orthogonal matching pursuit baseline and a Monte Carlo harness for
//! comparing both methods over SNR and sample length are included.

pub mod bench_harness;
pub mod cli;
pub mod cs_baseline;
pub mod dealias_crt;
pub mod error;
pub mod matrix_pencil;
pub mod model_order;
pub mod rng;
pub mod signal_model;

pub use error::{Error, Result};
pub type Complex64 = nalgebra::Complex<f64>;
