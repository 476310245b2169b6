//! Learning diffusion Schrödinger bridges from aligned sample pairs.
//!
//! The crate is organised around the pieces of the method:
//!
//! - [`sde`]: diffusivity schedules, scaled Brownian bridges, Euler–Maruyama
//!   simulation and a Monte-Carlo estimator of the smoothed Doob h-function.
//! - [`neural`]: the drift and Doob-score networks with hand-written
//!   reverse-mode gradients, AdamW, parameter EMA and the model file format.
//! - [`training`]: the aligned bridge-matching objective and its training loop.
//! - [`datasets`]: synthetic aligned datasets and pair CSV I/O.
//! - [`metrics`]: MMD, entropic Wasserstein (Sinkhorn), RMSD and the
//!   perturbation-signature distance.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments
)]

pub mod datasets;
pub mod error;
pub mod metrics;
pub mod neural;
pub mod rng;
pub mod sde;
pub mod text;
pub mod training;

pub use error::{Error, Result};
