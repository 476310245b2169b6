//! The aligned bridge-matching objective and its training loop.
//!
//! For a pair `(x0, x1)` and `t ∈ (0, 1)`, a point `x_t` on the scaled
//! Brownian bridge is regressed onto the bridge drift
//! `(x1 - x_t) / (β_1 - β_t)` by the sum of the drift network `b(t, x)` and a
//! Doob-score network `m(t, x, b)`, with an `ℓ2` penalty `λ_t |m|^2` on the
//! latter. At the optimum `m` vanishes in expectation and `b` is the drift of
//! the bridge mixture.

mod batch;
mod config;
mod loss;
mod train;

pub use batch::{sample_training_batch, TrainingBatch};
pub use config::{LambdaMode, TrainConfig, REQUIRED_KEYS};
pub use loss::{loss_batch, LossBreakdown, LossOutput};
pub use train::{
    export_drift, fit_normalization, init_models, train, train_with_progress, write_loss_trace,
    TrainOutput,
};
