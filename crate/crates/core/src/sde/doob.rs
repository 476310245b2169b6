use ndarray::Array2;

use super::schedule::{DiffusivitySchedule, TimeGrid};
use super::simulate::{simulate_sde_from, DriftField, SimOptions};
use crate::error::{Error, Result};
use crate::rng::NoiseKey;

/// Monte-Carlo estimate of the smoothed Doob function
/// `h_{t,τ}(x) = E[exp(-|X_1 - x1|^2 / (2τ)) | X_t = x]` under the
/// unconditioned SDE with drift `drift`.
///
/// Paths run from `t` to 1 with the step size of `grid` (at least one step).
pub fn estimate_h_mc(
    x: &[f64],
    t: f64,
    x1: &[f64],
    tau: f64,
    drift: &dyn DriftField,
    schedule: &DiffusivitySchedule,
    grid: &TimeGrid,
    key: NoiseKey,
    n_paths: usize,
) -> Result<f64> {
    estimate_log_h_mc(x, t, x1, tau, drift, schedule, grid, key, n_paths).map(f64::exp)
}

/// `log h_{t,τ}(x)`, averaged in log-sum-exp form so tiny values survive.
pub fn estimate_log_h_mc(
    x: &[f64],
    t: f64,
    x1: &[f64],
    tau: f64,
    drift: &dyn DriftField,
    schedule: &DiffusivitySchedule,
    grid: &TimeGrid,
    key: NoiseKey,
    n_paths: usize,
) -> Result<f64> {
    if x.len() != x1.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: x1.len(),
        });
    }
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must be positive, got {tau}"
        )));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(Error::TimeDomain { t });
    }
    let n_steps = (((1.0 - t) * grid.n_steps() as f64).round() as usize).max(1);
    let start = Array2::from_shape_fn((n_paths, x.len()), |(_, j)| x[j]);
    let paths = simulate_sde_from(
        start.view(),
        t,
        n_steps,
        drift,
        schedule,
        key,
        SimOptions::default(),
    )?;
    let log_weights: Vec<f64> = paths
        .endpoints()
        .outer_iter()
        .map(|end| {
            -end.iter()
                .zip(x1)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / (2.0 * tau)
        })
        .collect();
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log_weights.iter().map(|w| (w - max).exp()).sum();
    Ok((max + (sum / n_paths as f64).ln()).min(0.0))
}
