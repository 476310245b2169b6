use ndarray::Array2;
use rand::RngCore;

use crate::error::Result;
use crate::neural::{forward_doob, forward_drift, DoobModel, DriftModel, Mode};
use crate::sde::bridge::bridge_drift_target_into;

use super::batch::TrainingBatch;
use super::config::TrainConfig;

/// Batch averages of the objective and its two parts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub regression: f64,
    pub regularization: f64,
    pub mean_m_sq: f64,
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.regression.is_finite() && self.regularization.is_finite()
    }
}

pub struct LossOutput {
    pub loss: LossBreakdown,
    /// Gradient with respect to the drift parameters.
    pub grad_drift: Vec<f64>,
    /// Gradient with respect to the Doob-score parameters.
    pub grad_doob: Vec<f64>,
}

/// Mean over rows of `|target - b - m|^2 + λ_t |m|^2`, where `target` is the
/// bridge drift at `(t, x_t)` and `b` enters the Doob network as a constant.
/// With `rng` the networks run in training mode (dropout on).
pub fn loss_batch(
    batch: &TrainingBatch,
    drift: &DriftModel,
    doob: &DoobModel,
    config: &TrainConfig,
    rng: Option<&mut dyn RngCore>,
) -> Result<LossOutput> {
    let n = batch.len();
    let d = batch.x_t.ncols();
    let x = batch.x_t.view();
    let (b, b_cache, m, m_cache) = match rng {
        Some(rng) => {
            let (b, bc) = forward_drift(drift, &batch.t, x, Mode::Train(&mut *rng))?;
            let (m, mc) = forward_doob(doob, &batch.t, x, b.view(), Mode::Train(rng))?;
            (b, bc, m, mc)
        }
        None => {
            let (b, bc) = forward_drift(drift, &batch.t, x, Mode::Eval)?;
            let (m, mc) = forward_doob(doob, &batch.t, x, b.view(), Mode::Eval)?;
            (b, bc, m, mc)
        }
    };

    let mut target = Array2::zeros((n, d));
    let mut buf = vec![0.0; d];
    for i in 0..n {
        let xi = batch.x_t.row(i).to_vec();
        let x1 = batch.x1.row(i).to_vec();
        bridge_drift_target_into(&xi, &x1, batch.t[i], &config.schedule, &mut buf)?;
        target
            .row_mut(i)
            .assign(&ndarray::ArrayView1::from(&buf[..]));
    }

    let scale = 1.0 / n as f64;
    let mut loss = LossBreakdown::default();
    let mut d_b = Array2::zeros((n, d));
    let mut d_m = Array2::zeros((n, d));
    for i in 0..n {
        let lambda = config.lambda_at(batch.t[i]);
        let (mut r_sq, mut m_sq) = (0.0, 0.0);
        for j in 0..d {
            let r = target[[i, j]] - b[[i, j]] - m[[i, j]];
            let mij = m[[i, j]];
            r_sq += r * r;
            m_sq += mij * mij;
            d_b[[i, j]] = -2.0 * r * scale;
            d_m[[i, j]] = (-2.0 * r + 2.0 * lambda * mij) * scale;
        }
        loss.regression += r_sq * scale;
        loss.regularization += lambda * m_sq * scale;
        loss.mean_m_sq += m_sq * scale;
    }
    loss.total = loss.regression + loss.regularization;

    let grad_drift = drift.0.backward(&b_cache, d_b.view()).params;
    let grad_doob = doob.0.backward(&m_cache, d_m.view()).params;
    Ok(LossOutput {
        loss,
        grad_drift,
        grad_doob,
    })
}
