use std::io::Write;
use std::path::Path;

use rand::RngCore;

use crate::datasets::AlignedDataset;
use crate::error::{Error, Result};
use crate::neural::{
    load_model, save_model, DoobModel, DriftModel, EmaState, MlpSpec, ModelBundle, Normalization,
    OptimState,
};
use crate::rng::{derive_seed, seeded};
use crate::text::push_row;

use super::batch::sample_training_batch;
use super::config::TrainConfig;
use super::loss::{loss_batch, LossBreakdown};

const INIT_STREAM: u64 = 1;
const BATCH_STREAM: u64 = 2;
const DROPOUT_STREAM: u64 = 3;

/// Trained networks (EMA weights) and the per-iteration loss trace.
#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub drift: DriftModel,
    pub doob: DoobModel,
    pub trace: Vec<LossBreakdown>,
    pub config: TrainConfig,
}

impl TrainOutput {
    pub fn bundle(&self) -> ModelBundle {
        ModelBundle {
            schedule: self.config.schedule.clone(),
            drift: self.drift.clone(),
            doob: Some(self.doob.clone()),
            train_config: self.config.to_pairs(),
        }
    }
}

/// Input and output scaling from the data: states are centred on the mean of
/// all endpoints and divided by their RMS spread, outputs are multiplied by
/// the RMS size of the average bridge drift `(x1 - x0) / β_1`.
pub fn fit_normalization(dataset: &AlignedDataset, beta_1: f64) -> Normalization {
    let d = dataset.dim();
    let n = dataset.len() as f64;
    let (x0, x1) = (dataset.x0(), dataset.x1());
    let mut center = vec![0.0; d];
    for j in 0..d {
        center[j] = (x0.column(j).sum() + x1.column(j).sum()) / (2.0 * n);
    }
    let mut spread = 0.0;
    let mut motion = 0.0;
    for i in 0..dataset.len() {
        for j in 0..d {
            spread += (x0[[i, j]] - center[j]).powi(2) + (x1[[i, j]] - center[j]).powi(2);
            motion += (x1[[i, j]] - x0[[i, j]]).powi(2);
        }
    }
    let scale = (spread / (2.0 * n * d as f64)).sqrt();
    let output_scale = (motion / (n * d as f64)).sqrt() / beta_1;
    let positive = |v: f64| if v.is_finite() && v > 1e-12 { v } else { 1.0 };
    Normalization {
        center,
        scale: positive(scale),
        output_scale: positive(output_scale),
    }
}

/// Fresh drift and Doob-score networks sized and normalised for `dataset`.
pub fn init_models(
    dataset: &AlignedDataset,
    config: &TrainConfig,
    rng: &mut dyn RngCore,
) -> Result<(DriftModel, DoobModel)> {
    config.validate()?;
    let d = dataset.dim();
    let mut spec = MlpSpec::new(d, 0, config.hidden_dim, config.time_embed_dim);
    spec.activation = config.activation;
    spec.dropout = config.dropout;
    spec.normalization = fit_normalization(dataset, config.schedule.beta_1());
    let cond_dim = if config.doob_uses_drift { d } else { 0 };
    let doob_spec = MlpSpec {
        cond_dim,
        ..spec.clone()
    };
    Ok((DriftModel::new(spec, rng)?, DoobModel::new(doob_spec, rng)?))
}

pub fn train(dataset: &AlignedDataset, config: &TrainConfig) -> Result<TrainOutput> {
    train_with_progress(dataset, config, |_, _| {})
}

/// Each iteration draws a batch, steps the Doob-score network and then the
/// drift network with AdamW on gradients from the same forward pass, and
/// updates both EMA copies. `progress` is called every `eval_every`
/// iterations (1-based) with the current loss.
pub fn train_with_progress(
    dataset: &AlignedDataset,
    config: &TrainConfig,
    mut progress: impl FnMut(usize, &LossBreakdown),
) -> Result<TrainOutput> {
    config.validate()?;
    let (mut drift, mut doob) = init_models(
        dataset,
        config,
        &mut seeded(derive_seed(config.seed, INIT_STREAM)),
    )?;
    let mut batch_rng = seeded(derive_seed(config.seed, BATCH_STREAM));
    let mut dropout_rng = seeded(derive_seed(config.seed, DROPOUT_STREAM));

    let mut opt_drift = OptimState::new(drift.0.params().len(), config.drift_optimizer());
    let mut opt_doob = OptimState::new(doob.0.params().len(), config.doob_optimizer());
    let mut ema_drift = EmaState::new(&drift.0.params().values, config.ema_decay)?;
    let mut ema_doob = EmaState::new(&doob.0.params().values, config.ema_decay)?;
    let mut trace = Vec::with_capacity(config.n_iters);

    for iter in 0..config.n_iters {
        let batch = sample_training_batch(dataset, config, &mut batch_rng)?;
        let out = loss_batch(&batch, &drift, &doob, config, Some(&mut dropout_rng))?;
        let loss = out.loss;
        if !loss.is_finite()
            || out
                .grad_drift
                .iter()
                .chain(&out.grad_doob)
                .any(|g| !g.is_finite())
        {
            return Err(Error::NonFiniteLoss {
                iter,
                total: loss.total,
                regression: loss.regression,
                regularization: loss.regularization,
                mean_m_sq: loss.mean_m_sq,
            });
        }
        opt_doob.adamw_step(doob.0.params_mut(), &out.grad_doob)?;
        opt_drift.adamw_step(drift.0.params_mut(), &out.grad_drift)?;
        ema_doob.ema_update(&doob.0.params().values)?;
        ema_drift.ema_update(&drift.0.params().values)?;
        trace.push(loss);
        if config.eval_every > 0 && (iter + 1) % config.eval_every == 0 {
            progress(iter + 1, &loss);
        }
    }

    drift.0.set_params(ema_drift.shadow())?;
    doob.0.set_params(ema_doob.shadow())?;
    Ok(TrainOutput {
        drift,
        doob,
        trace,
        config: config.clone(),
    })
}

/// CSV with header `iter,total,regression,regularization,mean_m_sq`.
pub fn write_loss_trace(path: &Path, trace: &[LossBreakdown]) -> Result<()> {
    let mut text = String::from("iter,total,regression,regularization,mean_m_sq\n");
    for (i, l) in trace.iter().enumerate() {
        let mut line = i.to_string();
        push_row(
            &mut line,
            [l.total, l.regression, l.regularization, l.mean_m_sq],
        );
        text.push_str(&line);
        text.push('\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Rewrite a trained model file without its Doob-score network.
pub fn export_drift(model_path: &Path, out_path: &Path) -> Result<()> {
    let bundle = load_model(model_path)?;
    save_model(
        out_path,
        &ModelBundle {
            doob: None,
            ..bundle
        },
    )
}
