//! Drift and Doob-score networks, their optimiser and on-disk format.

mod embed;
mod mlp;
mod model_io;
mod optim;

pub use embed::time_embed;
pub use mlp::{
    forward_doob, forward_drift, Activation, DoobModel, DriftModel, ForwardCache, LayerShape, Mlp,
    MlpSpec, Mode, Normalization, ParamSet,
};
pub use model_io::{load_model, save_model, ModelBundle, FORMAT_VERSION, MAGIC};
pub use optim::{AdamWConfig, EmaState, OptimState};
