use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::neural::{Activation, AdamWConfig};
use crate::sde::DiffusivitySchedule;
use crate::text::parse_kv;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LambdaMode {
    /// `λ_t = λ`.
    Constant,
    /// `λ_t = λ t`.
    LinearInT,
}

impl fmt::Display for LambdaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LambdaMode::Constant => "constant",
            LambdaMode::LinearInT => "linear-in-t",
        })
    }
}

impl FromStr for LambdaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(LambdaMode::Constant),
            "linear-in-t" => Ok(LambdaMode::LinearInT),
            other => Err(Error::Config(format!(
                "lambda_mode must be `constant` or `linear-in-t`, got {other:?}"
            ))),
        }
    }
}

/// Training settings. The text form is one `key = value` line per field,
/// using the field names below; `g` is a comma-separated list of
/// diffusivities with `g_breakpoints` giving the switch times.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub n_iters: usize,
    /// Learning rate of the drift network.
    pub lr_drift: f64,
    /// Learning rate of the Doob-score network.
    pub lr_doob: f64,
    pub lambda_mode: LambdaMode,
    pub lambda_value: f64,
    pub t_clip: f64,
    pub times_per_pair: usize,
    pub schedule: DiffusivitySchedule,
    pub ema_decay: f64,
    pub seed: u64,
    /// Report progress every this many iterations (0 disables).
    pub eval_every: usize,
    pub hidden_dim: usize,
    pub time_embed_dim: usize,
    pub activation: Activation,
    pub dropout: f64,
    pub doob_uses_drift: bool,
    pub weight_decay: f64,
}

pub const REQUIRED_KEYS: [&str; 3] = ["n_iters", "batch_size", "seed"];

const KEYS: [&str; 19] = [
    "batch_size",
    "n_iters",
    "lr_drift",
    "lr_doob",
    "lambda_mode",
    "lambda_value",
    "t_clip",
    "times_per_pair",
    "g",
    "g_breakpoints",
    "ema_decay",
    "seed",
    "eval_every",
    "hidden_dim",
    "time_embed_dim",
    "activation",
    "dropout",
    "doob_uses_drift",
    "weight_decay",
];

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            n_iters: 5000,
            lr_drift: 1e-3,
            lr_doob: 1e-3,
            lambda_mode: LambdaMode::Constant,
            lambda_value: 1.0,
            t_clip: 1e-3,
            times_per_pair: 1,
            schedule: DiffusivitySchedule::default(),
            ema_decay: 0.9,
            seed: 0,
            eval_every: 0,
            hidden_dim: 64,
            time_embed_dim: 64,
            activation: Activation::Selu,
            dropout: 0.1,
            doob_uses_drift: true,
            weight_decay: 0.01,
        }
    }
}

fn value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value for `{key}`: {v:?}")))
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.n_iters == 0 && self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if self.times_per_pair == 0 {
            return fail("times_per_pair must be at least 1");
        }
        if !(self.lambda_value >= 0.0 && self.lambda_value.is_finite()) {
            return fail("lambda_value must be finite and non-negative");
        }
        if !(self.t_clip > 0.0 && self.t_clip < 1.0) {
            return fail("t_clip must lie in (0, 1)");
        }
        if !(self.lr_drift > 0.0 && self.lr_doob > 0.0) {
            return fail("learning rates must be positive");
        }
        if !(0.0..=1.0).contains(&self.ema_decay) {
            return fail("ema_decay must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must lie in [0, 1)");
        }
        if self.hidden_dim == 0 || self.time_embed_dim < 2 || !self.time_embed_dim.is_multiple_of(2)
        {
            return fail("hidden_dim must be positive and time_embed_dim even and >= 2");
        }
        if !(self.weight_decay >= 0.0) {
            return fail("weight_decay must be non-negative");
        }
        if self.schedule.beta_1() <= 0.0 {
            return fail("g must not vanish on the whole interval");
        }
        Ok(())
    }

    pub fn lambda_at(&self, t: f64) -> f64 {
        match self.lambda_mode {
            LambdaMode::Constant => self.lambda_value,
            LambdaMode::LinearInT => self.lambda_value * t,
        }
    }

    pub fn drift_optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            lr: self.lr_drift,
            weight_decay: self.weight_decay,
            ..AdamWConfig::default()
        }
    }

    pub fn doob_optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            lr: self.lr_doob,
            weight_decay: self.weight_decay,
            ..AdamWConfig::default()
        }
    }

    /// Ordered `(key, value)` pairs; floats use the shortest exact form.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let (g, breaks) = self.schedule.to_text();
        let vals = [
            self.batch_size.to_string(),
            self.n_iters.to_string(),
            format!("{:?}", self.lr_drift),
            format!("{:?}", self.lr_doob),
            self.lambda_mode.to_string(),
            format!("{:?}", self.lambda_value),
            format!("{:?}", self.t_clip),
            self.times_per_pair.to_string(),
            g,
            breaks,
            format!("{:?}", self.ema_decay),
            self.seed.to_string(),
            self.eval_every.to_string(),
            self.hidden_dim.to_string(),
            self.time_embed_dim.to_string(),
            self.activation.to_string(),
            format!("{:?}", self.dropout),
            self.doob_uses_drift.to_string(),
            format!("{:?}", self.weight_decay),
        ];
        KEYS.iter()
            .zip(vals)
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Build from `(key, value)` pairs. Unknown and repeated keys are errors,
    /// every key in [`REQUIRED_KEYS`] must be present, the rest default.
    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (Option<usize>, &'a str, &'a str)>,
    ) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        let mut seen = BTreeSet::new();
        let (mut g, mut breaks) = (None, String::new());
        for (line, k, v) in pairs {
            let at = line.map(|l| format!(" (line {l})")).unwrap_or_default();
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("unknown key `{k}`{at}")));
            }
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("key `{k}` given twice{at}")));
            }
            match k {
                "batch_size" => cfg.batch_size = value(k, v)?,
                "n_iters" => cfg.n_iters = value(k, v)?,
                "lr_drift" => cfg.lr_drift = value(k, v)?,
                "lr_doob" => cfg.lr_doob = value(k, v)?,
                "lambda_mode" => cfg.lambda_mode = v.parse()?,
                "lambda_value" => cfg.lambda_value = value(k, v)?,
                "t_clip" => cfg.t_clip = value(k, v)?,
                "times_per_pair" => cfg.times_per_pair = value(k, v)?,
                "g" => g = Some(v.to_string()),
                "g_breakpoints" => breaks = v.to_string(),
                "ema_decay" => cfg.ema_decay = value(k, v)?,
                "seed" => cfg.seed = value(k, v)?,
                "eval_every" => cfg.eval_every = value(k, v)?,
                "hidden_dim" => cfg.hidden_dim = value(k, v)?,
                "time_embed_dim" => cfg.time_embed_dim = value(k, v)?,
                "activation" => {
                    cfg.activation = v.parse().map_err(|e: Error| Error::Config(e.to_string()))?
                }
                "dropout" => cfg.dropout = value(k, v)?,
                "doob_uses_drift" => cfg.doob_uses_drift = value(k, v)?,
                "weight_decay" => cfg.weight_decay = value(k, v)?,
                _ => unreachable!("key list checked above"),
            }
        }
        for key in REQUIRED_KEYS {
            if !seen.contains(key) {
                return Err(Error::Config(format!("missing required key `{key}`")));
            }
        }
        if let Some(g) = g {
            cfg.schedule = DiffusivitySchedule::from_text(&g, &breaks)
                .map_err(|e| Error::Config(format!("g: {e}")))?;
        } else if !breaks.is_empty() {
            return Err(Error::Config("g_breakpoints given without g".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let pairs =
            parse_kv(text).map_err(|(line, msg)| Error::Config(format!("line {line}: {msg}")))?;
        Self::from_pairs(
            pairs
                .iter()
                .map(|(l, k, v)| (Some(*l), k.as_str(), v.as_str())),
        )
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}
