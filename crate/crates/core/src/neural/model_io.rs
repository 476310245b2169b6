//! Binary model files.
//!
//! Layout (all integers little-endian):
//!
//! | bytes        | content                                              |
//! |--------------|------------------------------------------------------|
//! | 8            | magic `BRIDGEKT`                                     |
//! | 4            | format version (`u32`)                               |
//! | 8            | config block length `n` (`u64`)                      |
//! | n            | UTF-8 config block, `key = value` lines              |
//! | 8 × params   | drift parameters then Doob parameters, `f64`, in the |
//! |              | layer order of [`MlpSpec::layer_shapes`]             |
//! | 32           | SHA-256 of every preceding byte                      |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::mlp::{Activation, DoobModel, DriftModel, Mlp, MlpSpec, Normalization};
use crate::error::{Error, Result};
use crate::sde::DiffusivitySchedule;
use crate::text::{fmt_list, parse_kv, parse_list};

pub const MAGIC: &[u8; 8] = b"BRIDGEKT";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8;
const CHECKSUM_LEN: usize = 32;

/// Everything needed to simulate with a trained model. `train_config` holds
/// the training settings as ordered `key = value` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle {
    pub schedule: DiffusivitySchedule,
    pub drift: DriftModel,
    pub doob: Option<DoobModel>,
    pub train_config: Vec<(String, String)>,
}

fn spec_lines(out: &mut String, prefix: &str, spec: &MlpSpec) {
    let n = &spec.normalization;
    let mut put = |k: &str, v: String| writeln!(out, "{prefix}.{k} = {v}").unwrap();
    put("state_dim", spec.state_dim.to_string());
    put("cond_dim", spec.cond_dim.to_string());
    put("hidden_dim", spec.hidden_dim.to_string());
    put("time_embed_dim", spec.time_embed_dim.to_string());
    put("x_layers", spec.x_layers.to_string());
    put("t_layers", spec.t_layers.to_string());
    put("head_layers", spec.head_layers.to_string());
    put("activation", spec.activation.to_string());
    put("dropout", format!("{:?}", spec.dropout));
    put("center", fmt_list(&n.center));
    put("scale", format!("{:?}", n.scale));
    put("output_scale", format!("{:?}", n.output_scale));
    put("n_params", spec.n_params().to_string());
}

fn config_block(bundle: &ModelBundle) -> String {
    let mut out = String::new();
    let (g, breaks) = bundle.schedule.to_text();
    writeln!(out, "schedule.g = {g}").unwrap();
    writeln!(out, "schedule.breakpoints = {breaks}").unwrap();
    spec_lines(&mut out, "drift", bundle.drift.0.spec());
    writeln!(out, "has_doob = {}", bundle.doob.is_some()).unwrap();
    if let Some(doob) = &bundle.doob {
        spec_lines(&mut out, "doob", doob.0.spec());
    }
    for (k, v) in &bundle.train_config {
        writeln!(out, "train.{k} = {v}").unwrap();
    }
    out
}

pub fn encode_model(bundle: &ModelBundle) -> Vec<u8> {
    let config = config_block(bundle);
    let mut bytes = Vec::with_capacity(HEADER_LEN + config.len() + CHECKSUM_LEN);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(config.len() as u64).to_le_bytes());
    bytes.extend_from_slice(config.as_bytes());
    let doob = bundle.doob.iter().flat_map(|m| m.0.params().values.iter());
    for v in bundle.drift.0.params().values.iter().chain(doob) {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&bytes);
    bytes.extend_from_slice(&digest);
    bytes
}

pub fn save_model(path: &Path, bundle: &ModelBundle) -> Result<()> {
    std::fs::write(path, encode_model(bundle)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ModelBundle> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn get(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::ModelFormat(format!("missing config key {key}")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| Error::ModelFormat(format!("bad value for {key}: {v:?}")))
    }

    fn spec(&self, prefix: &str) -> Result<(MlpSpec, usize)> {
        let k = |name: &str| format!("{prefix}.{name}");
        let center = parse_list(self.get(&k("center"))?)
            .ok_or_else(|| Error::ModelFormat(format!("bad value for {}", k("center"))))?;
        let spec = MlpSpec {
            state_dim: self.parse(&k("state_dim"))?,
            cond_dim: self.parse(&k("cond_dim"))?,
            hidden_dim: self.parse(&k("hidden_dim"))?,
            time_embed_dim: self.parse(&k("time_embed_dim"))?,
            x_layers: self.parse(&k("x_layers"))?,
            t_layers: self.parse(&k("t_layers"))?,
            head_layers: self.parse(&k("head_layers"))?,
            activation: self.get(&k("activation"))?.parse::<Activation>()?,
            dropout: self.parse(&k("dropout"))?,
            normalization: Normalization {
                center,
                scale: self.parse(&k("scale"))?,
                output_scale: self.parse(&k("output_scale"))?,
            },
        };
        spec.validate()?;
        let n: usize = self.parse(&k("n_params"))?;
        if n != spec.n_params() {
            return Err(Error::ModelFormat(format!(
                "{prefix}: declared {n} parameters, layer table has {}",
                spec.n_params()
            )));
        }
        Ok((spec, n))
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<ModelBundle> {
    if bytes.len() < HEADER_LEN + CHECKSUM_LEN {
        return Err(Error::ModelFormat("truncated file".into()));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::ModelFormat(
            "not a bridgekit model (bad magic bytes)".into(),
        ));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::ModelVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let config_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let body_end = bytes.len() - CHECKSUM_LEN;
    if config_len > (body_end - HEADER_LEN) as u64 {
        return Err(Error::ModelFormat("truncated file".into()));
    }
    if Sha256::digest(&bytes[..body_end]).as_slice() != &bytes[body_end..] {
        return Err(Error::Checksum);
    }
    let config_end = HEADER_LEN + config_len as usize;
    let config = std::str::from_utf8(&bytes[HEADER_LEN..config_end])
        .map_err(|_| Error::ModelFormat("config block is not UTF-8".into()))?;
    let pairs = parse_kv(config)
        .map_err(|(line, msg)| Error::ModelFormat(format!("config line {line}: {msg}")))?;
    let mut train_config = Vec::new();
    let mut map = BTreeMap::new();
    for (_, k, v) in pairs {
        if let Some(tk) = k.strip_prefix("train.") {
            train_config.push((tk.to_string(), v));
        } else {
            map.insert(k, v);
        }
    }
    let fields = Fields(map);
    let schedule = DiffusivitySchedule::from_text(
        fields.get("schedule.g")?,
        fields.get("schedule.breakpoints")?,
    )?;
    let (drift_spec, n_drift) = fields.spec("drift")?;
    let has_doob: bool = fields.parse("has_doob")?;
    let doob_spec = if has_doob {
        Some(fields.spec("doob")?)
    } else {
        None
    };
    let n_total = n_drift + doob_spec.as_ref().map_or(0, |(_, n)| *n);

    let payload = &bytes[config_end..body_end];
    if payload.len() != 8 * n_total {
        return Err(Error::ModelFormat(format!(
            "parameter payload has {} bytes, layer tables need {}",
            payload.len(),
            8 * n_total
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let drift = DriftModel(Mlp::from_params(drift_spec, values[..n_drift].to_vec())?);
    let doob = match doob_spec {
        Some((spec, _)) => Some(DoobModel(Mlp::from_params(
            spec,
            values[n_drift..].to_vec(),
        )?)),
        None => None,
    };
    Ok(ModelBundle {
        schedule,
        drift,
        doob,
        train_config,
    })
}
