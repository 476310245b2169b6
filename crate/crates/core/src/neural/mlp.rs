use std::fmt;
use std::str::FromStr;

use ndarray::{concatenate, s, Array2, ArrayView2, ArrayViewMut2, Axis};
use rand::{Rng, RngCore};

use super::embed::time_embed_into;
use crate::error::{Error, Result};
use crate::sde::{DoobField, DriftField};

const SELU_ALPHA: f64 = 1.673_263_242_354_377_3;
const SELU_SCALE: f64 = 1.050_700_987_355_480_5;
const LEAKY_SLOPE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Selu,
    Silu,
    Relu,
    LeakyRelu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Selu => SELU_SCALE * if z > 0.0 { z } else { SELU_ALPHA * z.exp_m1() },
            Activation::Silu => z / (1.0 + (-z).exp()),
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu => {
                if z > 0.0 {
                    z
                } else {
                    LEAKY_SLOPE * z
                }
            }
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Selu => SELU_SCALE * if z > 0.0 { 1.0 } else { SELU_ALPHA * z.exp() },
            Activation::Silu => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 + z * (1.0 - s))
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Selu => "selu",
            Activation::Silu => "silu",
            Activation::Relu => "relu",
            Activation::LeakyRelu => "leaky_relu",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "selu" => Activation::Selu,
            "silu" => Activation::Silu,
            "relu" => Activation::Relu,
            "leaky_relu" => Activation::LeakyRelu,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown activation {other:?} (expected selu, silu, relu or leaky_relu)"
                )))
            }
        })
    }
}

/// Fixed affine maps around the trainable layers: states enter as
/// `(x - center) / scale`, raw outputs leave multiplied by `output_scale`,
/// and a drift fed in as conditioning is divided by `output_scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalization {
    pub center: Vec<f64>,
    pub scale: f64,
    pub output_scale: f64,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self {
            center: vec![0.0; dim],
            scale: 1.0,
            output_scale: 1.0,
        }
    }
}

/// Architecture of one network: an `x` encoder and a sinusoidal-time encoder
/// whose outputs are concatenated and fed to a head MLP.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpSpec {
    pub state_dim: usize,
    /// Width of the extra conditioning input (the drift, for the Doob network).
    pub cond_dim: usize,
    pub hidden_dim: usize,
    pub time_embed_dim: usize,
    pub x_layers: usize,
    pub t_layers: usize,
    pub head_layers: usize,
    pub activation: Activation,
    pub dropout: f64,
    pub normalization: Normalization,
}

impl MlpSpec {
    pub fn new(
        state_dim: usize,
        cond_dim: usize,
        hidden_dim: usize,
        time_embed_dim: usize,
    ) -> Self {
        Self {
            state_dim,
            cond_dim,
            hidden_dim,
            time_embed_dim,
            x_layers: 3,
            t_layers: 2,
            head_layers: 3,
            activation: Activation::Selu,
            dropout: 0.1,
            normalization: Normalization::identity(state_dim),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.state_dim == 0 || self.hidden_dim == 0 {
            return bad("network dimensions must be positive".into());
        }
        if self.x_layers == 0 || self.t_layers == 0 || self.head_layers == 0 {
            return bad("every block needs at least one layer".into());
        }
        if self.time_embed_dim < 2 || !self.time_embed_dim.is_multiple_of(2) {
            return bad(format!(
                "time_embed_dim must be even and >= 2, got {}",
                self.time_embed_dim
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        let n = &self.normalization;
        if n.center.len() != self.state_dim {
            return Err(Error::DimensionMismatch {
                expected: self.state_dim,
                got: n.center.len(),
            });
        }
        if !(n.scale > 0.0
            && n.scale.is_finite()
            && n.output_scale > 0.0
            && n.output_scale.is_finite())
            || n.center.iter().any(|c| !c.is_finite())
        {
            return bad("normalization constants must be finite and scales positive".into());
        }
        Ok(())
    }

    /// Layer table in storage order: x encoder, time encoder, head.
    pub fn layer_shapes(&self) -> Vec<LayerShape> {
        let h = self.hidden_dim;
        let mut dims = Vec::new();
        let mut fan_in = self.state_dim + self.cond_dim;
        for _ in 0..self.x_layers {
            dims.push((fan_in, h));
            fan_in = h;
        }
        fan_in = self.time_embed_dim;
        for _ in 0..self.t_layers {
            dims.push((fan_in, h));
            fan_in = h;
        }
        fan_in = 2 * h;
        for k in 0..self.head_layers {
            let out = if k + 1 == self.head_layers {
                self.state_dim
            } else {
                h
            };
            dims.push((fan_in, out));
            fan_in = out;
        }
        let mut offset = 0;
        dims.into_iter()
            .map(|(fan_in, fan_out)| {
                let shape = LayerShape {
                    fan_in,
                    fan_out,
                    offset,
                };
                offset += shape.n_params();
                shape
            })
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layer_shapes().iter().map(LayerShape::n_params).sum()
    }
}

/// A dense layer stored as a row-major `fan_in x fan_out` weight block
/// followed by `fan_out` biases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
    pub offset: usize,
}

impl LayerShape {
    pub fn n_params(&self) -> usize {
        self.fan_in * self.fan_out + self.fan_out
    }

    fn weight_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.fan_in * self.fan_out
    }

    fn bias_range(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.fan_in * self.fan_out;
        start..start + self.fan_out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    pub values: Vec<f64>,
    pub layers: Vec<LayerShape>,
}

impl ParamSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Dropout is applied only in training mode, with masks drawn from the
/// supplied generator.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut dyn RngCore),
}

/// Activations retained by a forward pass for the backward pass.
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    masks: Vec<Option<Array2<f64>>>,
}

impl ForwardCache {
    /// Pre-activation values of every layer, in layer order.
    pub fn pre_activations(&self) -> &[Array2<f64>] {
        &self.pre
    }

    /// True when some hidden pre-activation has a different sign in `other`,
    /// i.e. a finite difference between the two passes straddles a kink of a
    /// piecewise activation.
    pub fn sign_pattern_differs(&self, other: &ForwardCache) -> bool {
        let hidden = self.pre.len().saturating_sub(1);
        self.pre[..hidden]
            .iter()
            .zip(&other.pre[..hidden])
            .any(|(a, b)| a.iter().zip(b).any(|(x, y)| (*x > 0.0) != (*y > 0.0)))
    }
}

pub struct Gradients {
    pub params: Vec<f64>,
    pub state: Array2<f64>,
    pub cond: Option<Array2<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    params: ParamSet,
}

impl Mlp {
    /// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases, and an
    /// all-zero final layer so the network starts as the zero function.
    pub fn new<R: RngCore + ?Sized>(spec: MlpSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let layers = spec.layer_shapes();
        let mut values = vec![0.0; layers.iter().map(LayerShape::n_params).sum()];
        for layer in &layers[..layers.len() - 1] {
            let bound = (1.0 / layer.fan_in as f64).sqrt();
            for w in &mut values[layer.weight_range()] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(Self {
            spec,
            params: ParamSet { values, layers },
        })
    }

    pub fn from_params(spec: MlpSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        let layers = spec.layer_shapes();
        let expected: usize = layers.iter().map(LayerShape::n_params).sum();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            spec,
            params: ParamSet { values, layers },
        })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params.values
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                expected: self.params.len(),
                got: values.len(),
            });
        }
        self.params.values.copy_from_slice(values);
        Ok(())
    }

    fn weights(&self, layer: &LayerShape) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape(
            (layer.fan_in, layer.fan_out),
            &self.params.values[layer.weight_range()],
        )
        .expect("layer table matches parameter vector")
    }

    /// Evaluate on a batch: row `i` of `x` (and of `cond`) at time `t[i]`.
    pub fn forward(
        &self,
        t: &[f64],
        x: ArrayView2<f64>,
        cond: Option<ArrayView2<f64>>,
        mut mode: Mode<'_>,
    ) -> Result<(Array2<f64>, ForwardCache)> {
        let spec = &self.spec;
        let batch = x.nrows();
        if x.ncols() != spec.state_dim {
            return Err(Error::DimensionMismatch {
                expected: spec.state_dim,
                got: x.ncols(),
            });
        }
        if t.len() != batch {
            return Err(Error::DimensionMismatch {
                expected: batch,
                got: t.len(),
            });
        }
        let norm = &spec.normalization;
        let mut input = Array2::zeros((batch, spec.state_dim + spec.cond_dim));
        for (mut row, xr) in input.outer_iter_mut().zip(x.outer_iter()) {
            for j in 0..spec.state_dim {
                row[j] = (xr[j] - norm.center[j]) / norm.scale;
            }
        }
        match (spec.cond_dim, cond) {
            (0, _) => {}
            (c, Some(cond)) if cond.dim() == (batch, c) => {
                input
                    .slice_mut(s![.., spec.state_dim..])
                    .assign(&(&cond / norm.output_scale));
            }
            (c, Some(cond)) => {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    got: cond.ncols(),
                })
            }
            (_, None) => {
                return Err(Error::InvalidArgument(
                    "network expects a conditioning input".into(),
                ))
            }
        }

        let mut cache = ForwardCache {
            inputs: Vec::new(),
            pre: Vec::new(),
            masks: Vec::new(),
        };
        let layers = &self.params.layers;
        let (x_end, t_end) = (spec.x_layers, spec.x_layers + spec.t_layers);

        let mut h = input;
        for l in 0..x_end {
            h = self.hidden_layer(l, h, &mut mode, &mut cache)?;
        }
        let hx = h;

        let mut emb = Array2::zeros((batch, spec.time_embed_dim));
        for (mut row, &ti) in emb.outer_iter_mut().zip(t) {
            time_embed_into(ti, row.as_slice_mut().expect("standard layout"));
        }
        let mut h = emb;
        for l in x_end..t_end {
            h = self.hidden_layer(l, h, &mut mode, &mut cache)?;
        }
        let ht = h;

        let mut h = concatenate![Axis(1), hx, ht];
        for l in t_end..layers.len() - 1 {
            h = self.hidden_layer(l, h, &mut mode, &mut cache)?;
        }
        let last = layers.len() - 1;
        let z = self.affine(last, &h);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteActivation { layer: last });
        }
        cache.inputs.push(h);
        cache.masks.push(None);
        let out = &z * norm.output_scale;
        cache.pre.push(z);
        Ok((out, cache))
    }

    /// Eval-mode forward pass.
    pub fn predict(
        &self,
        t: &[f64],
        x: ArrayView2<f64>,
        cond: Option<ArrayView2<f64>>,
    ) -> Result<Array2<f64>> {
        self.forward(t, x, cond, Mode::Eval).map(|(out, _)| out)
    }

    fn affine(&self, l: usize, h: &Array2<f64>) -> Array2<f64> {
        let layer = &self.params.layers[l];
        let bias = ndarray::ArrayView1::from(&self.params.values[layer.bias_range()]);
        h.dot(&self.weights(layer)) + bias
    }

    fn hidden_layer(
        &self,
        l: usize,
        h: Array2<f64>,
        mode: &mut Mode<'_>,
        cache: &mut ForwardCache,
    ) -> Result<Array2<f64>> {
        let z = self.affine(l, &h);
        let act = self.spec.activation;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteActivation { layer: l });
        }
        let mut a = z.mapv(|v| act.apply(v));
        let mask = match mode {
            Mode::Train(rng) if self.spec.dropout > 0.0 => {
                let p = self.spec.dropout;
                let keep = 1.0 / (1.0 - p);
                let mask = Array2::from_shape_simple_fn(a.raw_dim(), || {
                    if rng.random::<f64>() < p {
                        0.0
                    } else {
                        keep
                    }
                });
                a *= &mask;
                Some(mask)
            }
            _ => None,
        };
        cache.inputs.push(h);
        cache.pre.push(z);
        cache.masks.push(mask);
        Ok(a)
    }

    /// Reverse-mode pass: gradients of `sum(dout ⊙ output)` with respect to
    /// the parameters, the state input and the conditioning input.
    pub fn backward(&self, cache: &ForwardCache, dout: ArrayView2<f64>) -> Gradients {
        let spec = &self.spec;
        let layers = &self.params.layers;
        let mut grads = vec![0.0; self.params.len()];
        let (x_end, t_end) = (spec.x_layers, spec.x_layers + spec.t_layers);
        let last = layers.len() - 1;

        let head_in = self.backprop_range(
            t_end..layers.len(),
            dout.mapv(|v| v * spec.normalization.output_scale),
            cache,
            &mut grads,
            last,
        );
        let h = spec.hidden_dim;
        let d_hx = head_in.slice(s![.., ..h]).to_owned();
        let d_ht = head_in.slice(s![.., h..]).to_owned();
        self.backprop_range(x_end..t_end, d_ht, cache, &mut grads, last);
        let d_input = self.backprop_range(0..x_end, d_hx, cache, &mut grads, last);

        let norm = &spec.normalization;
        let state = d_input
            .slice(s![.., ..spec.state_dim])
            .mapv(|v| v / norm.scale);
        let cond = (spec.cond_dim > 0).then(|| {
            d_input
                .slice(s![.., spec.state_dim..])
                .mapv(|v| v / norm.output_scale)
        });
        Gradients {
            params: grads,
            state,
            cond,
        }
    }

    /// Backpropagate `d_out` (gradient w.r.t. the output of the last layer in
    /// `range`) down to the input of its first layer.
    fn backprop_range(
        &self,
        range: std::ops::Range<usize>,
        mut d_out: Array2<f64>,
        cache: &ForwardCache,
        grads: &mut [f64],
        final_layer: usize,
    ) -> Array2<f64> {
        let act = self.spec.activation;
        for l in range.rev() {
            let layer = &self.params.layers[l];
            let dz = if l == final_layer {
                d_out
            } else {
                if let Some(mask) = &cache.masks[l] {
                    d_out *= mask;
                }
                ndarray::Zip::from(&mut d_out)
                    .and(&cache.pre[l])
                    .for_each(|g, &z| *g *= act.derivative(z));
                d_out
            };
            let input = &cache.inputs[l];
            let mut gw = ArrayViewMut2::from_shape(
                (layer.fan_in, layer.fan_out),
                &mut grads[layer.weight_range()],
            )
            .expect("layer table matches gradient vector");
            gw.assign(&input.t().dot(&dz));
            for (g, s) in grads[layer.bias_range()]
                .iter_mut()
                .zip(dz.sum_axis(Axis(0)))
            {
                *g = s;
            }
            d_out = dz.dot(&self.weights(layer).t());
        }
        d_out
    }
}

/// The drift network `b(t, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftModel(pub Mlp);

/// The Doob-score network `m(t, x, b)`; when built without conditioning it
/// ignores the drift input and reduces to `m(t, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DoobModel(pub Mlp);

impl DriftModel {
    pub fn new<R: RngCore + ?Sized>(spec: MlpSpec, rng: &mut R) -> Result<Self> {
        if spec.cond_dim != 0 {
            return Err(Error::InvalidArgument(
                "the drift network takes no conditioning input".into(),
            ));
        }
        Mlp::new(spec, rng).map(Self)
    }
}

impl DoobModel {
    pub fn new<R: RngCore + ?Sized>(spec: MlpSpec, rng: &mut R) -> Result<Self> {
        if spec.cond_dim != 0 && spec.cond_dim != spec.state_dim {
            return Err(Error::DimensionMismatch {
                expected: spec.state_dim,
                got: spec.cond_dim,
            });
        }
        Mlp::new(spec, rng).map(Self)
    }

    pub fn uses_drift(&self) -> bool {
        self.0.spec().cond_dim > 0
    }
}

pub fn forward_drift(
    model: &DriftModel,
    t: &[f64],
    x: ArrayView2<f64>,
    mode: Mode<'_>,
) -> Result<(Array2<f64>, ForwardCache)> {
    model.0.forward(t, x, None, mode)
}

/// `b_value` is an input only: gradients of anything computed from the
/// output never reach the drift network's parameters through it.
pub fn forward_doob(
    model: &DoobModel,
    t: &[f64],
    x: ArrayView2<f64>,
    b_value: ArrayView2<f64>,
    mode: Mode<'_>,
) -> Result<(Array2<f64>, ForwardCache)> {
    let cond = model.uses_drift().then_some(b_value);
    model.0.forward(t, x, cond, mode)
}

impl DriftField for DriftModel {
    fn eval_batch(&self, t: f64, states: ArrayView2<f64>) -> Result<Array2<f64>> {
        let ts = vec![t; states.nrows()];
        self.0.predict(&ts, states, None)
    }
}

impl DoobField for DoobModel {
    fn eval_batch(
        &self,
        t: f64,
        states: ArrayView2<f64>,
        drift: ArrayView2<f64>,
        _targets: ArrayView2<f64>,
    ) -> Result<Array2<f64>> {
        let ts = vec![t; states.nrows()];
        forward_doob(self, &ts, states, drift, Mode::Eval).map(|(out, _)| out)
    }
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;
    use rand::Rng;

    use super::*;
    use crate::rng::seeded;

    fn small_spec(cond_dim: usize, activation: Activation) -> MlpSpec {
        let mut spec = MlpSpec::new(3, cond_dim, 8, 6);
        spec.activation = activation;
        spec.normalization = Normalization {
            center: vec![0.1, -0.2, 0.3],
            scale: 1.7,
            output_scale: 2.5,
        };
        spec
    }

    fn randomized(spec: MlpSpec, seed: u64) -> Mlp {
        let mut rng = seeded(seed);
        let mut net = Mlp::new(spec, &mut rng).unwrap();
        for p in net.params_mut() {
            *p = rng.random_range(-0.8..0.8);
        }
        net
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = seeded(seed);
        Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.5..1.5))
    }

    fn relative_error(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-7)
    }

    /// `sum(w ⊙ f(params))` for a fixed cotangent `w`, with a fixed dropout
    /// seed when `train` is set.
    fn scalar_output(
        net: &Mlp,
        t: &[f64],
        x: &Array2<f64>,
        c: Option<&Array2<f64>>,
        w: &Array2<f64>,
        train: Option<u64>,
    ) -> (f64, ForwardCache) {
        let (out, cache) = match train {
            Some(seed) => {
                let mut rng = seeded(seed);
                net.forward(t, x.view(), c.map(|c| c.view()), Mode::Train(&mut rng))
                    .unwrap()
            }
            None => net
                .forward(t, x.view(), c.map(|c| c.view()), Mode::Eval)
                .unwrap(),
        };
        ((&out * w).sum(), cache)
    }

    /// Central difference of `f` at step `h`, or `None` when the two probes
    /// sit on different sides of an activation kink.
    fn central(f: impl Fn(f64) -> (f64, ForwardCache), h: f64) -> Option<f64> {
        let (up, cu) = f(h);
        let (down, cd) = f(-h);
        (!cu.sign_pattern_differs(&cd)).then(|| (up - down) / (2.0 * h))
    }

    fn check_gradients(spec: MlpSpec, seed: u64, train: Option<u64>) {
        let net = randomized(spec.clone(), seed);
        let batch = 5;
        let t: Vec<f64> = (0..batch).map(|i| 0.13 + 0.17 * i as f64).collect();
        let x = random_matrix(batch, 3, seed + 1);
        let c = (spec.cond_dim > 0).then(|| random_matrix(batch, spec.cond_dim, seed + 2));
        let w = random_matrix(batch, 3, seed + 3);
        let (_, cache) = match train {
            Some(s) => {
                let mut rng = seeded(s);
                net.forward(
                    &t,
                    x.view(),
                    c.as_ref().map(|c| c.view()),
                    Mode::Train(&mut rng),
                )
                .unwrap()
            }
            None => net
                .forward(&t, x.view(), c.as_ref().map(|c| c.view()), Mode::Eval)
                .unwrap(),
        };
        let grads = net.backward(&cache, w.view());

        let h = 1e-4;
        let mut rng = seeded(seed + 4);
        let mut checked = 0;
        for _ in 0..200 {
            let dir: Vec<f64> = (0..net.params().len())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let analytic: f64 = grads.params.iter().zip(&dir).map(|(g, d)| g * d).sum();
            let probe = |step: f64| {
                let mut n = net.clone();
                for (p, d) in n.params_mut().iter_mut().zip(&dir) {
                    *p += step * d;
                }
                scalar_output(&n, &t, &x, c.as_ref(), &w, train)
            };
            if let Some(fd) = central(probe, h) {
                assert!(
                    relative_error(analytic, fd) < 1e-4,
                    "params: {analytic} vs {fd}"
                );
                checked += 1;
            }
            if checked == 20 {
                break;
            }
        }
        assert_eq!(checked, 20);

        let mut checked = 0;
        for k in 0..50 {
            let dir = random_matrix(batch, 3, seed + 5 + 100 * k);
            let analytic = (&grads.state * &dir).sum();
            let probe =
                |step: f64| scalar_output(&net, &t, &(&x + &(&dir * step)), c.as_ref(), &w, train);
            if let Some(fd) = central(probe, h) {
                assert!(
                    relative_error(analytic, fd) < 1e-4,
                    "state: {analytic} vs {fd}"
                );
                checked += 1;
            }
            if let (Some(c), Some(gc)) = (&c, &grads.cond) {
                let analytic = (gc * &dir).sum();
                let probe =
                    |step: f64| scalar_output(&net, &t, &x, Some(&(c + &(&dir * step))), &w, train);
                if let Some(fd) = central(probe, h) {
                    assert!(
                        relative_error(analytic, fd) < 1e-4,
                        "cond: {analytic} vs {fd}"
                    );
                }
            }
        }
        assert!(checked >= 20);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (k, act) in [
            Activation::Selu,
            Activation::Silu,
            Activation::Relu,
            Activation::LeakyRelu,
        ]
        .into_iter()
        .enumerate()
        {
            let seed = 100 + 10 * k as u64;
            check_gradients(small_spec(0, act), seed, None);
            check_gradients(small_spec(3, act), seed + 1, None);
            check_gradients(small_spec(3, act), seed + 2, Some(77));
        }
    }

    #[test]
    fn zero_final_layer_gives_zero_output() {
        let mut rng = seeded(1);
        let net = DriftModel::new(small_spec(0, Activation::Selu), &mut rng).unwrap();
        let x = random_matrix(4, 3, 2);
        let (out, _) = forward_drift(
            &net,
            &[0.0, 0.3, 0.6, 0.99],
            x.view(),
            Mode::Train(&mut rng),
        )
        .unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
        let doob = DoobModel::new(small_spec(3, Activation::Silu), &mut rng).unwrap();
        let (out, _) = forward_doob(&doob, &[0.1; 4], x.view(), x.view(), Mode::Eval).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn eval_mode_is_deterministic_and_dropout_is_seeded() {
        let net = randomized(small_spec(0, Activation::Selu), 9);
        let x = random_matrix(6, 3, 10);
        let t = [0.5; 6];
        assert_eq!(
            net.predict(&t, x.view(), None).unwrap(),
            net.predict(&t, x.view(), None).unwrap()
        );
        let run = |seed| {
            net.forward(&t, x.view(), None, Mode::Train(&mut seeded(seed)))
                .unwrap()
                .0
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
        assert_ne!(run(3), net.predict(&t, x.view(), None).unwrap());
    }

    #[test]
    fn doob_without_drift_ignores_it() {
        let net = DoobModel(randomized(small_spec(0, Activation::Selu), 12));
        assert!(!net.uses_drift());
        let x = random_matrix(4, 3, 13);
        let b = random_matrix(4, 3, 14);
        let t = [0.2; 4];
        let with_b = forward_doob(&net, &t, x.view(), b.view(), Mode::Eval)
            .unwrap()
            .0;
        let zero_b = forward_doob(&net, &t, x.view(), Array2::zeros((4, 3)).view(), Mode::Eval)
            .unwrap()
            .0;
        assert_eq!(with_b, zero_b);

        let conditioned = DoobModel(randomized(small_spec(3, Activation::Selu), 12));
        let with_b = forward_doob(&conditioned, &t, x.view(), b.view(), Mode::Eval)
            .unwrap()
            .0;
        let zero_b = forward_doob(
            &conditioned,
            &t,
            x.view(),
            Array2::zeros((4, 3)).view(),
            Mode::Eval,
        )
        .unwrap()
        .0;
        assert_ne!(with_b, zero_b);
    }

    #[test]
    fn non_finite_activation_names_layer() {
        let mut net = randomized(small_spec(0, Activation::Relu), 20);
        let shapes = net.params().layers.clone();
        let second = shapes[1];
        net.params_mut()[second.offset + second.fan_in * second.fan_out] = f64::NAN;
        let x = random_matrix(2, 3, 21);
        match net.predict(&[0.1, 0.2], x.view(), None) {
            Err(Error::NonFiniteActivation { layer }) => assert_eq!(layer, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shape_errors() {
        let net = randomized(small_spec(3, Activation::Selu), 30);
        let x = random_matrix(2, 3, 31);
        assert!(net.predict(&[0.1], x.view(), Some(x.view())).is_err());
        assert!(net.predict(&[0.1, 0.2], x.view(), None).is_err());
        assert!(net
            .predict(&[0.1, 0.2], random_matrix(2, 2, 1).view(), Some(x.view()))
            .is_err());
        let mut bad = small_spec(0, Activation::Selu);
        bad.time_embed_dim = 5;
        assert!(bad.validate().is_err());
        bad.time_embed_dim = 4;
        bad.dropout = 1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn parameter_count_matches_layer_table() {
        let spec = MlpSpec::new(2, 2, 64, 64);
        let h = 64;
        let expected = (4 * h + h)
            + 2 * (h * h + h)
            + (64 * h + h)
            + (h * h + h)
            + (2 * h * h + h)
            + (h * h + h)
            + (h * 2 + 2);
        assert_eq!(spec.n_params(), expected);
        let layers = spec.layer_shapes();
        assert_eq!(layers.len(), 8);
        assert_eq!(
            layers.last().unwrap().offset + layers.last().unwrap().n_params(),
            expected
        );
    }
}
