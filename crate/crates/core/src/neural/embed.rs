use crate::error::{Error, Result};

/// Sinusoidal time features: `[sin(t ω_0), cos(t ω_0), sin(t ω_1), ...]` with
/// `ω_i = 10000^(-2i/dim)`.
pub fn time_embed(t: f64, dim: usize) -> Result<Vec<f64>> {
    if dim < 2 || !dim.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "time embedding dimension must be even and >= 2, got {dim}"
        )));
    }
    let mut out = vec![0.0; dim];
    time_embed_into(t, &mut out);
    Ok(out)
}

pub(crate) fn time_embed_into(t: f64, out: &mut [f64]) {
    let dim = out.len();
    for (i, pair) in out.chunks_exact_mut(2).enumerate() {
        let omega = 10000f64.powf(-2.0 * i as f64 / dim as f64);
        let (s, c) = (t * omega).sin_cos();
        pair[0] = s;
        pair[1] = c;
    }
}
