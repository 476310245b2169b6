//! Distributional and alignment metrics. Every metric is deterministic.

mod aligned;
mod mmd;
mod sinkhorn;

pub use aligned::{ps_l2, rmsd};
pub use mmd::{mmd, mmd_per_scale, DEFAULT_MMD_SCALES};
pub use sinkhorn::{sinkhorn_w, SinkhornOptions, SinkhornResult};

use ndarray::ArrayView2;

use crate::error::{Error, Result};

fn check_cloud(name: &str, x: ArrayView2<f64>, min_rows: usize) -> Result<()> {
    if x.nrows() < min_rows {
        return Err(Error::InvalidArgument(format!(
            "{name} needs at least {min_rows} points, got {}",
            x.nrows()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{name} contains non-finite values"
        )));
    }
    Ok(())
}

fn check_same_dim(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<()> {
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            got: y.ncols(),
        });
    }
    Ok(())
}

fn sq_dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}
