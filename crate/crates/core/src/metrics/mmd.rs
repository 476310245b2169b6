use ndarray::ArrayView2;
use rayon::prelude::*;

use super::{check_cloud, check_same_dim};
use crate::error::{Error, Result};

pub const DEFAULT_MMD_SCALES: [f64; 6] = [2.0, 1.0, 0.5, 0.1, 0.01, 0.005];

/// Below this exponent `exp` returns exactly zero, so the term is skipped.
const UNDERFLOW: f64 = -750.0;

/// Kernel sums for every scale, over all pairs (`within = false`) or over
/// ordered pairs `i != j` of one cloud (`within = true`, computed on `j > i`
/// and doubled). Rows are reduced in order.
fn kernel_sums(x: ArrayView2<f64>, y: ArrayView2<f64>, scales: &[f64], within: bool) -> Vec<f64> {
    let coef: Vec<f64> = scales.iter().map(|s| -1.0 / (2.0 * s * s)).collect();
    let (x, y) = (x.as_standard_layout(), y.as_standard_layout());
    let d = x.ncols();
    let (xs, ys) = (
        x.as_slice().expect("standard layout"),
        y.as_slice().expect("standard layout"),
    );
    let rows: Vec<Vec<f64>> = (0..x.nrows())
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![0.0; scales.len()];
            let a = &xs[i * d..(i + 1) * d];
            let first = if within { i + 1 } else { 0 };
            for b in ys.chunks_exact(d).skip(first) {
                let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                for (s, c) in acc.iter_mut().zip(&coef) {
                    let e = c * d2;
                    if e > UNDERFLOW {
                        *s += e.exp();
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; scales.len()];
    for r in rows {
        for (t, v) in total.iter_mut().zip(r) {
            *t += v;
        }
    }
    if within {
        total.iter_mut().for_each(|t| *t *= 2.0);
    }
    total
}

/// Unbiased squared-MMD estimate for each RBF length scale `σ`, with kernel
/// `exp(-|a - b|^2 / (2σ^2))`.
pub fn mmd_per_scale(x: ArrayView2<f64>, y: ArrayView2<f64>, scales: &[f64]) -> Result<Vec<f64>> {
    check_cloud("first point cloud", x, 2)?;
    check_cloud("second point cloud", y, 2)?;
    check_same_dim(x, y)?;
    if scales.is_empty() || scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "MMD scales must be positive, got {scales:?}"
        )));
    }
    let (n, m) = (x.nrows() as f64, y.nrows() as f64);
    let xx = kernel_sums(x, x, scales, true);
    let yy = kernel_sums(y, y, scales, true);
    // fixed summation order for the cross term so mmd(x, y) == mmd(y, x) bit for bit
    let swap = (x.nrows(), x.ncols())
        .cmp(&(y.nrows(), y.ncols()))
        .then_with(|| {
            x.iter()
                .zip(y.iter())
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    let xy = if swap.is_gt() {
        kernel_sums(y, x, scales, false)
    } else {
        kernel_sums(x, y, scales, false)
    };
    Ok((0..scales.len())
        .map(|k| xx[k] / (n * (n - 1.0)) + yy[k] / (m * (m - 1.0)) - 2.0 * xy[k] / (n * m))
        .collect())
}

/// Scale-averaged unbiased squared MMD. May be slightly negative.
pub fn mmd(x: ArrayView2<f64>, y: ArrayView2<f64>, scales: &[f64]) -> Result<f64> {
    let per = mmd_per_scale(x, y, scales)?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}
