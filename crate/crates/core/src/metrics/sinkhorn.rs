use ndarray::{Array2, ArrayView2};

use super::{check_cloud, check_same_dim, sq_dist};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinkhornOptions {
    pub eps: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        Self {
            eps: 0.1,
            max_iters: 5000,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SinkhornResult {
    /// `<P, C>` under the final plan.
    pub cost: f64,
    pub plan: Array2<f64>,
    pub iterations: usize,
    /// `sum_i |row_sum_i - 1/n|`; columns are exact after each sweep.
    pub marginal_violation: f64,
    pub converged: bool,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Entropic optimal transport between uniform empirical measures with the
/// squared Euclidean cost, solved by log-domain Sinkhorn iterations.
///
/// The regularisation is annealed geometrically from the largest cost down
/// to `eps`, warm-starting the dual potentials at every stage; only the
/// final stage has to meet `tol`.
pub fn sinkhorn_w(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    options: SinkhornOptions,
) -> Result<SinkhornResult> {
    check_cloud("first point cloud", x, 1)?;
    check_cloud("second point cloud", y, 1)?;
    check_same_dim(x, y)?;
    let SinkhornOptions {
        eps,
        max_iters,
        tol,
    } = options;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let (n, m) = (x.nrows(), y.nrows());
    let cost = Array2::from_shape_fn((n, m), |(i, j)| sq_dist(x.row(i), y.row(j)));
    let log_a = -(n as f64).ln();
    let log_b = -(m as f64).ln();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];

    let c_max = cost.iter().copied().fold(0.0, f64::max);
    let mut stages = Vec::new();
    let mut e = c_max;
    while e > eps {
        stages.push(e);
        e *= 0.5;
    }
    stages.push(eps);

    let mut iterations = 0;
    let mut violation = f64::INFINITY;
    for (s, &e) in stages.iter().enumerate() {
        let last = s + 1 == stages.len();
        let stage_tol = if last { tol } else { tol.max(1e-3) };
        let mut stage_iters = 0;
        loop {
            for i in 0..n {
                let row = cost.row(i);
                f[i] = e * log_a - e * log_sum_exp((0..m).map(|j| (g[j] - row[j]) / e));
            }
            for j in 0..m {
                let col = cost.column(j);
                g[j] = e * log_b - e * log_sum_exp((0..n).map(|i| (f[i] - col[i]) / e));
            }
            iterations += 1;
            stage_iters += 1;
            violation = (0..n)
                .map(|i| {
                    let row = cost.row(i);
                    let mass: f64 = (0..m).map(|j| ((f[i] + g[j] - row[j]) / e).exp()).sum();
                    (mass - 1.0 / n as f64).abs()
                })
                .sum();
            if violation < stage_tol || iterations >= max_iters || (!last && stage_iters >= 200) {
                break;
            }
        }
        if iterations >= max_iters {
            break;
        }
    }
    let plan = Array2::from_shape_fn((n, m), |(i, j)| ((f[i] + g[j] - cost[[i, j]]) / eps).exp());
    let total = (&plan * &cost).sum();
    Ok(SinkhornResult {
        cost: total,
        plan,
        iterations,
        marginal_violation: violation,
        converged: violation < tol,
    })
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    #[test]
    fn single_points() {
        let r = sinkhorn_w(
            array![[0.5, 0.5]].view(),
            array![[0.5, 0.5]].view(),
            SinkhornOptions::default(),
        )
        .unwrap();
        assert_eq!(r.cost, 0.0);
        assert!((r.plan[[0, 0]] - 1.0).abs() < 1e-12);
        let r = sinkhorn_w(
            array![[0.0]].view(),
            array![[1.0]].view(),
            SinkhornOptions::default(),
        )
        .unwrap();
        assert!((r.cost - 1.0).abs() < 1e-12);
        assert!((r.plan[[0, 0]] - 1.0).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn two_by_two_against_vertices() {
        // the polytope of 2x2 uniform couplings has two vertices: the identity
        // and the swap, each scaled by 1/2
        let x = array![[0.0], [1.0]];
        let opts = SinkhornOptions {
            eps: 0.01,
            ..Default::default()
        };
        let r = sinkhorn_w(x.view(), x.view(), opts).unwrap();
        let identity_cost = 0.0;
        let swap_cost = 1.0;
        assert!(identity_cost < swap_cost);
        assert!(r.cost < 0.02);
        assert!((r.plan[[0, 0]] - 0.5).abs() < 1e-2 && (r.plan[[1, 1]] - 0.5).abs() < 1e-2);
        assert!(r.plan[[0, 1]].abs() < 1e-2 && r.plan[[1, 0]].abs() < 1e-2);
    }

    #[test]
    fn plan_is_feasible() {
        let x = array![[0.0, 0.1], [1.0, 0.3], [0.2, 0.9]];
        let y = array![[0.5, 0.5], [0.9, 0.1], [0.3, 0.3], [0.0, 1.0]];
        let r = sinkhorn_w(x.view(), y.view(), SinkhornOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.plan.iter().all(|&p| p >= 0.0));
        for row in r.plan.rows() {
            assert!((row.sum() - 1.0 / 3.0).abs() < 1e-6);
        }
        for col in r.plan.columns() {
            assert!((col.sum() - 0.25).abs() < 1e-6);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let x = array![[0.0], [1.0], [2.5]];
        let y = array![[0.2], [1.7]];
        let r = sinkhorn_w(
            x.view(),
            y.view(),
            SinkhornOptions {
                eps: 1e-3,
                max_iters: 2,
                tol: 1e-12,
            },
        )
        .unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
        assert!(sinkhorn_w(
            x.view(),
            y.view(),
            SinkhornOptions {
                eps: 0.0,
                ..Default::default()
            }
        )
        .is_err());
    }
}
