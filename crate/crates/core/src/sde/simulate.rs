use ndarray::{Array2, Array3, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use super::schedule::{DiffusivitySchedule, TimeGrid};
use super::trajectory::TrajectoryBatch;
use crate::error::{Error, Result};
use crate::rng::NoiseKey;

/// A time-dependent drift `b_t(x)` evaluated on a batch of states (one per row).
///
/// The simulated SDE is `dX = g_t^2 b_t(X) dt + g_t dW`, so implementors
/// return `b` without the `g_t^2` factor.
pub trait DriftField: Sync {
    fn eval_batch(&self, t: f64, states: ArrayView2<f64>) -> Result<Array2<f64>>;
}

/// The Doob correction `m(t, x, b)` added to a drift. `targets` holds the
/// endpoint each trajectory is conditioned on; learned networks ignore it,
/// analytic oracles use it.
pub trait DoobField: Sync {
    fn eval_batch(
        &self,
        t: f64,
        states: ArrayView2<f64>,
        drift: ArrayView2<f64>,
        targets: ArrayView2<f64>,
    ) -> Result<Array2<f64>>;
}

pub struct ZeroDrift;

impl DriftField for ZeroDrift {
    fn eval_batch(&self, _t: f64, states: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(Array2::zeros(states.raw_dim()))
    }
}

impl DoobField for ZeroDrift {
    fn eval_batch(
        &self,
        _t: f64,
        states: ArrayView2<f64>,
        _drift: ArrayView2<f64>,
        _targets: ArrayView2<f64>,
    ) -> Result<Array2<f64>> {
        Ok(Array2::zeros(states.raw_dim()))
    }
}

/// Row-by-row drift from a closure `f(t, x, out)`.
pub struct PointwiseDrift<F>(pub F);

impl<F> DriftField for PointwiseDrift<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    fn eval_batch(&self, t: f64, states: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros(states.raw_dim());
        for (x, mut o) in states.outer_iter().zip(out.outer_iter_mut()) {
            let x = x.to_vec();
            (self.0)(t, &x, o.as_slice_mut().expect("standard layout"));
        }
        Ok(out)
    }
}

/// Doob correction from a closure `f(t, x, b, x1, out)`.
impl<F> DoobField for PointwiseDrift<F>
where
    F: Fn(f64, &[f64], &[f64], &[f64], &mut [f64]) + Sync,
{
    fn eval_batch(
        &self,
        t: f64,
        states: ArrayView2<f64>,
        drift: ArrayView2<f64>,
        targets: ArrayView2<f64>,
    ) -> Result<Array2<f64>> {
        let mut out = Array2::zeros(states.raw_dim());
        for (i, mut o) in out.outer_iter_mut().enumerate() {
            let x = states.row(i).to_vec();
            let b = drift.row(i).to_vec();
            let x1 = targets.row(i).to_vec();
            (self.0)(t, &x, &b, &x1, o.as_slice_mut().expect("standard layout"));
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SimOptions {
    /// Inject diffusion noise on the step that lands on `t = 1`. Off by
    /// default: the final step then returns the drift-predicted endpoint.
    pub final_step_noise: bool,
}

/// Euler–Maruyama over `grid`, starting from the rows of `x0` at `t = 0`.
pub fn simulate_sde(
    x0: ArrayView2<f64>,
    drift: &dyn DriftField,
    schedule: &DiffusivitySchedule,
    grid: &TimeGrid,
    key: NoiseKey,
) -> Result<TrajectoryBatch> {
    integrate(
        x0,
        grid.times(),
        schedule,
        key,
        SimOptions::default(),
        |_, t, x| drift.eval_batch(t, x),
    )
}

/// Euler–Maruyama from `t0` to 1 in `n_steps` equal steps.
pub fn simulate_sde_from(
    x0: ArrayView2<f64>,
    t0: f64,
    n_steps: usize,
    drift: &dyn DriftField,
    schedule: &DiffusivitySchedule,
    key: NoiseKey,
    options: SimOptions,
) -> Result<TrajectoryBatch> {
    if !(0.0..1.0).contains(&t0) {
        return Err(Error::TimeDomain { t: t0 });
    }
    if n_steps == 0 {
        return Err(Error::InvalidArgument(
            "simulation needs at least one step".into(),
        ));
    }
    let times: Vec<f64> = (0..=n_steps)
        .map(|k| {
            if k == n_steps {
                1.0
            } else {
                t0 + (1.0 - t0) * k as f64 / n_steps as f64
            }
        })
        .collect();
    integrate(x0, times, schedule, key, options, |_, t, x| {
        drift.eval_batch(t, x)
    })
}

/// Simulate the conditioned SDE whose drift is `b + m`, where `m` is the Doob
/// correction toward the matching row of `x1`.
pub fn simulate_conditioned(
    x0: ArrayView2<f64>,
    x1: ArrayView2<f64>,
    drift: &dyn DriftField,
    doob: &dyn DoobField,
    schedule: &DiffusivitySchedule,
    grid: &TimeGrid,
    key: NoiseKey,
) -> Result<TrajectoryBatch> {
    if x0.dim() != x1.dim() {
        return Err(Error::InvalidArgument(format!(
            "start and target batches differ in shape: {:?} vs {:?}",
            x0.dim(),
            x1.dim()
        )));
    }
    integrate(
        x0,
        grid.times(),
        schedule,
        key,
        SimOptions::default(),
        |_, t, x| {
            let b = drift.eval_batch(t, x)?;
            let m = doob.eval_batch(t, x, b.view(), x1)?;
            Ok(b + m)
        },
    )
}

fn integrate<F>(
    x0: ArrayView2<f64>,
    times: Vec<f64>,
    schedule: &DiffusivitySchedule,
    key: NoiseKey,
    options: SimOptions,
    mut drift: F,
) -> Result<TrajectoryBatch>
where
    F: FnMut(usize, f64, ArrayView2<f64>) -> Result<Array2<f64>>,
{
    let (n, d) = x0.dim();
    let n_steps = times.len() - 1;
    let mut states = Array3::zeros((n, n_steps + 1, d));
    states.index_axis_mut(Axis(1), 0).assign(&x0);
    let mut current = x0.as_standard_layout().into_owned();

    for k in 0..n_steps {
        let t = times[k];
        let dt = times[k + 1] - t;
        let b = drift(k, t, current.view())?;
        if b.dim() != (n, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: b.ncols(),
            });
        }
        if let Some(i) = b
            .outer_iter()
            .position(|row| row.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::NonFiniteDrift {
                step: k,
                t,
                state_norm: norm(current.row(i)),
            });
        }
        let g = schedule.g(t);
        let drift_scale = g * g * dt;
        let noise_scale = if k + 1 == n_steps && !options.final_step_noise {
            0.0
        } else {
            g * dt.sqrt()
        };
        let b = b.as_standard_layout();
        let b = b.as_slice().expect("standard layout");
        let cur = current.as_slice_mut().expect("standard layout");
        if d > 0 {
            cur.par_chunks_mut(d)
                .zip(b.par_chunks(d))
                .enumerate()
                .for_each(|(i, (x, bi))| {
                    let mut xi = vec![0.0; d];
                    if noise_scale != 0.0 {
                        key.fill_normal(i as u64, k as u64, &mut xi);
                    }
                    for j in 0..d {
                        x[j] += drift_scale * bi[j] + noise_scale * xi[j];
                    }
                });
        }
        states.index_axis_mut(Axis(1), k + 1).assign(&current);
    }
    Ok(TrajectoryBatch::new(states, times))
}

fn norm(x: ArrayView1<f64>) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use ndarray::{array, Array2};

    use super::*;
    use crate::sde::bridge::bridge_drift_target_into;

    fn unit() -> DiffusivitySchedule {
        DiffusivitySchedule::constant(1.0).unwrap()
    }

    #[test]
    fn no_noise_no_drift_is_constant() {
        let x0 = array![[0.5, -1.0], [2.0, 3.0]];
        let zero = DiffusivitySchedule::constant(0.0).unwrap();
        let batch = simulate_sde(
            x0.view(),
            &ZeroDrift,
            &zero,
            &TimeGrid::new(13).unwrap(),
            NoiseKey::new(1),
        )
        .unwrap();
        for k in 0..=13 {
            assert_eq!(batch.states().index_axis(Axis(1), k), x0);
        }
        let cond = simulate_conditioned(
            x0.view(),
            x0.view(),
            &ZeroDrift,
            &ZeroDrift,
            &zero,
            &TimeGrid::new(5).unwrap(),
            NoiseKey::new(2),
        )
        .unwrap();
        assert_eq!(cond.endpoints(), x0);
    }

    #[test]
    fn initial_row_is_exact_and_seed_determines_output() {
        let x0 = array![[0.1], [0.2], [0.3]];
        let grid = TimeGrid::new(20).unwrap();
        let a = simulate_sde(x0.view(), &ZeroDrift, &unit(), &grid, NoiseKey::new(5)).unwrap();
        let b = simulate_sde(x0.view(), &ZeroDrift, &unit(), &grid, NoiseKey::new(5)).unwrap();
        let c = simulate_sde(x0.view(), &ZeroDrift, &unit(), &grid, NoiseKey::new(6)).unwrap();
        assert_eq!(a.states().index_axis(Axis(1), 0), x0);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn brownian_endpoint_variance() {
        let n = 100_000;
        let x0 = Array2::zeros((n, 1));
        let grid = TimeGrid::new(100).unwrap();
        let batch = simulate_sde(x0.view(), &ZeroDrift, &unit(), &grid, NoiseKey::new(7)).unwrap();
        let end = batch.endpoints();
        let mean = end.sum() / n as f64;
        let var = end.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0).abs() < 0.03, "variance {var}");
    }

    #[test]
    fn bridge_drift_pins_the_endpoint() {
        let n = 2000;
        let x0 = Array2::zeros((n, 1));
        let s = unit();
        let drift = PointwiseDrift(|t: f64, x: &[f64], out: &mut [f64]| {
            bridge_drift_target_into(x, &[1.0], t, &unit(), out).unwrap()
        });
        let grid = TimeGrid::new(1000).unwrap();
        let batch = simulate_sde(x0.view(), &drift, &s, &grid, NoiseKey::new(8)).unwrap();
        let end = batch.endpoints();
        let mean = end.sum() / n as f64;
        let sd = (end.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
        assert!(sd <= 0.1, "sd {sd}");
    }

    #[test]
    fn final_step_noise_option() {
        let n = 20_000;
        let x0 = Array2::zeros((n, 1));
        let opts = SimOptions {
            final_step_noise: true,
        };
        let batch = simulate_sde_from(
            x0.view(),
            0.0,
            4,
            &ZeroDrift,
            &unit(),
            NoiseKey::new(9),
            opts,
        )
        .unwrap();
        let var = batch.endpoints().iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 0.05, "{var}");
        let batch = simulate_sde_from(
            x0.view(),
            0.0,
            4,
            &ZeroDrift,
            &unit(),
            NoiseKey::new(9),
            SimOptions::default(),
        )
        .unwrap();
        let var = batch.endpoints().iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var - 0.75).abs() < 0.05, "{var}");
    }

    #[test]
    fn non_finite_drift_is_reported() {
        let x0 = array![[1.0, 0.0], [3.0, 4.0]];
        let drift = PointwiseDrift(|t: f64, x: &[f64], out: &mut [f64]| {
            out[0] = if t > 0.5 && x[0] > 2.0 { f64::NAN } else { 0.0 };
            out[1] = 0.0;
        });
        let zero = DiffusivitySchedule::constant(0.0).unwrap();
        let err = simulate_sde(
            x0.view(),
            &drift,
            &zero,
            &TimeGrid::new(4).unwrap(),
            NoiseKey::new(1),
        )
        .unwrap_err();
        match err {
            Error::NonFiniteDrift {
                step, state_norm, ..
            } => {
                assert_eq!(step, 3);
                assert_eq!(state_norm, 5.0);
            }
            other => panic!("unexpected {other}"),
        }
    }
}
