use rand::Rng;
use rand_distr::StandardNormal;

use super::schedule::DiffusivitySchedule;
use crate::error::{Error, Result};

/// Relative guard on `beta_1 - beta_t` below which the bridge drift is refused.
pub const SINGULARITY_GUARD: f64 = 1e-6;

/// A point on the bridge between pair `pair_index`'s endpoints at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct BridgeSample {
    pub t: f64,
    pub x_t: Vec<f64>,
    pub pair_index: usize,
}

fn check_dims(x0: &[f64], x1: &[f64]) -> Result<()> {
    if x0.len() != x1.len() {
        return Err(Error::DimensionMismatch {
            expected: x0.len(),
            got: x1.len(),
        });
    }
    Ok(())
}

/// Mean vector and per-coordinate variance of the scaled Brownian bridge
/// pinned at `x0` (t = 0) and `x1` (t = 1):
/// `N(x0 + (β_t/β_1)(x1 - x0), β_t(β_1 - β_t)/β_1 · I)`.
pub fn bridge_marginal_moments(
    x0: &[f64],
    x1: &[f64],
    t: f64,
    schedule: &DiffusivitySchedule,
) -> Result<(Vec<f64>, f64)> {
    check_dims(x0, x1)?;
    let beta_t = schedule.cum_beta(t)?;
    let beta_1 = schedule.beta_1();
    if beta_1 <= 0.0 {
        return Err(Error::DegenerateSchedule);
    }
    let w = beta_t / beta_1;
    let mean = x0.iter().zip(x1).map(|(a, b)| a + w * (b - a)).collect();
    let var = (beta_t * (beta_1 - beta_t) / beta_1).max(0.0);
    Ok((mean, var))
}

/// Draw `X_t` from the scaled Brownian bridge between `x0` and `x1`.
/// The endpoints `t = 0` and `t = 1` are returned exactly.
pub fn bridge_marginal_sample<R: Rng + ?Sized>(
    x0: &[f64],
    x1: &[f64],
    t: f64,
    schedule: &DiffusivitySchedule,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (mut mean, var) = bridge_marginal_moments(x0, x1, t, schedule)?;
    if t == 0.0 {
        return Ok(x0.to_vec());
    }
    if t == 1.0 {
        return Ok(x1.to_vec());
    }
    let sd = var.sqrt();
    for m in mean.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *m += sd * z;
    }
    Ok(mean)
}

/// Regression target `(x1 - x) / (β_1 - β_t)`: the drift of the scaled
/// Brownian bridge toward `x1`, before the `g_t^2` factor.
pub fn bridge_drift_target(
    x: &[f64],
    x1: &[f64],
    t: f64,
    schedule: &DiffusivitySchedule,
) -> Result<Vec<f64>> {
    check_dims(x, x1)?;
    let mut out = vec![0.0; x.len()];
    bridge_drift_target_into(x, x1, t, schedule, &mut out)?;
    Ok(out)
}

pub(crate) fn bridge_gap(t: f64, schedule: &DiffusivitySchedule) -> Result<f64> {
    let beta_1 = schedule.beta_1();
    if beta_1 <= 0.0 {
        return Err(Error::DegenerateSchedule);
    }
    let gap = beta_1 - schedule.cum_beta(t)?;
    let guard = SINGULARITY_GUARD * beta_1;
    if gap < guard {
        return Err(Error::Singularity { t, gap, guard });
    }
    Ok(gap)
}

pub(crate) fn bridge_drift_target_into(
    x: &[f64],
    x1: &[f64],
    t: f64,
    schedule: &DiffusivitySchedule,
    out: &mut [f64],
) -> Result<()> {
    let gap = bridge_gap(t, schedule)?;
    for ((o, a), b) in out.iter_mut().zip(x).zip(x1) {
        *o = (b - a) / gap;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn unit() -> DiffusivitySchedule {
        DiffusivitySchedule::constant(1.0).unwrap()
    }

    #[test]
    fn endpoints_are_exact() {
        let mut rng = seeded(1);
        let x0 = [0.1, -3.7, 1e-300];
        let x1 = [2.0, 5.5, -7.25];
        let s = DiffusivitySchedule::piecewise(vec![0.5, 3.0], vec![0.3]).unwrap();
        assert_eq!(
            bridge_marginal_sample(&x0, &x1, 0.0, &s, &mut rng).unwrap(),
            x0.to_vec()
        );
        assert_eq!(
            bridge_marginal_sample(&x0, &x1, 1.0, &s, &mut rng).unwrap(),
            x1.to_vec()
        );
    }

    #[test]
    fn classical_bridge_moments() {
        let mut rng = seeded(2);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| bridge_marginal_sample(&[0.0], &[1.0], 0.3, &unit(), &mut rng).unwrap()[0])
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (0.21f64 / n as f64).sqrt();
        assert!((mean - 0.3).abs() < 4.0 * se, "mean {mean}");
        assert!((var - 0.21).abs() / 0.21 < 0.03, "var {var}");
    }

    #[test]
    fn dimension_mismatch() {
        let mut rng = seeded(3);
        assert!(matches!(
            bridge_marginal_sample(&[0.0, 1.0], &[1.0], 0.5, &unit(), &mut rng),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(bridge_drift_target(&[0.0], &[1.0, 2.0], 0.5, &unit()).is_err());
    }

    #[test]
    fn drift_target_values() {
        assert_eq!(
            bridge_drift_target(&[0.0], &[1.0], 0.5, &unit()).unwrap(),
            vec![2.0]
        );
        let two = DiffusivitySchedule::constant(2.0).unwrap();
        assert_eq!(
            bridge_drift_target(&[0.0], &[1.0], 0.5, &two).unwrap(),
            vec![0.5]
        );
        assert_eq!(
            bridge_drift_target(&[0.3, -2.0], &[0.3, -2.0], 0.77, &two).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn drift_target_guards_the_endpoint() {
        let s = unit();
        assert!(matches!(
            bridge_drift_target(&[0.0], &[1.0], 1.0, &s),
            Err(Error::Singularity { .. })
        ));
        assert!(matches!(
            bridge_drift_target(&[0.0], &[1.0], 1.0 - 1e-7, &s),
            Err(Error::Singularity { .. })
        ));
        assert!(bridge_drift_target(&[0.0], &[1.0], 1.0 - 1e-3, &s).is_ok());
    }

    #[test]
    fn degenerate_schedule_rejected() {
        let zero = DiffusivitySchedule::constant(0.0).unwrap();
        let mut rng = seeded(4);
        assert!(matches!(
            bridge_marginal_sample(&[0.0], &[1.0], 0.5, &zero, &mut rng),
            Err(Error::DegenerateSchedule)
        ));
    }
}
