use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::AlignedDataset;
use crate::error::{Error, Result};

/// Clockwise rotation, in degrees, taking the final moon layout to the initial one.
pub const MOON_ROTATION_DEG: f64 = 233.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoonArm {
    Upper,
    Lower,
}

impl MoonArm {
    pub fn center(self) -> [f64; 2] {
        match self {
            MoonArm::Upper => [-0.5, -0.25],
            MoonArm::Lower => [0.5, 0.25],
        }
    }

    pub fn other(self) -> Self {
        match self {
            MoonArm::Upper => MoonArm::Lower,
            MoonArm::Lower => MoonArm::Upper,
        }
    }
}

/// Point at arc parameter `theta ∈ [0, π]` on a unit semicircle of the
/// centred two-moons layout. The two arms are point reflections of each other.
pub fn moon_arc(arm: MoonArm, theta: f64) -> [f64; 2] {
    let [cx, cy] = arm.center();
    match arm {
        MoonArm::Upper => [cx + theta.cos(), cy + theta.sin()],
        MoonArm::Lower => [cx - theta.cos(), cy - theta.sin()],
    }
}

fn rotate_clockwise(p: [f64; 2], degrees: f64) -> [f64; 2] {
    let (s, c) = (-degrees.to_radians()).sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

fn normal2<R: Rng + ?Sized>(rng: &mut R, std: f64) -> [f64; 2] {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    [std * a, std * b]
}

/// Two-moons target points, equally spaced along each semicircle, paired with
/// their images under a clockwise rotation of 233° about the origin. Both
/// columns receive independent Gaussian noise. The first `ceil(n/2)` rows
/// lie on the upper arm.
pub fn generate_moon<R: Rng + ?Sized>(
    n_pairs: usize,
    noise_std: f64,
    rng: &mut R,
) -> Result<AlignedDataset> {
    if n_pairs < 2 {
        return Err(Error::InvalidArgument(format!(
            "moon dataset needs at least 2 pairs, got {n_pairs}"
        )));
    }
    if !(noise_std >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise_std must be non-negative, got {noise_std}"
        )));
    }
    let n_upper = n_pairs.div_ceil(2);
    let mut x0 = Array2::zeros((n_pairs, 2));
    let mut x1 = Array2::zeros((n_pairs, 2));
    for i in 0..n_pairs {
        let (arm, k, count) = if i < n_upper {
            (MoonArm::Upper, i, n_upper)
        } else {
            (MoonArm::Lower, i - n_upper, n_pairs - n_upper)
        };
        let theta = if count == 1 {
            PI / 2.0
        } else {
            PI * k as f64 / (count - 1) as f64
        };
        let clean = moon_arc(arm, theta);
        let start = rotate_clockwise(clean, MOON_ROTATION_DEG);
        let e1 = normal2(rng, noise_std);
        let e0 = normal2(rng, noise_std);
        for j in 0..2 {
            x1[[i, j]] = clean[j] + e1[j];
            x0[[i, j]] = start[j] + e0[j];
        }
    }
    AlignedDataset::new(x0, x1)
}

/// Width of the T's bar and height of its stem; their ratio is 51/55.
pub const T_WIDTH: f64 = 51.0;
pub const T_HEIGHT: f64 = 55.0;
const T_BAR_Y: f64 = T_HEIGHT / 2.0;
pub const T_LEFT: [f64; 2] = [-T_WIDTH / 2.0, T_BAR_Y];
pub const T_RIGHT: [f64; 2] = [T_WIDTH / 2.0, T_BAR_Y];
pub const T_TOP: [f64; 2] = [0.0, T_BAR_Y];
pub const T_BOTTOM: [f64; 2] = [0.0, T_BAR_Y - T_HEIGHT];

/// Four Gaussian clouds at the extremes of a T. The first half of the rows
/// pairs the left arm with the right arm, the second half the top with the
/// bottom.
pub fn generate_t<R: Rng + ?Sized>(
    n_pairs: usize,
    noise_std: f64,
    rng: &mut R,
) -> Result<AlignedDataset> {
    if n_pairs == 0 || !n_pairs.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "T dataset needs a positive even number of pairs, got {n_pairs}"
        )));
    }
    if !(noise_std >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise_std must be non-negative, got {noise_std}"
        )));
    }
    let half = n_pairs / 2;
    let mut x0 = Array2::zeros((n_pairs, 2));
    let mut x1 = Array2::zeros((n_pairs, 2));
    for i in 0..n_pairs {
        let (from, to) = if i < half {
            (T_LEFT, T_RIGHT)
        } else {
            (T_TOP, T_BOTTOM)
        };
        let e0 = normal2(rng, noise_std);
        let e1 = normal2(rng, noise_std);
        for j in 0..2 {
            x0[[i, j]] = from[j] + e0[j];
            x1[[i, j]] = to[j] + e1[j];
        }
    }
    AlignedDataset::new(x0, x1)
}

/// `x0 ~ N(0, I_d)` and `x1 = x0 + shift`.
pub fn generate_gauss_pairs<R: Rng + ?Sized>(
    n_pairs: usize,
    shift: &[f64],
    rng: &mut R,
) -> Result<AlignedDataset> {
    if n_pairs == 0 {
        return Err(Error::EmptyDataset);
    }
    let d = shift.len();
    if d == 0 {
        return Err(Error::InvalidArgument(
            "shift must have at least one coordinate".into(),
        ));
    }
    let x0 = Array2::from_shape_simple_fn((n_pairs, d), || rng.sample::<f64, _>(StandardNormal));
    let mut x1 = x0.clone();
    for mut row in x1.outer_iter_mut() {
        for (v, s) in row.iter_mut().zip(shift) {
            *v += s;
        }
    }
    AlignedDataset::new(x0, x1)
}
