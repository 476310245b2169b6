use ndarray::Array2;
use rand::Rng;

use crate::datasets::AlignedDataset;
use crate::error::{Error, Result};
use crate::sde::{bridge_marginal_sample, BridgeSample};

use super::config::TrainConfig;

/// One mini-batch: `batch_size` pairs drawn with replacement, each expanded
/// into `times_per_pair` rows with their own bridge time and position.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingBatch {
    pub pair_index: Vec<usize>,
    pub t: Vec<f64>,
    pub x0: Array2<f64>,
    pub x1: Array2<f64>,
    pub x_t: Array2<f64>,
}

impl TrainingBatch {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn bridge_samples(&self) -> Vec<BridgeSample> {
        (0..self.len())
            .map(|i| BridgeSample {
                t: self.t[i],
                x_t: self.x_t.row(i).to_vec(),
                pair_index: self.pair_index[i],
            })
            .collect()
    }
}

pub fn sample_training_batch<R: Rng + ?Sized>(
    dataset: &AlignedDataset,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<TrainingBatch> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows = config.batch_size * config.times_per_pair;
    let d = dataset.dim();
    let t_max = 1.0 - config.t_clip;
    let mut batch = TrainingBatch {
        pair_index: Vec::with_capacity(rows),
        t: Vec::with_capacity(rows),
        x0: Array2::zeros((rows, d)),
        x1: Array2::zeros((rows, d)),
        x_t: Array2::zeros((rows, d)),
    };
    let mut row = 0;
    for _ in 0..config.batch_size {
        let i = rng.random_range(0..dataset.len());
        let (a, b) = dataset.pair(i);
        let (a, b) = (a.to_vec(), b.to_vec());
        for _ in 0..config.times_per_pair {
            let t = rng.random::<f64>() * t_max;
            let x_t = bridge_marginal_sample(&a, &b, t, &config.schedule, rng)?;
            batch.pair_index.push(i);
            batch.t.push(t);
            for j in 0..d {
                batch.x0[[row, j]] = a[j];
                batch.x1[[row, j]] = b[j];
                batch.x_t[[row, j]] = x_t[j];
            }
            row += 1;
        }
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::generate_gauss_pairs;
    use crate::rng::seeded;

    #[test]
    fn reproducible_and_clipped() {
        let ds = generate_gauss_pairs(16, &[1.0, -1.0], &mut seeded(1)).unwrap();
        let cfg = TrainConfig {
            batch_size: 16,
            times_per_pair: 3,
            t_clip: 0.2,
            ..Default::default()
        };
        let a = sample_training_batch(&ds, &cfg, &mut seeded(5)).unwrap();
        let b = sample_training_batch(&ds, &cfg, &mut seeded(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 48);
        assert!(a.t.iter().all(|&t| (0.0..=0.8).contains(&t)));
        for r in 0..a.len() {
            assert_eq!(a.x0.row(r), ds.x0().row(a.pair_index[r]));
            assert_eq!(a.x1.row(r), ds.x1().row(a.pair_index[r]));
        }
        assert_eq!(a.pair_index[0], a.pair_index[2]);
        assert_eq!(a.bridge_samples()[4].pair_index, a.pair_index[4]);
    }

    /// Upper tail of the chi-square distribution via the regularised gamma
    /// series / continued fraction.
    fn chi_square_sf(x: f64, dof: f64) -> f64 {
        let a = dof / 2.0;
        let z = x / 2.0;
        let ln_gamma_a = statrs_like_ln_gamma(a);
        if z < a + 1.0 {
            let mut sum = 1.0 / a;
            let mut term = sum;
            for n in 1..500 {
                term *= z / (a + n as f64);
                sum += term;
            }
            1.0 - sum * (-z + a * z.ln() - ln_gamma_a).exp()
        } else {
            let mut b = z + 1.0 - a;
            let mut c = 1e300;
            let mut d = 1.0 / b;
            let mut h = d;
            for i in 1..500 {
                let an = -(i as f64) * (i as f64 - a);
                b += 2.0;
                d = an * d + b;
                c = b + an / c;
                d = 1.0 / d;
                h *= d * c;
            }
            (-z + a * z.ln() - ln_gamma_a).exp() * h
        }
    }

    fn statrs_like_ln_gamma(x: f64) -> f64 {
        // Lanczos approximation, g = 7
        const C: [f64; 9] = [
            0.999_999_999_999_809_9,
            676.520_368_121_885_1,
            -1_259.139_216_722_402_8,
            771.323_428_777_653_1,
            -176.615_029_162_140_6,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_572e-6,
            1.505_632_735_149_311_6e-7,
        ];
        let x = x - 1.0;
        let mut a = C[0];
        let t = x + 7.5;
        for (i, c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }

    #[test]
    fn times_are_uniform() {
        let ds = generate_gauss_pairs(4, &[0.0], &mut seeded(2)).unwrap();
        let cfg = TrainConfig {
            batch_size: 1000,
            times_per_pair: 1000,
            t_clip: 1e-3,
            ..Default::default()
        };
        let batch = sample_training_batch(&ds, &cfg, &mut seeded(3)).unwrap();
        let bins = 20;
        let t_max = 1.0 - cfg.t_clip;
        let mut counts = vec![0usize; bins];
        for &t in &batch.t {
            assert!(t <= t_max);
            counts[((t / t_max) * bins as f64).min(bins as f64 - 1.0) as usize] += 1;
        }
        let expected = batch.len() as f64 / bins as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let p = chi_square_sf(chi2, (bins - 1) as f64);
        assert!(p > 0.001, "chi2 = {chi2}, p = {p}");
        // sanity of the oracle itself: median of chi2(19) is about 18.34
        assert!((chi_square_sf(18.338, 19.0) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        // AlignedDataset cannot be empty, so the check is on construction
        assert!(AlignedDataset::new(Array2::zeros((0, 1)), Array2::zeros((0, 1))).is_err());
    }
}
