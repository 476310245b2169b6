//! Aligned pair datasets: synthetic generators and CSV I/O.

mod pairs_csv;
mod synthetic;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

pub use pairs_csv::{read_pairs, write_pairs, write_pairs_to};
pub use synthetic::{
    generate_gauss_pairs, generate_moon, generate_t, moon_arc, MoonArm, T_BOTTOM, T_HEIGHT, T_LEFT,
    T_RIGHT, T_TOP, T_WIDTH,
};

use crate::error::{Error, Result};

/// Index-aligned samples `(x0_i, x1_i)` of a coupling: row `i` of `x0` and
/// row `i` of `x1` are one draw.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedDataset {
    x0: Array2<f64>,
    x1: Array2<f64>,
}

impl AlignedDataset {
    pub fn new(x0: Array2<f64>, x1: Array2<f64>) -> Result<Self> {
        if x0.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if x0.dim() != x1.dim() {
            return Err(Error::InvalidArgument(format!(
                "x0 and x1 blocks differ in shape: {:?} vs {:?}",
                x0.dim(),
                x1.dim()
            )));
        }
        if x0.iter().chain(x1.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "dataset contains non-finite values".into(),
            ));
        }
        Ok(Self { x0, x1 })
    }

    pub fn len(&self) -> usize {
        self.x0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.x0.ncols()
    }

    pub fn x0(&self) -> ArrayView2<'_, f64> {
        self.x0.view()
    }

    pub fn x1(&self) -> ArrayView2<'_, f64> {
        self.x1.view()
    }

    pub fn pair(&self, i: usize) -> (ArrayView1<'_, f64>, ArrayView1<'_, f64>) {
        (self.x0.row(i), self.x1.row(i))
    }

    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        Self::new(self.x0.select(Axis(0), rows), self.x1.select(Axis(0), rows))
    }

    /// Shuffle whole rows (never the columns separately) and cut them into
    /// consecutive parts of the given fractions; the last part takes the rest.
    pub fn split<R: Rng + ?Sized>(&self, fractions: &[f64], rng: &mut R) -> Result<Vec<Self>> {
        let total: f64 = fractions.iter().sum();
        if fractions.is_empty() || fractions.iter().any(|f| *f <= 0.0) || (total - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidArgument(format!(
                "split fractions must be positive and sum to 1, got {fractions:?}"
            )));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(rng);
        let mut parts = Vec::with_capacity(fractions.len());
        let mut start = 0;
        let mut acc = 0.0;
        for (k, f) in fractions.iter().enumerate() {
            acc += f;
            let end = if k + 1 == fractions.len() {
                self.len()
            } else {
                (acc * self.len() as f64).round() as usize
            };
            parts.push(self.select(&order[start..end])?);
            start = end;
        }
        Ok(parts)
    }
}

/// Default train/valid/test proportions.
pub const DEFAULT_SPLIT: [f64; 3] = [0.8, 0.1, 0.1];

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;
    use crate::rng::seeded;

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(matches!(
            AlignedDataset::new(Array2::zeros((0, 2)), Array2::zeros((0, 2))),
            Err(Error::EmptyDataset)
        ));
        assert!(AlignedDataset::new(Array2::zeros((2, 2)), Array2::zeros((3, 2))).is_err());
        assert!(AlignedDataset::new(array![[f64::NAN]], array![[0.0]]).is_err());
    }

    #[test]
    fn split_keeps_rows_aligned() {
        let x0 = Array2::from_shape_fn((50, 2), |(i, j)| (i * 2 + j) as f64);
        let x1 = &x0 * 10.0;
        let ds = AlignedDataset::new(x0, x1).unwrap();
        let parts = ds.split(&DEFAULT_SPLIT, &mut seeded(3)).unwrap();
        assert_eq!(
            parts.iter().map(|p| p.len()).collect::<Vec<_>>(),
            vec![40, 5, 5]
        );
        for p in &parts {
            assert_eq!(p.x1(), p.x0().mapv(|v| v * 10.0));
        }
        assert!(ds.split(&[0.5, 0.6], &mut seeded(3)).is_err());
    }
}
