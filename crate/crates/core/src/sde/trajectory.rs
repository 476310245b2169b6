use std::fmt::Write as _;
use std::io::Write;

use ndarray::{Array2, Array3, ArrayView2, Axis};

use crate::text::push_row;

/// Discretised sample paths: `states[[traj, step, coord]]` at `times[step]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryBatch {
    states: Array3<f64>,
    times: Vec<f64>,
}

impl TrajectoryBatch {
    pub fn new(states: Array3<f64>, times: Vec<f64>) -> Self {
        assert_eq!(states.len_of(Axis(1)), times.len(), "one time per step");
        Self { states, times }
    }

    pub fn n_traj(&self) -> usize {
        self.states.len_of(Axis(0))
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.states.len_of(Axis(2))
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &Array3<f64> {
        &self.states
    }

    pub fn at_step(&self, step: usize) -> ArrayView2<'_, f64> {
        self.states.index_axis(Axis(1), step)
    }

    pub fn endpoints(&self) -> Array2<f64> {
        self.at_step(self.n_steps()).to_owned()
    }

    pub fn is_finite(&self) -> bool {
        self.states.iter().all(|v| v.is_finite())
    }
}

/// Write `traj_id,step,t,x_0,...,x_{d-1}` rows. `traj_ids` relabels the
/// trajectories; `None` numbers them from zero.
pub fn write_trajectories_csv<W: Write>(
    out: &mut W,
    batch: &TrajectoryBatch,
    traj_ids: Option<&[usize]>,
) -> std::io::Result<()> {
    let d = batch.dim();
    let mut header = String::from("traj_id,step,t");
    for j in 0..d {
        write!(header, ",x_{j}").unwrap();
    }
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for i in 0..batch.n_traj() {
        let id = traj_ids.map_or(i, |ids| ids[i]);
        for (k, &t) in batch.times().iter().enumerate() {
            line.clear();
            write!(line, "{id},{k},{}", crate::text::fmt_f64(t)).unwrap();
            push_row(
                &mut line,
                batch.states().slice(ndarray::s![i, k, ..]).iter().copied(),
            );
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let states = Array3::from_shape_fn((2, 3, 2), |(i, k, j)| (i * 100 + k * 10 + j) as f64);
        let batch = TrajectoryBatch::new(states, vec![0.0, 0.5, 1.0]);
        let mut buf = Vec::new();
        write_trajectories_csv(&mut buf, &batch, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "traj_id,step,t,x_0,x_1");
        assert_eq!(lines.len(), 1 + 2 * 3);
        let last: Vec<&str> = lines[6].split(',').collect();
        assert_eq!(last[0], "1");
        assert_eq!(last[1], "2");
        assert_eq!(last[4].parse::<f64>().unwrap(), 121.0);
    }
}
