use ndarray::{ArrayView2, Axis};

use super::{check_cloud, check_same_dim};
use crate::error::{Error, Result};

/// `sqrt(mean_i |ref_i - pred_i|^2)` over index-aligned rows.
pub fn rmsd(pred: ArrayView2<f64>, reference: ArrayView2<f64>) -> Result<f64> {
    check_cloud("prediction", pred, 1)?;
    if pred.dim() != reference.dim() {
        return Err(Error::InvalidArgument(format!(
            "rmsd needs index-aligned clouds of equal shape, got {:?} and {:?}",
            pred.dim(),
            reference.dim()
        )));
    }
    let total: f64 = (&reference - &pred).iter().map(|v| v * v).sum();
    Ok((total / pred.nrows() as f64).sqrt())
}

/// Distance between the perturbation signatures of `pred` and `reference`
/// against `control`. The control mean cancels, so this is the distance
/// between the two means; `control` is only checked for shape.
pub fn ps_l2(
    pred: ArrayView2<f64>,
    reference: ArrayView2<f64>,
    control: ArrayView2<f64>,
) -> Result<f64> {
    check_cloud("prediction", pred, 1)?;
    check_cloud("reference", reference, 1)?;
    check_cloud("control", control, 1)?;
    check_same_dim(pred, reference)?;
    check_same_dim(pred, control)?;
    let diff = reference.mean_axis(Axis(0)).unwrap() - pred.mean_axis(Axis(0)).unwrap();
    Ok(diff.iter().map(|v| v * v).sum::<f64>().sqrt())
}
