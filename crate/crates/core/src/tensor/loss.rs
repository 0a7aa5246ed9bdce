use super::array::NumArray;
use crate::error::{Error, Result};

/// Mean squared error over all elements and its gradient `2(pred−target)/n`.
pub fn mse_loss(pred: &NumArray, target: &NumArray) -> Result<(f64, NumArray)> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape(format!(
            "mse: prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.len().max(1) as f64;
    let diff: Vec<f64> = pred.data().iter().zip(target.data()).map(|(p, t)| p - t).collect();
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let grad = NumArray::from_vec(pred.shape(), diff.into_iter().map(|d| 2.0 * d / n).collect())?;
    Ok((loss, grad))
}
