use ndarray::{Array2, ArrayView2};

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Guard inside the logarithm.
pub const LOG_EPS: f64 = 1e-12;

/// Mean categorical cross-entropy and its gradient with respect to the
/// logits, `(probs − onehot) / B`.
pub fn cross_entropy_loss<T: Scalar>(probs: ArrayView2<T>, labels: &[u8]) -> Result<(T, Array2<T>)> {
    let (batch, classes) = probs.dim();
    if labels.len() != batch {
        return Err(Error::Shape(format!("{} labels for batch of {batch}", labels.len())));
    }
    if let Some(bad) = labels.iter().find(|&&l| usize::from(l) >= classes) {
        return Err(Error::Usage(format!("label {bad} outside 0..{classes}")));
    }
    let eps = T::lit(LOG_EPS);
    let n = T::from_usize(batch).expect("batch size");
    let mut loss = T::zero();
    let mut grad = probs.to_owned();
    for (b, &label) in labels.iter().enumerate() {
        let k = usize::from(label);
        loss -= probs[[b, k]].max(eps).ln();
        grad[[b, k]] -= T::one();
    }
    grad.mapv_inplace(|v| v / n);
    Ok((loss / n, grad))
}
