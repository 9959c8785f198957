use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::dataset::N_CLASSES;
use crate::error::{Error, Result};
use crate::nn::{predict, ModelDims, Params, Scalar};
use crate::segmentation::{Partition, WindowSet};

/// Windows per inference batch.
pub const EVAL_BATCH: usize = 512;

/// Rows are true classes, columns predictions.
pub type Confusion = [[u64; N_CLASSES]; N_CLASSES];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub confusion: Confusion,
}

impl Evaluation {
    pub fn from_confusion(confusion: Confusion) -> Self {
        Self {
            accuracy: accuracy_of(&confusion),
            confusion,
        }
    }

    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }
}

/// `trace / sum`, or 0 for an empty matrix.
pub fn accuracy_of(confusion: &Confusion) -> f64 {
    let total: u64 = confusion.iter().flatten().sum();
    if total == 0 {
        return 0.0;
    }
    let hits: u64 = (0..N_CLASSES).map(|k| confusion[k][k]).sum();
    hits as f64 / total as f64
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax<T: Scalar>(row: impl IntoIterator<Item = T>) -> usize {
    let mut best = 0;
    let mut best_v = T::neg_infinity();
    for (i, v) in row.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

pub fn tally<T: Scalar>(confusion: &mut Confusion, probs: ArrayView2<T>, labels: &[u8]) {
    for (row, &label) in probs.outer_iter().zip(labels) {
        confusion[usize::from(label)][argmax(row.iter().copied())] += 1;
    }
}

/// Inference-mode accuracy and confusion matrix over one partition.
pub fn evaluate(params: &Params<f32>, dims: &ModelDims, ws: &WindowSet, part: Partition) -> Result<Evaluation> {
    let idx = ws.indices(part);
    if idx.is_empty() {
        return Err(Error::Usage(format!("{part:?} partition is empty")));
    }
    let mut confusion = [[0u64; N_CLASSES]; N_CLASSES];
    for chunk in idx.chunks(EVAL_BATCH) {
        let probs = predict(params, dims, ws.gather(chunk).view())?;
        tally(&mut confusion, probs.view(), &ws.gather_labels(chunk));
    }
    Ok(Evaluation::from_confusion(confusion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax([0.1f32, 0.4, 0.4, 0.1]), 1);
        assert_eq!(argmax([0.1f64; 10]), 0);
    }

    #[test]
    fn perfect_predictor_is_diagonal() {
        let labels: Vec<u8> = (0..50).map(|i| (i % 10) as u8).collect();
        let probs = Array2::from_shape_fn((50, 10), |(i, k)| if k == i % 10 { 0.9f64 } else { 0.01 });
        let mut c = [[0u64; 10]; 10];
        tally(&mut c, probs.view(), &labels);
        let e = Evaluation::from_confusion(c);
        assert_eq!(e.accuracy, 1.0);
        for (i, row) in c.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, if i == j { 5 } else { 0 });
            }
        }
    }

    #[test]
    fn constant_predictor_on_balanced_data_is_chance() {
        let labels: Vec<u8> = (0..100).map(|i| (i % 10) as u8).collect();
        let probs = Array2::from_shape_fn((100, 10), |(_, k)| if k == 0 { 1.0f64 } else { 0.0 });
        let mut c = [[0u64; 10]; 10];
        tally(&mut c, probs.view(), &labels);
        let e = Evaluation::from_confusion(c);
        assert_eq!(e.accuracy, 0.1);
        assert_eq!(e.total(), 100);
        assert_eq!(accuracy_of(&e.confusion), e.accuracy);
    }
}
