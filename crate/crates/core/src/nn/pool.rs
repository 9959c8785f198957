use ndarray::{Array3, ArrayView3};

use super::scalar::Scalar;

/// Argmax positions of a pooling pass, as offsets into the input time axis.
#[derive(Debug, Clone)]
pub struct PoolIndices {
    pub(crate) argmax: Array3<u32>,
    pub(crate) in_len: usize,
}

/// Non-overlapping max pooling along time with window `size`; a trailing
/// partial window is dropped. Ties resolve to the earliest element.
pub fn maxpool1d_forward<T: Scalar>(x: ArrayView3<T>, size: usize) -> (Array3<T>, PoolIndices) {
    let (b, t, f) = x.dim();
    let out_len = t / size;
    let mut out = Array3::<T>::zeros((b, out_len, f));
    let mut argmax = Array3::<u32>::zeros((b, out_len, f));
    for bi in 0..b {
        for j in 0..out_len {
            for fi in 0..f {
                let base = j * size;
                let mut best = base;
                for ti in base + 1..base + size {
                    if x[[bi, ti, fi]] > x[[bi, best, fi]] {
                        best = ti;
                    }
                }
                out[[bi, j, fi]] = x[[bi, best, fi]];
                argmax[[bi, j, fi]] = best as u32;
            }
        }
    }
    (out, PoolIndices { argmax, in_len: t })
}

/// Routes each incoming gradient to the stored argmax position.
pub fn maxpool1d_backward<T: Scalar>(dy: ArrayView3<T>, idx: &PoolIndices) -> Array3<T> {
    let (b, out_len, f) = dy.dim();
    let mut dx = Array3::<T>::zeros((b, idx.in_len, f));
    for bi in 0..b {
        for j in 0..out_len {
            for fi in 0..f {
                let src = idx.argmax[[bi, j, fi]] as usize;
                dx[[bi, src, fi]] += dy[[bi, j, fi]];
            }
        }
    }
    dx
}
