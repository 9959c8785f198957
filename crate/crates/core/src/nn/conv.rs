//! Valid 1-D convolution along time, channels as input depth.

use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView2, ArrayView3, Axis};

use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Saved im2col matrix: row `(b, t)` holds `x[b, t..t+K, :]` flattened.
#[derive(Debug, Clone)]
pub struct ConvCache<T> {
    pub(crate) patches: Array2<T>,
    pub(crate) batch: usize,
    pub(crate) in_len: usize,
}

fn kernel_matrix<T: Scalar>(kernels: &ArrayView3<T>) -> Array2<T> {
    let (f, k, c) = kernels.dim();
    kernels
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((f, k * c))
        .expect("contiguous kernel")
}

/// `x: [B × T × C]`, `kernels: [F × K × C]` → pre-activation `[B × (T−K+1) × F]`.
pub fn conv1d_forward<T: Scalar>(
    x: ArrayView3<T>,
    kernels: ArrayView3<T>,
    bias: ArrayView1<T>,
) -> Result<(Array3<T>, ConvCache<T>)> {
    let (b, t, c) = x.dim();
    let (f, k, kc) = kernels.dim();
    if kc != c {
        return Err(Error::Shape(format!("input has {c} channels, kernels expect {kc}")));
    }
    if bias.len() != f {
        return Err(Error::Shape(format!("{} biases for {f} filters", bias.len())));
    }
    if t < k {
        return Err(Error::Shape(format!("input length {t} shorter than kernel {k}")));
    }
    let out_len = t - k + 1;
    let x = x.as_standard_layout();
    let flat = x.as_slice().expect("standard layout");
    let width = k * c;
    let mut patches = Array2::<T>::zeros((b * out_len, width));
    for (row, mut dst) in patches.outer_iter_mut().enumerate() {
        let (bi, ti) = (row / out_len, row % out_len);
        let start = (bi * t + ti) * c;
        dst.as_slice_mut()
            .expect("row contiguous")
            .copy_from_slice(&flat[start..start + width]);
    }
    let w = kernel_matrix(&kernels);
    let mut out = patches.dot(&w.t());
    out += &bias;
    let out = out
        .into_shape_with_order((b, out_len, f))
        .expect("contiguous conv output");
    Ok((
        out,
        ConvCache {
            patches,
            batch: b,
            in_len: t,
        },
    ))
}

/// Gradients `(d_kernels, d_bias, d_x)` from `dy: [B·L × F]` (pre-activation).
pub fn conv1d_backward<T: Scalar>(
    dy: ArrayView2<T>,
    cache: &ConvCache<T>,
    kernels: ArrayView3<T>,
) -> (Array3<T>, Array1<T>, Array3<T>) {
    let (f, k, c) = kernels.dim();
    let width = k * c;
    let out_len = cache.in_len - k + 1;
    let dw = dy
        .t()
        .dot(&cache.patches)
        .into_shape_with_order((f, k, c))
        .expect("kernel gradient shape");
    let db = dy.sum_axis(Axis(0));
    let w = kernel_matrix(&kernels);
    let dpatches = dy.dot(&w);
    let mut dx = Array3::<T>::zeros((cache.batch, cache.in_len, c));
    {
        let dx_flat = dx.as_slice_mut().expect("fresh array");
        for (row, src) in dpatches.outer_iter().enumerate() {
            let (bi, ti) = (row / out_len, row % out_len);
            let start = (bi * cache.in_len + ti) * c;
            for (d, s) in dx_flat[start..start + width].iter_mut().zip(src.iter()) {
                *d += *s;
            }
        }
    }
    (dw, db, dx)
}
