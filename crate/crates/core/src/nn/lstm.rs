//! Single-layer LSTM returning the final hidden state.
//!
//! Gate pre-activations are `[x_t | h_{t-1}] · Wᵀ + b` with rows of `W`
//! grouped as input, forget, cell candidate, output. Initial states are zero.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayView2, ArrayView3, Axis};

use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LstmCache<T> {
    /// `[x_t | h_{t-1}]` per step.
    xh: Vec<Array2<T>>,
    /// Activated gates `[i | f | g | o]` per step.
    gates: Vec<Array2<T>>,
    cell: Vec<Array2<T>>,
    tanh_cell: Vec<Array2<T>>,
    input_dim: usize,
}

#[inline]
fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

pub fn lstm_forward<T: Scalar>(
    x: ArrayView3<T>,
    w: ArrayView2<T>,
    b: ArrayView1<T>,
) -> Result<(Array2<T>, LstmCache<T>)> {
    let (batch, steps, input_dim) = x.dim();
    let (rows, cols) = w.dim();
    if rows % 4 != 0 || cols < input_dim || cols - input_dim != rows / 4 || b.len() != rows {
        return Err(Error::Shape(format!(
            "lstm weights {rows}x{cols} / bias {} do not fit input width {input_dim}",
            b.len()
        )));
    }
    let units = rows / 4;
    let mut h = Array2::<T>::zeros((batch, units));
    let mut c = Array2::<T>::zeros((batch, units));
    let mut cache = LstmCache {
        xh: Vec::with_capacity(steps),
        gates: Vec::with_capacity(steps),
        cell: Vec::with_capacity(steps),
        tanh_cell: Vec::with_capacity(steps),
        input_dim,
    };
    for t in 0..steps {
        let mut xh = Array2::<T>::zeros((batch, cols));
        xh.slice_mut(s![.., ..input_dim]).assign(&x.index_axis(Axis(1), t));
        xh.slice_mut(s![.., input_dim..]).assign(&h);
        let mut z = xh.dot(&w.t());
        z += &b;
        let mut tc = Array2::<T>::zeros((batch, units));
        for bi in 0..batch {
            let zr = z.row_mut(bi).into_slice().expect("row contiguous");
            for v in zr[..2 * units].iter_mut() {
                *v = sigmoid(*v);
            }
            for v in zr[2 * units..3 * units].iter_mut() {
                *v = v.tanh();
            }
            for v in zr[3 * units..].iter_mut() {
                *v = sigmoid(*v);
            }
            let cr = c.row_mut(bi).into_slice().expect("row contiguous");
            let hr = h.row_mut(bi).into_slice().expect("row contiguous");
            let tr = tc.row_mut(bi).into_slice().expect("row contiguous");
            for j in 0..units {
                let (i, f, g, o) = (zr[j], zr[units + j], zr[2 * units + j], zr[3 * units + j]);
                let cn = f * cr[j] + i * g;
                cr[j] = cn;
                tr[j] = cn.tanh();
                hr[j] = o * tr[j];
            }
        }
        cache.xh.push(xh);
        cache.gates.push(z);
        cache.cell.push(c.clone());
        cache.tanh_cell.push(tc);
    }
    Ok((h, cache))
}

/// Backpropagation through time from the gradient of the final hidden state.
/// Returns `(dW, db, dx)`.
pub fn lstm_backward<T: Scalar>(
    dh_last: ArrayView2<T>,
    cache: &LstmCache<T>,
    w: ArrayView2<T>,
) -> (Array2<T>, Array1<T>, Array3<T>) {
    let (rows, cols) = w.dim();
    let units = rows / 4;
    let input_dim = cache.input_dim;
    let steps = cache.xh.len();
    let batch = dh_last.nrows();

    let mut dw = Array2::<T>::zeros((rows, cols));
    let mut db = Array1::<T>::zeros(rows);
    let mut dx = Array3::<T>::zeros((batch, steps, input_dim));
    let mut dh = dh_last.to_owned();
    let mut dc = Array2::<T>::zeros((batch, units));
    let mut dz = Array2::<T>::zeros((batch, rows));
    let zeros = Array2::<T>::zeros((batch, units));
    let one = T::one();

    for t in (0..steps).rev() {
        let gates = &cache.gates[t];
        let tc = &cache.tanh_cell[t];
        let c_prev = if t > 0 { &cache.cell[t - 1] } else { &zeros };
        for bi in 0..batch {
            let g_r = gates.row(bi).to_slice().expect("row contiguous");
            let tc_r = tc.row(bi).to_slice().expect("row contiguous");
            let cp_r = c_prev.row(bi).to_slice().expect("row contiguous");
            let dh_r = dh.row(bi).to_slice().expect("row contiguous");
            let dc_r = dc.row_mut(bi).into_slice().expect("row contiguous");
            let dz_r = dz.row_mut(bi).into_slice().expect("row contiguous");
            for j in 0..units {
                let (i, f, g, o) = (g_r[j], g_r[units + j], g_r[2 * units + j], g_r[3 * units + j]);
                let d_o = dh_r[j] * tc_r[j];
                let dct = dc_r[j] + dh_r[j] * o * (one - tc_r[j] * tc_r[j]);
                dz_r[j] = dct * g * i * (one - i);
                dz_r[units + j] = dct * cp_r[j] * f * (one - f);
                dz_r[2 * units + j] = dct * i * (one - g * g);
                dz_r[3 * units + j] = d_o * o * (one - o);
                dc_r[j] = dct * f;
            }
        }
        general_mat_mul(one, &dz.t(), &cache.xh[t], one, &mut dw);
        db += &dz.sum_axis(Axis(0));
        let dxh = dz.dot(&w);
        dx.index_axis_mut(Axis(1), t).assign(&dxh.slice(s![.., ..input_dim]));
        dh = dxh.slice(s![.., input_dim..]).to_owned();
    }
    (dw, db, dx)
}
