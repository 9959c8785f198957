use ndarray::{Array1, Array2, Array3, ArrayViewD, ArrayViewMutD, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scalar::{ModelDims, Scalar};
use crate::error::{Error, Result};

/// Every trainable array of the network. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    /// `[filters × taps × channels]`
    pub conv_w: Array3<T>,
    pub conv_b: Array1<T>,
    /// `[4·units × (filters + units)]`, gate blocks ordered input, forget,
    /// cell candidate, output; columns are `[x_t | h_{t-1}]`.
    pub lstm_w: Array2<T>,
    pub lstm_b: Array1<T>,
    /// `[units × dense]`
    pub dense_w: Array2<T>,
    pub dense_b: Array1<T>,
    /// `[dense × classes]`
    pub out_w: Array2<T>,
    pub out_b: Array1<T>,
}

pub const PARAM_NAMES: [&str; 8] = [
    "conv_w", "conv_b", "lstm_w", "lstm_b", "dense_w", "dense_b", "out_w", "out_b",
];

impl<T: Scalar> Params<T> {
    pub fn zeros(dims: &ModelDims) -> Self {
        Self {
            conv_w: Array3::zeros((dims.conv_filters, dims.kernel, dims.n_channels)),
            conv_b: Array1::zeros(dims.conv_filters),
            lstm_w: Array2::zeros((dims.gate_rows(), dims.gate_cols())),
            lstm_b: Array1::zeros(dims.gate_rows()),
            dense_w: Array2::zeros((dims.lstm_units, dims.dense_units)),
            dense_b: Array1::zeros(dims.dense_units),
            out_w: Array2::zeros((dims.dense_units, dims.n_classes)),
            out_b: Array1::zeros(dims.n_classes),
        }
    }

    /// Glorot-uniform weights, zero biases, forget-gate bias 1.
    pub fn init(dims: &ModelDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(dims);
        let mut glorot = |a: &mut ArrayViewMutD<T>, fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            a.map_inplace(|v| *v = T::lit(rng.random_range(-limit..limit)));
        };
        let k = dims.kernel;
        glorot(
            &mut p.conv_w.view_mut().into_dyn(),
            k * dims.n_channels,
            k * dims.conv_filters,
        );
        let f = dims.conv_filters;
        let h = dims.lstm_units;
        glorot(&mut p.lstm_w.slice_mut(ndarray::s![.., ..f]).into_dyn(), f, 4 * h);
        glorot(&mut p.lstm_w.slice_mut(ndarray::s![.., f..]).into_dyn(), h, 4 * h);
        glorot(&mut p.dense_w.view_mut().into_dyn(), h, dims.dense_units);
        glorot(&mut p.out_w.view_mut().into_dyn(), dims.dense_units, dims.n_classes);
        p.lstm_b.slice_mut(ndarray::s![h..2 * h]).fill(T::one());
        p
    }

    /// Checks every array against `dims`.
    pub fn check_shapes(&self, dims: &ModelDims) -> Result<()> {
        let expected = Params::<T>::zeros(dims);
        for ((name, have), (_, want)) in self.tensors().iter().zip(expected.tensors().iter()) {
            if have.shape() != want.shape() {
                return Err(Error::Shape(format!(
                    "{name}: have {:?}, expected {:?}",
                    have.shape(),
                    want.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn tensors(&self) -> [(&'static str, ArrayViewD<'_, T>); 8] {
        [
            ("conv_w", self.conv_w.view().into_dyn()),
            ("conv_b", self.conv_b.view().into_dyn()),
            ("lstm_w", self.lstm_w.view().into_dyn()),
            ("lstm_b", self.lstm_b.view().into_dyn()),
            ("dense_w", self.dense_w.view().into_dyn()),
            ("dense_b", self.dense_b.view().into_dyn()),
            ("out_w", self.out_w.view().into_dyn()),
            ("out_b", self.out_b.view().into_dyn()),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, ArrayViewMutD<'_, T>); 8] {
        [
            ("conv_w", self.conv_w.view_mut().into_dyn()),
            ("conv_b", self.conv_b.view_mut().into_dyn()),
            ("lstm_w", self.lstm_w.view_mut().into_dyn()),
            ("lstm_b", self.lstm_b.view_mut().into_dyn()),
            ("dense_w", self.dense_w.view_mut().into_dyn()),
            ("dense_b", self.dense_b.view_mut().into_dyn()),
            ("out_w", self.out_w.view_mut().into_dyn()),
            ("out_b", self.out_b.view_mut().into_dyn()),
        ]
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// `self += other`, array by array.
    pub fn add_assign(&mut self, other: &Params<T>) {
        for ((_, mut a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            Zip::from(&mut a).and(&b).for_each(|a, &b| *a += b);
        }
    }

    pub fn max_abs(&self) -> T {
        self.tensors()
            .iter()
            .flat_map(|(_, t)| t.iter().map(|v| v.abs()))
            .fold(T::zero(), T::max)
    }
}

/// Adam first and second moment accumulators plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<T> {
    pub m: Params<T>,
    pub v: Params<T>,
    pub step: u64,
}

impl<T: Scalar> Moments<T> {
    pub fn zeros(dims: &ModelDims) -> Self {
        Self {
            m: Params::zeros(dims),
            v: Params::zeros(dims),
            step: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_shapes() {
        let dims = ModelDims::standard(14);
        let p = Params::<f32>::init(&dims, 1);
        assert_eq!(p.conv_w.dim(), (64, 10, 14));
        assert_eq!(p.lstm_w.dim(), (1024, 320));
        assert_eq!(p.dense_w.dim(), (256, 128));
        assert_eq!(p.out_w.dim(), (128, 10));
        p.check_shapes(&dims).unwrap();
        assert!(p.check_shapes(&ModelDims::standard(8)).is_err());
    }

    #[test]
    fn init_is_seeded_and_forget_bias_is_one() {
        let dims = ModelDims::standard(2);
        let a = Params::<f32>::init(&dims, 7);
        assert_eq!(a, Params::<f32>::init(&dims, 7));
        assert_ne!(a, Params::<f32>::init(&dims, 8));
        assert!(a.lstm_b.slice(ndarray::s![256..512]).iter().all(|v| *v == 1.0));
        assert!(a.lstm_b.slice(ndarray::s![..256]).iter().all(|v| *v == 0.0));
        let limit = (6.0f32 / (64.0 + 1024.0)).sqrt();
        assert!(a.lstm_w.slice(ndarray::s![.., ..64]).iter().all(|v| v.abs() <= limit));
    }
}
