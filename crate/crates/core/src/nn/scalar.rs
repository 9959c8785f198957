use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element type of the network: `f32` for training, `f64` for gradient checks.
pub trait Scalar:
    LinalgScalar
    + Float
    + FromPrimitive
    + ToPrimitive
    + ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Debug
    + Send
    + Sync
{
    /// Bytes per element in checkpoint files.
    const WIDTH: u8;

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("representable literal")
    }
}

impl Scalar for f32 {
    const WIDTH: u8 = 4;
}

impl Scalar for f64 {
    const WIDTH: u8 = 8;
}

/// Layer sizes. [`ModelDims::standard`] gives the published architecture;
/// tests shrink the hidden sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelDims {
    pub n_channels: usize,
    pub window_len: usize,
    pub conv_filters: usize,
    pub kernel: usize,
    pub pool: usize,
    pub lstm_units: usize,
    pub dense_units: usize,
    pub n_classes: usize,
}

impl ModelDims {
    pub fn standard(n_channels: usize) -> Self {
        Self {
            n_channels,
            window_len: 32,
            conv_filters: 64,
            kernel: 10,
            pool: 2,
            lstm_units: 256,
            dense_units: 128,
            n_classes: 10,
        }
    }

    /// Time steps after the valid convolution.
    pub fn conv_len(&self) -> usize {
        self.window_len + 1 - self.kernel
    }

    /// Time steps after pooling, i.e. the LSTM sequence length.
    pub fn pooled_len(&self) -> usize {
        self.conv_len() / self.pool
    }

    pub fn gate_rows(&self) -> usize {
        4 * self.lstm_units
    }

    pub fn gate_cols(&self) -> usize {
        self.conv_filters + self.lstm_units
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.n_channels,
            self.conv_filters,
            self.kernel,
            self.pool,
            self.lstm_units,
            self.dense_units,
            self.n_classes,
        ];
        if positive.contains(&0) {
            return Err(Error::Shape(format!("zero-sized layer in {self:?}")));
        }
        if self.window_len < self.kernel {
            return Err(Error::Shape(format!(
                "window of {} samples is shorter than the {}-tap kernel",
                self.window_len, self.kernel
            )));
        }
        if self.pooled_len() == 0 {
            return Err(Error::Shape("nothing left after pooling".into()));
        }
        Ok(())
    }

    /// Shapes flowing through the network for a batch of `b`, as
    /// `(stage, shape)` pairs.
    pub fn shape_chain(&self, b: usize) -> Vec<(&'static str, Vec<usize>)> {
        vec![
            ("input", vec![b, self.window_len, self.n_channels]),
            ("conv", vec![b, self.conv_len(), self.conv_filters]),
            ("pool", vec![b, self.pooled_len(), self.conv_filters]),
            ("lstm", vec![b, self.lstm_units]),
            ("dense", vec![b, self.dense_units]),
            ("output", vec![b, self.n_classes]),
        ]
    }
}
