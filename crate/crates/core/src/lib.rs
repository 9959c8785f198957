//! Envisioned-speech EEG pipeline: band filtering, lobe selection,
//! windowing, and a 1-D convolution → LSTM classifier trained from scratch.

pub mod dataset;
pub mod dsp;
pub mod error;
pub mod experiment;
pub mod nn;
pub mod segmentation;
pub mod training;

pub use error::{Error, Result};
