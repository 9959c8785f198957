//! Central finite-difference check of the analytic gradients.

use ndarray::Array3;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::network::loss_and_gradients;
use super::params::{Params, PARAM_NAMES};
use super::scalar::ModelDims;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    /// Largest `|a − n| / max(|a|, |n|, 1e-8)` over all parameters.
    pub max_relative_error: f64,
    /// Array holding the worst entry.
    pub worst_param: &'static str,
    pub n_checked: usize,
}

/// Compares every parameter's analytic gradient with a central difference
/// of step `eps`, on a random batch of `batch` windows. With `dropout_seed`
/// the same dropout mask is drawn for every evaluation.
pub fn check_gradients(
    dims: &ModelDims,
    batch: usize,
    eps: f64,
    seed: u64,
    dropout_seed: Option<u64>,
) -> Result<GradCheck> {
    dims.validate()?;
    let params = Params::<f64>::init(dims, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    let x = Array3::from_shape_fn((batch, dims.window_len, dims.n_channels), |_| {
        rng.random_range(-2.0..2.0)
    });
    let labels: Vec<u8> = (0..batch).map(|_| rng.random_range(0..dims.n_classes) as u8).collect();

    let loss_at = |p: &Params<f64>| -> Result<_> {
        let mut drng = dropout_seed.map(ChaCha8Rng::seed_from_u64);
        let drng = drng.as_mut().map(|r| r as &mut dyn RngCore);
        loss_and_gradients(p, dims, x.view(), &labels, drng)
    };
    let (_, _, grads) = loss_at(&params)?;

    let mut out = GradCheck {
        max_relative_error: 0.0,
        worst_param: PARAM_NAMES[0],
        n_checked: 0,
    };
    let mut probe = params.clone();
    for (slot, (name, analytic)) in grads.params.tensors().into_iter().enumerate() {
        for (flat, &a) in analytic.iter().enumerate() {
            let mut shifted = |delta: f64| -> Result<f64> {
                let orig = {
                    let mut views = probe.tensors_mut();
                    let v = views[slot].1.as_slice_memory_order_mut().expect("owned array");
                    let orig = v[flat];
                    v[flat] = orig + delta;
                    orig
                };
                let loss = loss_at(&probe)?.0;
                probe.tensors_mut()[slot]
                    .1
                    .as_slice_memory_order_mut()
                    .expect("owned array")[flat] = orig;
                Ok(loss)
            };
            let numeric = (shifted(eps)? - shifted(-eps)?) / (2.0 * eps);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            if rel > out.max_relative_error {
                out.max_relative_error = rel;
                out.worst_param = name;
            }
            out.n_checked += 1;
        }
    }
    Ok(out)
}

/// Shrunken network used for gradient checks: 2 channels, 8 filters,
/// 4 LSTM units.
pub fn gradcheck_dims() -> ModelDims {
    ModelDims {
        conv_filters: 8,
        lstm_units: 4,
        dense_units: 6,
        ..ModelDims::standard(2)
    }
}
