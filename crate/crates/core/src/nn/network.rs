//! Conv → ReLU → max-pool → LSTM → dense(ReLU) → dropout → dense → softmax.

use ndarray::{Array2, Array3, ArrayView2, ArrayView3, Zip};
use rand::RngCore;

use super::conv::{conv1d_backward, conv1d_forward, ConvCache};
use super::head::{dense_softmax_head, head_backward, HeadCache};
use super::loss::cross_entropy_loss;
use super::lstm::{lstm_backward, lstm_forward, LstmCache};
use super::params::Params;
use super::pool::{maxpool1d_backward, maxpool1d_forward, PoolIndices};
use super::scalar::{ModelDims, Scalar};
use crate::error::{Error, Result};

pub const DROPOUT_RATE: f64 = 0.5;

/// Activations recorded by [`forward`] for [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    conv: ConvCache<T>,
    conv_pre: Array3<T>,
    pool: PoolIndices,
    lstm: LstmCache<T>,
    head: HeadCache<T>,
}

#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub params: Params<T>,
    /// Gradient with respect to the input windows.
    pub input: Array3<T>,
}

fn check_input<T>(dims: &ModelDims, x: &ArrayView3<T>) -> Result<()> {
    let (_, t, c) = x.dim();
    if t != dims.window_len || c != dims.n_channels {
        return Err(Error::Shape(format!(
            "input windows are {t}x{c}, model expects {}x{}",
            dims.window_len, dims.n_channels
        )));
    }
    Ok(())
}

/// Class probabilities `[B × classes]`. Dropout is applied iff `rng` is given.
pub fn forward<T: Scalar>(
    params: &Params<T>,
    dims: &ModelDims,
    x: ArrayView3<T>,
    rng: Option<&mut dyn RngCore>,
) -> Result<(Array2<T>, ForwardCache<T>)> {
    check_input(dims, &x)?;
    let (conv_pre, conv) = conv1d_forward(x, params.conv_w.view(), params.conv_b.view())?;
    let activated = conv_pre.mapv(|v| v.max(T::zero()));
    let (pooled, pool) = maxpool1d_forward(activated.view(), dims.pool);
    let (h, lstm) = lstm_forward(pooled.view(), params.lstm_w.view(), params.lstm_b.view())?;
    let (probs, _, head) = dense_softmax_head(
        h.view(),
        params.dense_w.view(),
        params.dense_b.view(),
        params.out_w.view(),
        params.out_b.view(),
        DROPOUT_RATE,
        rng,
    );
    Ok((
        probs,
        ForwardCache {
            conv,
            conv_pre,
            pool,
            lstm,
            head,
        },
    ))
}

/// Reverse pass from the gradient of the loss with respect to the logits.
pub fn backward<T: Scalar>(params: &Params<T>, cache: &ForwardCache<T>, dlogits: ArrayView2<T>) -> Gradients<T> {
    let hg = head_backward(dlogits, &cache.head, params.dense_w.view(), params.out_w.view());
    let (lstm_w, lstm_b, dpooled) = lstm_backward(hg.input.view(), &cache.lstm, params.lstm_w.view());
    let mut dact = maxpool1d_backward(dpooled.view(), &cache.pool);
    Zip::from(&mut dact).and(&cache.conv_pre).for_each(|d, &z| {
        if z <= T::zero() {
            *d = T::zero();
        }
    });
    let (b, l, f) = dact.dim();
    let dflat = dact.into_shape_with_order((b * l, f)).expect("contiguous");
    let (conv_w, conv_b, input) = conv1d_backward(dflat.view(), &cache.conv, params.conv_w.view());
    Gradients {
        params: Params {
            conv_w,
            conv_b,
            lstm_w,
            lstm_b,
            dense_w: hg.dense_w,
            dense_b: hg.dense_b,
            out_w: hg.out_w,
            out_b: hg.out_b,
        },
        input,
    }
}

/// Mean cross-entropy over the batch and its gradients.
pub fn loss_and_gradients<T: Scalar>(
    params: &Params<T>,
    dims: &ModelDims,
    x: ArrayView3<T>,
    labels: &[u8],
    rng: Option<&mut dyn RngCore>,
) -> Result<(T, Array2<T>, Gradients<T>)> {
    let (probs, cache) = forward(params, dims, x, rng)?;
    let (loss, dlogits) = cross_entropy_loss(probs.view(), labels)?;
    let grads = backward(params, &cache, dlogits.view());
    Ok((loss, probs, grads))
}

/// Inference-mode probabilities.
pub fn predict<T: Scalar>(params: &Params<T>, dims: &ModelDims, x: ArrayView3<T>) -> Result<Array2<T>> {
    forward(params, dims, x, None).map(|(p, _)| p)
}

/// A model that remembers its last forward pass.
#[derive(Debug, Clone)]
pub struct Network<T> {
    pub dims: ModelDims,
    pub params: Params<T>,
    cache: Option<ForwardCache<T>>,
}

impl<T: Scalar> Network<T> {
    pub fn new(dims: ModelDims, seed: u64) -> Result<Self> {
        dims.validate()?;
        Ok(Self {
            dims,
            params: Params::init(&dims, seed),
            cache: None,
        })
    }

    pub fn from_params(dims: ModelDims, params: Params<T>) -> Result<Self> {
        dims.validate()?;
        params.check_shapes(&dims)?;
        Ok(Self {
            dims,
            params,
            cache: None,
        })
    }

    pub fn forward(&mut self, x: ArrayView3<T>, rng: Option<&mut dyn RngCore>) -> Result<Array2<T>> {
        let (probs, cache) = forward(&self.params, &self.dims, x, rng)?;
        self.cache = Some(cache);
        Ok(probs)
    }

    /// Consumes the recorded forward pass.
    pub fn backward(&mut self, dlogits: ArrayView2<T>) -> Result<Gradients<T>> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::Usage("backward called before forward".into()))?;
        Ok(backward(&self.params, &cache, dlogits))
    }

    pub fn predict(&self, x: ArrayView3<T>) -> Result<Array2<T>> {
        predict(&self.params, &self.dims, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> ModelDims {
        ModelDims {
            conv_filters: 8,
            lstm_units: 4,
            dense_units: 6,
            ..ModelDims::standard(2)
        }
    }

    fn batch(dims: &ModelDims, b: usize, seed: u64) -> Array3<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array3::from_shape_fn((b, dims.window_len, dims.n_channels), |_| rng.random_range(-2.0..2.0))
    }

    #[test]
    fn shape_chain_for_lobe_widths() {
        for nc in [2, 8, 14] {
            let dims = ModelDims::standard(nc);
            let chain = dims.shape_chain(3);
            let expected: Vec<Vec<usize>> = vec![
                vec![3, 32, nc],
                vec![3, 23, 64],
                vec![3, 11, 64],
                vec![3, 256],
                vec![3, 128],
                vec![3, 10],
            ];
            assert_eq!(chain.iter().map(|(_, s)| s.clone()).collect::<Vec<_>>(), expected);
            let net = Network::<f32>::new(dims, 1).unwrap();
            let x = Array3::<f32>::zeros((3, 32, nc));
            assert_eq!(net.predict(x.view()).unwrap().dim(), (3, 10));
        }
    }

    #[test]
    fn wrong_width_rejected() {
        let net = Network::<f64>::new(tiny(), 1).unwrap();
        assert!(net.predict(Array3::zeros((1, 32, 3)).view()).is_err());
    }

    #[test]
    fn backward_before_forward_is_usage_error() {
        let mut net = Network::<f64>::new(tiny(), 1).unwrap();
        let err = net.backward(Array2::zeros((1, 10)).view()).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        net.forward(batch(&tiny(), 1, 0).view(), None).unwrap();
        net.backward(Array2::zeros((1, 10)).view()).unwrap();
        assert!(net.backward(Array2::zeros((1, 10)).view()).is_err());
    }

    #[test]
    fn zero_incoming_gradient_gives_zero_gradients() {
        let dims = tiny();
        let mut net = Network::<f64>::new(dims, 3).unwrap();
        net.forward(batch(&dims, 2, 1).view(), None).unwrap();
        let g = net.backward(Array2::zeros((2, 10)).view()).unwrap();
        assert_eq!(g.params.max_abs(), 0.0);
        assert!(g.input.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn input_gradient_is_finite() {
        let dims = ModelDims::standard(2);
        let params = Params::<f64>::init(&dims, 4);
        let x = batch(&dims, 2, 2);
        let (_, _, g) = loss_and_gradients(&params, &dims, x.view(), &[0, 7], None).unwrap();
        assert!(g.input.iter().all(|v| v.is_finite()));
        assert!(g.input.iter().any(|v| *v != 0.0));
        assert!(g.params.all_finite());
    }

    #[test]
    fn fixed_seeds_are_bit_identical() {
        let dims = tiny();
        let x = batch(&dims, 4, 8).mapv(|v| v as f32);
        let run = || {
            let params = Params::<f32>::init(&dims, 2);
            let mut rng = ChaCha8Rng::seed_from_u64(6);
            loss_and_gradients(&params, &dims, x.view(), &[1, 2, 3, 4], Some(&mut rng)).unwrap()
        };
        let (la, pa, ga) = run();
        let (lb, pb, gb) = run();
        assert_eq!(la.to_bits(), lb.to_bits());
        assert_eq!(pa, pb);
        assert_eq!(ga.params, gb.params);
    }
}
