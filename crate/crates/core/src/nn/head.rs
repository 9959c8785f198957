//! Dense(ReLU) → dropout → dense → softmax classification head.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::{Rng, RngCore};

use super::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct HeadCache<T> {
    input: Array2<T>,
    dense_pre: Array2<T>,
    /// Inverted-dropout multipliers, `None` at inference.
    mask: Option<Array2<T>>,
    dropped: Array2<T>,
}

/// Each entry is `0` with probability `rate`, otherwise `1 / (1 − rate)`.
pub fn dropout_mask<T: Scalar>(shape: (usize, usize), rate: f64, rng: &mut dyn RngCore) -> Array2<T> {
    let keep = 1.0 - rate;
    let scale = T::lit(1.0 / keep);
    Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < keep { scale } else { T::zero() })
}

/// Row-wise numerically stable softmax.
pub fn softmax<T: Scalar>(logits: ArrayView2<T>) -> Array2<T> {
    let mut out = logits.to_owned();
    for mut row in out.outer_iter_mut() {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Returns `(probabilities, logits, cache)`. Dropout is active iff `rng` is
/// given.
#[allow(clippy::too_many_arguments)]
pub fn dense_softmax_head<T: Scalar>(
    h: ArrayView2<T>,
    dense_w: ArrayView2<T>,
    dense_b: ArrayView1<T>,
    out_w: ArrayView2<T>,
    out_b: ArrayView1<T>,
    dropout_rate: f64,
    rng: Option<&mut dyn RngCore>,
) -> (Array2<T>, Array2<T>, HeadCache<T>) {
    let mut dense_pre = h.dot(&dense_w);
    dense_pre += &dense_b;
    let mut dropped = dense_pre.mapv(|v| v.max(T::zero()));
    let mask = rng.map(|rng| dropout_mask::<T>(dropped.dim(), dropout_rate, rng));
    if let Some(m) = &mask {
        dropped *= m;
    }
    let mut logits = dropped.dot(&out_w);
    logits += &out_b;
    let probs = softmax(logits.view());
    (
        probs,
        logits,
        HeadCache {
            input: h.to_owned(),
            dense_pre,
            mask,
            dropped,
        },
    )
}

pub struct HeadGrads<T> {
    pub dense_w: Array2<T>,
    pub dense_b: Array1<T>,
    pub out_w: Array2<T>,
    pub out_b: Array1<T>,
    pub input: Array2<T>,
}

pub fn head_backward<T: Scalar>(
    dlogits: ArrayView2<T>,
    cache: &HeadCache<T>,
    dense_w: ArrayView2<T>,
    out_w: ArrayView2<T>,
) -> HeadGrads<T> {
    let d_out_w = cache.dropped.t().dot(&dlogits);
    let d_out_b = dlogits.sum_axis(Axis(0));
    let mut dz = dlogits.dot(&out_w.t());
    if let Some(m) = &cache.mask {
        dz *= m;
    }
    Zip::from(&mut dz).and(&cache.dense_pre).for_each(|d, &z| {
        if z <= T::zero() {
            *d = T::zero();
        }
    });
    HeadGrads {
        dense_w: cache.input.t().dot(&dz),
        dense_b: dz.sum_axis(Axis(0)),
        out_w: d_out_w,
        out_b: d_out_b,
        input: dz.dot(&dense_w.t()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Input, dense weights and bias, output weights and bias.
    type Setup = (Array2<f64>, Array2<f64>, Array1<f64>, Array2<f64>, Array1<f64>);

    fn setup() -> Setup {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut r = |shape: (usize, usize)| Array2::from_shape_fn(shape, |_| rng.random_range(-1.0..1.0));
        (
            r((3, 16)),
            r((16, 12)),
            Array1::zeros(12),
            r((12, 10)),
            Array1::zeros(10),
        )
    }

    #[test]
    fn equal_logits_are_uniform() {
        let p = softmax(Array2::<f64>::from_elem((2, 10), 3.7).view());
        assert!(p.iter().all(|v| (v - 0.1).abs() < 1e-15));
    }

    #[test]
    fn rows_are_distributions() {
        let (h, dw, db, ow, ob) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (p, _, _) = dense_softmax_head(
            h.view(),
            dw.view(),
            db.view(),
            ow.view(),
            ob.view(),
            0.5,
            Some(&mut rng),
        );
        for row in p.outer_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|v| *v > 0.0 && *v < 1.0));
        }
        let extreme = softmax(Array2::from_shape_fn((1, 10), |(_, j)| 80.0 * j as f64).view());
        assert!((extreme.sum() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn inference_is_deterministic() {
        let (h, dw, db, ow, ob) = setup();
        let a = dense_softmax_head(h.view(), dw.view(), db.view(), ow.view(), ob.view(), 0.5, None).0;
        let b = dense_softmax_head(h.view(), dw.view(), db.view(), ow.view(), ob.view(), 0.5, None).0;
        assert_eq!(a, b);
    }

    #[test]
    fn dropout_preserves_expectation() {
        // Monte-Carlo mean of masked activations against the unmasked ones.
        let activations = Array2::from_shape_fn((1, 64), |(_, j)| 0.5 + j as f64 / 32.0);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let draws = 20_000;
        let mut acc = Array2::<f64>::zeros((1, 64));
        for _ in 0..draws {
            acc += &(&activations * &dropout_mask::<f64>((1, 64), 0.5, &mut rng));
        }
        acc /= draws as f64;
        let total_est: f64 = acc.sum();
        let total: f64 = activations.sum();
        assert!((total_est / total - 1.0).abs() < 0.02);
        for (e, a) in acc.iter().zip(activations.iter()) {
            assert!((e / a - 1.0).abs() < 0.05);
        }
    }
}
