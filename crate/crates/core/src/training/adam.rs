use ndarray::{ArrayViewD, ArrayViewMutD, Zip};

use super::TrainConfig;
use crate::error::{Error, Result};
use crate::nn::{Moments, Params, Scalar};

/// One Adam update of a single array at step `t ≥ 1`.
pub fn adam_update<T: Scalar>(
    mut param: ArrayViewMutD<T>,
    grad: ArrayViewD<T>,
    mut m: ArrayViewMutD<T>,
    mut v: ArrayViewMutD<T>,
    t: u64,
    cfg: &TrainConfig,
) {
    let b1 = cfg.adam_beta1;
    let b2 = cfg.adam_beta2;
    let step = i32::try_from(t).unwrap_or(i32::MAX);
    let c1 = T::lit(1.0 - b1.powi(step));
    let c2 = T::lit(1.0 - b2.powi(step));
    let (tb1, tb2) = (T::lit(b1), T::lit(b2));
    let (ob1, ob2) = (T::lit(1.0 - b1), T::lit(1.0 - b2));
    let lr = T::lit(cfg.learning_rate);
    let eps = T::lit(cfg.adam_eps);
    Zip::from(&mut param)
        .and(&grad)
        .and(&mut m)
        .and(&mut v)
        .for_each(|p, &g, m, v| {
            *m = tb1 * *m + ob1 * g;
            *v = tb2 * *v + ob2 * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        });
}

/// Advances the step counter and updates every array. Parameters are left
/// untouched if any gradient is non-finite.
pub fn adam_step<T: Scalar>(
    params: &mut Params<T>,
    grads: &Params<T>,
    moments: &mut Moments<T>,
    cfg: &TrainConfig,
) -> Result<()> {
    for (name, g) in grads.tensors() {
        if let Some(bad) = g.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient of {name} contains {bad:?} at step {}",
                moments.step + 1
            )));
        }
    }
    moments.step += 1;
    let t = moments.step;
    let Moments { m, v, .. } = moments;
    for (((_, p), (_, g)), ((_, m), (_, v))) in params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(m.tensors_mut().into_iter().zip(v.tensors_mut()))
    {
        adam_update(p, g, m, v, t, cfg);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ModelDims;
    use ndarray::{arr1, Array1};

    #[test]
    fn single_step_by_hand() {
        let cfg = TrainConfig::default();
        let mut p = arr1(&[0.0f64]);
        let mut m = Array1::zeros(1);
        let mut v = Array1::zeros(1);
        let g = arr1(&[1.0f64]);
        adam_update(
            p.view_mut().into_dyn(),
            g.view().into_dyn(),
            m.view_mut().into_dyn(),
            v.view_mut().into_dyn(),
            1,
            &cfg,
        );
        assert!((m[0] - 0.1).abs() < 1e-15);
        assert!((v[0] - 0.001).abs() < 1e-15);
        // m̂ = 0.1/0.1 = 1, v̂ = 0.001/0.001 = 1, so Δ = −0.001·1/(1+1e-8).
        let expected = -0.001 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15, "{}", p[0]);
        assert!((p[0] + 0.001).abs() < 1e-10);
    }

    fn tiny() -> ModelDims {
        ModelDims {
            conv_filters: 3,
            lstm_units: 2,
            dense_units: 4,
            ..ModelDims::standard(2)
        }
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let dims = tiny();
        let mut params = Params::<f64>::init(&dims, 1);
        let before = params.clone();
        let mut moments = Moments::zeros(&dims);
        let grads = Params::zeros(&dims);
        for _ in 0..5 {
            adam_step(&mut params, &grads, &mut moments, &TrainConfig::default()).unwrap();
        }
        assert_eq!(params, before);
        assert_eq!(moments.step, 5);
    }

    #[test]
    fn identical_gradients_give_identical_updates() {
        let dims = tiny();
        let mut params = Params::<f64>::zeros(&dims);
        let mut moments = Moments::zeros(&dims);
        let mut grads = Params::zeros(&dims);
        grads.out_w.fill(0.37);
        adam_step(&mut params, &grads, &mut moments, &TrainConfig::default()).unwrap();
        let first = params.out_w[[0, 0]];
        assert!(first < 0.0);
        assert!(params.out_w.iter().all(|v| *v == first));
    }

    #[test]
    fn non_finite_gradient_aborts_without_update() {
        let dims = tiny();
        let mut params = Params::<f32>::init(&dims, 2);
        let before = params.clone();
        let mut moments = Moments::zeros(&dims);
        let mut grads = Params::zeros(&dims);
        grads.lstm_b[0] = f32::NAN;
        let err = adam_step(&mut params, &grads, &mut moments, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        assert_eq!(params, before);
        assert_eq!(moments.step, 0);
    }
}
