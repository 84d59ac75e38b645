//! Adam optimiser with bias correction.

use super::{NnError, ParamSet};

/// Optimiser state: first/second moment estimates shaped like the parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: ParamSet,
    v: ParamSet,
    step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Fresh state with zero moments; betas 0.9 / 0.999, epsilon 1e-8.
    pub fn new(reference: &ParamSet, learning_rate: f64) -> Self {
        let mut zeros = reference.clone();
        for layer in &mut zeros.layers {
            layer.weight.data_mut().fill(0.0);
            layer.bias.data_mut().fill(0.0);
        }
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update in place. Deterministic: the same (params, grads, state)
/// always produce the same result. Rejects non-finite gradients, naming the
/// offending layer.
pub fn adam_step(
    params: &mut ParamSet,
    grads: &ParamSet,
    state: &mut AdamState,
) -> Result<(), NnError> {
    if !params.shape_matches(grads) || !params.shape_matches(&state.m) {
        return Err(NnError::ShapeMismatch(
            "adam: parameter, gradient and state shapes disagree".into(),
        ));
    }
    for (i, layer) in grads.layers.iter().enumerate() {
        if !layer.weight.all_finite() || !layer.bias.all_finite() {
            return Err(NnError::NonFiniteGradient {
                layer: i,
                kind: if layer.weight.all_finite() {
                    "bias"
                } else {
                    "weight"
                },
            });
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let lr = state.learning_rate;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);

    for ((p_layer, g_layer), (m_layer, v_layer)) in params
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(state.m.layers.iter_mut().zip(&mut state.v.layers))
    {
        let updates = [
            (
                p_layer.weight.data_mut(),
                g_layer.weight.data(),
                m_layer.weight.data_mut(),
                v_layer.weight.data_mut(),
            ),
            (
                p_layer.bias.data_mut(),
                g_layer.bias.data(),
                m_layer.bias.data_mut(),
                v_layer.bias.data_mut(),
            ),
        ];
        for (p, g, m, v) in updates {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec};

    fn scalar_params(value: f64) -> ParamSet {
        let specs = [LayerSpec::dense(1, 1, Activation::Identity)];
        let mut p = ParamSet::zeros(&specs);
        p.layers[0].weight.data_mut()[0] = value;
        p
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut params = scalar_params(0.7);
        let before = params.clone();
        let grads = scalar_params(0.0);
        let mut state = AdamState::new(&params, 0.1);
        adam_step(&mut params, &grads, &mut state).unwrap();
        assert_eq!(params, before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_about_learning_rate() {
        // g = 1, lr = 0.1, t = 1: bias-corrected m_hat = v_hat = 1, so the
        // parameter moves by lr / (1 + eps) ~= 0.1.
        let mut params = scalar_params(0.0);
        let mut grads = scalar_params(0.0);
        grads.layers[0].weight.data_mut()[0] = 1.0;
        let mut state = AdamState::new(&params, 0.1);
        adam_step(&mut params, &grads, &mut state).unwrap();
        let p = params.layers[0].weight.data()[0];
        assert!((p + 0.1).abs() < 1e-6, "param {p} should be about -0.1");
    }

    #[test]
    fn constant_gradient_moves_opposite_sign() {
        let mut params = scalar_params(0.0);
        let mut grads = scalar_params(0.0);
        grads.layers[0].weight.data_mut()[0] = 2.5;
        let mut state = AdamState::new(&params, 0.01);
        for _ in 0..50 {
            adam_step(&mut params, &grads, &mut state).unwrap();
        }
        assert!(params.layers[0].weight.data()[0] < -0.1);

        let mut params = scalar_params(0.0);
        grads.layers[0].weight.data_mut()[0] = -2.5;
        let mut state = AdamState::new(&params, 0.01);
        for _ in 0..50 {
            adam_step(&mut params, &grads, &mut state).unwrap();
        }
        assert!(params.layers[0].weight.data()[0] > 0.1);
    }

    #[test]
    fn non_finite_gradient_is_rejected_with_layer_name() {
        let mut params = scalar_params(0.0);
        let mut grads = scalar_params(0.0);
        grads.layers[0].weight.data_mut()[0] = f64::NAN;
        let mut state = AdamState::new(&params, 0.1);
        let err = adam_step(&mut params, &grads, &mut state).unwrap_err();
        match err {
            NnError::NonFiniteGradient { layer, .. } => assert_eq!(layer, 0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn deterministic_given_same_inputs() {
        let run = || {
            let mut params = scalar_params(0.3);
            let mut grads = scalar_params(0.0);
            grads.layers[0].weight.data_mut()[0] = 0.9;
            let mut state = AdamState::new(&params, 0.05);
            for _ in 0..10 {
                adam_step(&mut params, &grads, &mut state).unwrap();
            }
            params.layers[0].weight.data()[0]
        };
        assert_eq!(run().to_bits(), run().to_bits());
    }
}
