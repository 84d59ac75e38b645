//! Kaiming-uniform parameter initialisation.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{validate_specs, LayerParams, LayerSpec, NnError, ParamSet, Tensor};

/// Draws a fresh [`ParamSet`] for `specs`.
///
/// Weights are uniform on `[-b, b]` with `b = gain * sqrt(3 / fan_in)` where
/// `gain = sqrt(2 / (1 + slope^2))` for leaky-ReLU layers and 1 otherwise;
/// biases are uniform on `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`. Fully
/// deterministic under `seed`.
pub fn kaiming_uniform_init(specs: &[LayerSpec], seed: u64) -> Result<ParamSet, NnError> {
    validate_specs(specs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(specs.len());
    for spec in specs {
        let fan_in = spec.kind.fan_in();
        if fan_in == 0 {
            return Err(NnError::InvalidSpec(format!(
                "{} layer has zero fan-in",
                spec.kind.name()
            )));
        }
        let bound = spec.activation.gain() * (3.0 / fan_in as f64).sqrt();
        let w_dist = Uniform::new_inclusive(-bound, bound);
        let weight_shape = spec.kind.weight_shape();
        let w_len: usize = weight_shape.iter().product();
        let weight: Vec<f64> = (0..w_len).map(|_| w_dist.sample(&mut rng)).collect();

        let b_bound = 1.0 / (fan_in as f64).sqrt();
        let b_dist = Uniform::new_inclusive(-b_bound, b_bound);
        let bias: Vec<f64> = (0..spec.kind.bias_len())
            .map(|_| b_dist.sample(&mut rng))
            .collect();

        layers.push(LayerParams {
            weight: Tensor::new(weight, weight_shape)?,
            bias: Tensor::from_vec(bias),
        });
    }
    Ok(ParamSet { layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;

    #[test]
    fn dense_fan_in_one_slope_zero_bound_is_sqrt_six() {
        // gain sqrt(2), fan_in 1 -> b = sqrt(6)
        let specs = [LayerSpec::dense(1, 64, Activation::LeakyRelu(0.0))];
        let params = kaiming_uniform_init(&specs, 7).unwrap();
        let b = 6f64.sqrt();
        for w in params.layers[0].weight.data() {
            assert!(w.abs() <= b, "weight {w} outside [-sqrt6, sqrt6]");
        }
    }

    #[test]
    fn same_seed_same_params() {
        let specs = [
            LayerSpec::conv1d(2, 4, 5, 2, Activation::LeakyRelu(0.01)),
            LayerSpec::dense(8, 3, Activation::Sigmoid),
        ];
        let a = kaiming_uniform_init(&specs, 42).unwrap();
        let b = kaiming_uniform_init(&specs, 42).unwrap();
        assert_eq!(a, b);
        let c = kaiming_uniform_init(&specs, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empirical_max_within_bound_fan_in_512() {
        // 10^5 samples from a dense layer with fan_in 512, slope 0.01.
        let specs = [LayerSpec::dense(512, 196, Activation::LeakyRelu(0.01))];
        let params = kaiming_uniform_init(&specs, 11).unwrap();
        let bound = (2.0 / (1.0 + 0.01f64 * 0.01)).sqrt() * (3.0f64 / 512.0).sqrt();
        let data = params.layers[0].weight.data();
        assert!(data.len() >= 100_000);
        let max_abs = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max_abs <= bound);
        // The draw should actually exercise most of the interval.
        assert!(max_abs > 0.9 * bound);
    }

    #[test]
    fn bias_bound_is_inverse_sqrt_fan_in() {
        let specs = [LayerSpec::dense(16, 1024, Activation::Identity)];
        let params = kaiming_uniform_init(&specs, 3).unwrap();
        let b = 1.0 / 4.0;
        for v in params.layers[0].bias.data() {
            assert!(v.abs() <= b);
        }
    }
}
