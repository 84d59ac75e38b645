//! Autoencoder architecture builder.
//!
//! Encoder: `depth` stride-2 conv1d layers (kernel 5 by default, channel
//! count 8 doubling per layer, scaled by the capacity multiplier) followed by
//! a dense layer down to the latent width. Decoder mirrors with a dense layer
//! and stride-2 conv1d-transposes; the final layer is sigmoid so outputs lie
//! in [0, 1], everything else leaky ReLU.

use crate::nn::{Activation, LayerSpec, DEFAULT_LEAKY_SLOPE};

use super::BaeError;

#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureConfig {
    /// Number of conv layers in the encoder (1..=3).
    pub depth: usize,
    /// Channel / latent width multiplier (0.5, 1 or 2).
    pub capacity: f64,
    pub kernel_size: usize,
    pub leaky_slope: f64,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        Self {
            depth: 1,
            capacity: 1.0,
            kernel_size: 5,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }
}

impl ArchitectureConfig {
    pub fn validate(&self) -> Result<(), BaeError> {
        if !(1..=3).contains(&self.depth) {
            return Err(BaeError::InvalidConfig(format!(
                "depth must be 1..=3, got {}",
                self.depth
            )));
        }
        if self.capacity <= 0.0 || !self.capacity.is_finite() {
            return Err(BaeError::InvalidConfig(format!(
                "capacity must be positive, got {}",
                self.capacity
            )));
        }
        if self.kernel_size == 0 {
            return Err(BaeError::InvalidConfig("kernel size must be positive".into()));
        }
        Ok(())
    }

    fn channels(&self, level: usize) -> usize {
        let base = 8.0 * 2f64.powi(level as i32) * self.capacity;
        (base.round() as usize).max(1)
    }

    fn latent_width(&self, features: usize) -> usize {
        let raw = self.capacity * features as f64 / 2f64.powi(self.depth as i32 + 2);
        (raw.round() as usize).max(4)
    }
}

/// Builds the mirrored encoder/decoder layer list for `in_channels` sensors
/// of `features` features each.
pub fn build_autoencoder_specs(
    in_channels: usize,
    features: usize,
    cfg: &ArchitectureConfig,
) -> Result<Vec<LayerSpec>, BaeError> {
    cfg.validate()?;
    if in_channels == 0 || features == 0 {
        return Err(BaeError::InvalidConfig(
            "in_channels and features must be positive".into(),
        ));
    }
    let padded = features.next_power_of_two();
    if padded < (1 << cfg.depth) {
        return Err(BaeError::InvalidConfig(format!(
            "feature length {features} too short for depth {}",
            cfg.depth
        )));
    }

    let slope = cfg.leaky_slope;
    let act = Activation::LeakyRelu(slope);
    let mut specs = Vec::new();

    let mut prev = in_channels;
    for level in 0..cfg.depth {
        let ch = cfg.channels(level);
        specs.push(LayerSpec::conv1d(prev, ch, cfg.kernel_size, 2, act));
        prev = ch;
    }

    let enc_len = padded >> cfg.depth;
    let enc_flat = prev * enc_len;
    let latent = cfg.latent_width(features);
    specs.push(LayerSpec::dense(enc_flat, latent, act));
    specs.push(LayerSpec::dense(latent, enc_flat, act));

    for level in (0..cfg.depth).rev() {
        let ch = cfg.channels(level);
        let out = if level == 0 {
            in_channels
        } else {
            cfg.channels(level - 1)
        };
        let activation = if level == 0 { Activation::Sigmoid } else { act };
        specs.push(LayerSpec::conv1d_transpose(
            ch,
            out,
            cfg.kernel_size,
            2,
            activation,
        ));
    }

    Ok(specs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{forward, kaiming_uniform_init, Tensor};

    #[test]
    fn depth_one_half_capacity_layout() {
        let cfg = ArchitectureConfig {
            depth: 1,
            capacity: 0.5,
            ..ArchitectureConfig::default()
        };
        let specs = build_autoencoder_specs(4, 32, &cfg).unwrap();
        // conv(4 -> 4), dense(64 -> 4), dense(4 -> 64), convT(4 -> 4)
        assert_eq!(specs.len(), 4);
        assert!(matches!(
            specs[0].kind,
            crate::nn::LayerKind::Conv1d {
                in_channels: 4,
                out_channels: 4,
                kernel_size: 5,
                stride: 2
            }
        ));
        assert!(matches!(specs[3].activation, Activation::Sigmoid));
    }

    #[test]
    fn mirrored_shapes_for_all_depths_and_capacities() {
        for depth in 1..=3 {
            for capacity in [0.5, 1.0, 2.0] {
                for features in [24usize, 32, 100] {
                    for channels in [1usize, 3] {
                        let cfg = ArchitectureConfig {
                            depth,
                            capacity,
                            ..ArchitectureConfig::default()
                        };
                        let specs =
                            build_autoencoder_specs(channels, features, &cfg).unwrap();
                        let params = kaiming_uniform_init(&specs, 17).unwrap();
                        let x = Tensor::new(
                            vec![0.4; channels * features],
                            vec![channels, features],
                        )
                        .unwrap();
                        let (y, _) = forward(&params, &specs, &x).unwrap();
                        assert_eq!(
                            y.shape(),
                            &[channels, features],
                            "shape not mirrored at depth {depth} capacity {capacity} \
                             features {features} channels {channels}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_invalid_depth_and_capacity() {
        let cfg = ArchitectureConfig {
            depth: 4,
            ..ArchitectureConfig::default()
        };
        assert!(build_autoencoder_specs(1, 32, &cfg).is_err());
        let cfg = ArchitectureConfig {
            capacity: 0.0,
            ..ArchitectureConfig::default()
        };
        assert!(build_autoencoder_specs(1, 32, &cfg).is_err());
    }
}
