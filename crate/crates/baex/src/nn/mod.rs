//! Minimal feed-forward neural-network engine.
//!
//! Supports exactly the layer inventory the autoencoder architecture needs
//! (dense, strided conv1d, strided conv1d-transpose), each with an
//! element-wise activation, plus Kaiming-uniform initialisation and Adam.
//! Everything is 64-bit floats and pure with respect to its inputs; there is
//! no shared mutable state, so tensors and parameter sets can move freely
//! between threads.

mod adam;
mod init;
mod layers;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use init::kaiming_uniform_init;
pub use layers::{backward, forward, ForwardCache};
pub use tensor::Tensor;

use thiserror::Error;

/// Default negative-side slope for leaky ReLU activations.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid layer spec: {0}")]
    InvalidSpec(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("forward cache does not match the given parameters and specs")]
    StaleCache,
    #[error("non-finite gradient in layer {layer} ({kind})")]
    NonFiniteGradient { layer: usize, kind: &'static str },
    #[error("non-finite value produced in layer {layer} ({kind})")]
    NonFiniteValue { layer: usize, kind: &'static str },
}

/// Element-wise activation applied after a layer's linear map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    /// `max(z, slope * z)`.
    LeakyRelu(f64),
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => {
                if z > 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }

    /// Derivative with respect to the pre-activation `z`.
    #[inline]
    pub fn grad(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => {
                if z > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }

    /// Initialisation gain: `sqrt(2 / (1 + slope^2))` for leaky ReLU, 1 otherwise.
    pub fn gain(self) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => (2.0 / (1.0 + slope * slope)).sqrt(),
            _ => 1.0,
        }
    }
}

/// The linear map a layer performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Dense {
        in_dim: usize,
        out_dim: usize,
    },
    /// Strided 1-d convolution with "same"-style zero padding, so the output
    /// length is `ceil(len / stride)`.
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        stride: usize,
    },
    /// Exact adjoint of [`LayerKind::Conv1d`] with the same geometry; maps
    /// length `len` to `len * stride`.
    Conv1dTranspose {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        stride: usize,
    },
}

impl LayerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LayerKind::Dense { .. } => "dense",
            LayerKind::Conv1d { .. } => "conv1d",
            LayerKind::Conv1dTranspose { .. } => "conv1d-transpose",
        }
    }

    /// Number of inputs feeding each output unit; drives the init bounds.
    pub fn fan_in(&self) -> usize {
        match *self {
            LayerKind::Dense { in_dim, .. } => in_dim,
            LayerKind::Conv1d {
                in_channels,
                kernel_size,
                ..
            }
            | LayerKind::Conv1dTranspose {
                in_channels,
                kernel_size,
                ..
            } => in_channels * kernel_size,
        }
    }

    /// Shape of the weight tensor for this layer.
    ///
    /// Dense: `(out, in)`. Conv1d: `(out_ch, in_ch, k)`. Conv1d-transpose:
    /// `(in_ch, out_ch, k)`, matching the adjoint relation to conv1d.
    pub fn weight_shape(&self) -> Vec<usize> {
        match *self {
            LayerKind::Dense { in_dim, out_dim } => vec![out_dim, in_dim],
            LayerKind::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                ..
            } => vec![out_channels, in_channels, kernel_size],
            LayerKind::Conv1dTranspose {
                in_channels,
                out_channels,
                kernel_size,
                ..
            } => vec![in_channels, out_channels, kernel_size],
        }
    }

    pub fn bias_len(&self) -> usize {
        match *self {
            LayerKind::Dense { out_dim, .. } => out_dim,
            LayerKind::Conv1d { out_channels, .. }
            | LayerKind::Conv1dTranspose { out_channels, .. } => out_channels,
        }
    }
}

/// One layer: a linear map plus its activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn dense(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            kind: LayerKind::Dense { in_dim, out_dim },
            activation,
        }
    }

    pub fn conv1d(
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        stride: usize,
        activation: Activation,
    ) -> Self {
        Self {
            kind: LayerKind::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                stride,
            },
            activation,
        }
    }

    pub fn conv1d_transpose(
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        stride: usize,
        activation: Activation,
    ) -> Self {
        Self {
            kind: LayerKind::Conv1dTranspose {
                in_channels,
                out_channels,
                kernel_size,
                stride,
            },
            activation,
        }
    }
}

/// Rejects empty spec lists and non-positive dimensions (zero fan-in).
pub fn validate_specs(specs: &[LayerSpec]) -> Result<(), NnError> {
    if specs.is_empty() {
        return Err(NnError::InvalidSpec("empty layer list".into()));
    }
    for (i, spec) in specs.iter().enumerate() {
        let ok = match spec.kind {
            LayerKind::Dense { in_dim, out_dim } => in_dim > 0 && out_dim > 0,
            LayerKind::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                stride,
            }
            | LayerKind::Conv1dTranspose {
                in_channels,
                out_channels,
                kernel_size,
                stride,
            } => in_channels > 0 && out_channels > 0 && kernel_size > 0 && stride > 0,
        };
        if !ok {
            return Err(NnError::InvalidSpec(format!(
                "layer {i} ({}) has a zero dimension",
                spec.kind.name()
            )));
        }
        if let Activation::LeakyRelu(slope) = spec.activation {
            if !slope.is_finite() {
                return Err(NnError::InvalidSpec(format!(
                    "layer {i} has a non-finite leaky-relu slope"
                )));
            }
        }
    }
    Ok(())
}

/// Weight and bias tensors for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

/// All parameters of a network, one entry per [`LayerSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub layers: Vec<LayerParams>,
}

impl ParamSet {
    /// Zero-valued parameters shaped for `specs`.
    pub fn zeros(specs: &[LayerSpec]) -> Self {
        let layers = specs
            .iter()
            .map(|s| LayerParams {
                weight: Tensor::zeros(s.kind.weight_shape()),
                bias: Tensor::zeros(vec![s.kind.bias_len()]),
            })
            .collect();
        Self { layers }
    }

    /// Total number of scalar parameters.
    pub fn total_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    /// True when every layer's shapes match `other`'s.
    pub fn shape_matches(&self, other: &ParamSet) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.weight.shape() == b.weight.shape() && a.bias.shape() == b.bias.shape()
            })
    }

    /// Checks shapes against a spec list.
    pub fn matches_specs(&self, specs: &[LayerSpec]) -> bool {
        self.layers.len() == specs.len()
            && self.layers.iter().zip(specs).all(|(p, s)| {
                p.weight.shape() == s.kind.weight_shape().as_slice()
                    && p.bias.len() == s.kind.bias_len()
            })
    }

    /// Sum of squared differences over all parameters; the anchor penalty core.
    pub fn squared_distance(&self, other: &ParamSet) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.layers.iter().zip(&other.layers) {
            for (x, y) in a.weight.data().iter().zip(b.weight.data()) {
                let d = x - y;
                acc += d * d;
            }
            for (x, y) in a.bias.data().iter().zip(b.bias.data()) {
                let d = x - y;
                acc += d * d;
            }
        }
        acc
    }

    /// In-place `self += scale * other`, used for regulariser gradients.
    pub fn add_scaled(&mut self, other: &ParamSet, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weight.data_mut().iter_mut().zip(b.weight.data()) {
                *x += scale * y;
            }
            for (x, y) in a.bias.data_mut().iter_mut().zip(b.bias.data()) {
                *x += scale * y;
            }
        }
    }

    /// Serialises every parameter as little-endian f64 bytes in layer order.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.total_count() * 8);
        for layer in &self.layers {
            for v in layer.weight.data().iter().chain(layer.bias.data()) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }
}

/// FNV-1a digest of the structural description of a spec list.
pub fn spec_digest(specs: &[LayerSpec]) -> u64 {
    let mut bytes = Vec::new();
    for s in specs {
        match s.kind {
            LayerKind::Dense { in_dim, out_dim } => {
                bytes.push(0u8);
                bytes.extend_from_slice(&(in_dim as u64).to_le_bytes());
                bytes.extend_from_slice(&(out_dim as u64).to_le_bytes());
            }
            LayerKind::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                stride,
            } => {
                bytes.push(1u8);
                for v in [in_channels, out_channels, kernel_size, stride] {
                    bytes.extend_from_slice(&(v as u64).to_le_bytes());
                }
            }
            LayerKind::Conv1dTranspose {
                in_channels,
                out_channels,
                kernel_size,
                stride,
            } => {
                bytes.push(2u8);
                for v in [in_channels, out_channels, kernel_size, stride] {
                    bytes.extend_from_slice(&(v as u64).to_le_bytes());
                }
            }
        }
        match s.activation {
            Activation::LeakyRelu(slope) => {
                bytes.push(0u8);
                bytes.extend_from_slice(&slope.to_le_bytes());
            }
            Activation::Sigmoid => bytes.push(1u8),
            Activation::Identity => bytes.push(2u8),
        }
    }
    fnv1a(&bytes)
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn activation_values() {
        let leaky = Activation::LeakyRelu(0.01);
        assert_eq!(leaky.apply(2.0), 2.0);
        assert_eq!(leaky.apply(-2.0), -0.02);
        assert_eq!(leaky.grad(1.0), 1.0);
        assert_eq!(leaky.grad(-1.0), 0.01);
        assert!((Activation::Sigmoid.apply(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(Activation::Identity.apply(-3.5), -3.5);
    }

    #[test]
    fn gain_matches_formula() {
        let g = Activation::LeakyRelu(0.0).gain();
        assert!((g - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(Activation::Sigmoid.gain(), 1.0);
        let g = Activation::LeakyRelu(0.01).gain();
        assert!((g - (2.0 / (1.0 + 0.0001f64)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn validate_rejects_zero_dims() {
        let bad = [LayerSpec::dense(0, 3, Activation::Identity)];
        assert!(validate_specs(&bad).is_err());
        let bad = [LayerSpec::conv1d(1, 1, 0, 1, Activation::Identity)];
        assert!(validate_specs(&bad).is_err());
        assert!(validate_specs(&[]).is_err());
    }

    #[test]
    fn spec_digest_distinguishes_layers() {
        let a = [LayerSpec::dense(2, 3, Activation::Identity)];
        let b = [LayerSpec::dense(3, 2, Activation::Identity)];
        assert_ne!(spec_digest(&a), spec_digest(&b));
        assert_eq!(spec_digest(&a), spec_digest(&a));
    }
}
