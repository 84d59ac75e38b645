//! Forward and reverse passes over a layer stack.
//!
//! Conv layers use "same"-style zero padding so a stride-2 conv1d exactly
//! halves the length and a stride-2 conv1d-transpose exactly doubles it.
//! When the first layer is a conv kind, the input length is zero-padded up to
//! the next power of two on entry; when the last layer is a conv1d-transpose
//! and entry padding occurred, the output is cropped back to the original
//! length. Together these guarantee that a mirrored encoder/decoder stack
//! reproduces the input shape for arbitrary feature lengths.

use super::{fnv1a, spec_digest, validate_specs, LayerKind, LayerSpec, NnError, ParamSet, Tensor};

/// Activation record produced by [`forward`] and consumed by [`backward`].
///
/// Holds each layer's consumed input and pre-activation; `backward` rejects a
/// cache whose fingerprint no longer matches the parameters it was built
/// from (e.g. after an optimiser step).
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layer_inputs: Vec<Tensor>,
    preacts: Vec<Tensor>,
    output_shape: Vec<usize>,
    /// (original length, padded length) when entry padding was applied.
    prepad: Option<(usize, usize)>,
    cropped: bool,
    fingerprint: u64,
}

impl ForwardCache {
    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }

    /// (original, padded) input length when entry padding was applied.
    pub fn prepad(&self) -> Option<(usize, usize)> {
        self.prepad
    }
}

fn cache_fingerprint(specs: &[LayerSpec], params: &ParamSet) -> u64 {
    let mut bytes = spec_digest(specs).to_le_bytes().to_vec();
    for layer in &params.layers {
        for v in layer.weight.data().iter().chain(layer.bias.data()) {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fnv1a(&bytes)
}

/// Reshapes `t` to `[channels, len/channels]` for conv consumption.
fn as_channels(t: Tensor, channels: usize, layer: usize) -> Result<Tensor, NnError> {
    if t.shape().len() == 2 && t.shape()[0] == channels {
        return Ok(t);
    }
    let len = t.len();
    if len % channels == 0 && len > 0 {
        let cols = len / channels;
        t.reshaped(vec![channels, cols])
    } else {
        Err(NnError::ShapeMismatch(format!(
            "layer {layer}: cannot interpret {len} values as {channels} channels"
        )))
    }
}

/// "Same"-padding amount on the left for a conv mapping `len_in` to `len_out`.
fn same_pad_left(len_in: usize, len_out: usize, kernel: usize, stride: usize) -> isize {
    let needed = (len_out as isize - 1) * stride as isize + kernel as isize - len_in as isize;
    needed.max(0) / 2
}

/// Runs the layer stack on `x`, returning the output and the activation
/// record needed for [`backward`].
pub fn forward(
    params: &ParamSet,
    specs: &[LayerSpec],
    x: &Tensor,
) -> Result<(Tensor, ForwardCache), NnError> {
    validate_specs(specs)?;
    if !params.matches_specs(specs) {
        return Err(NnError::ShapeMismatch(
            "parameter shapes do not match specs".into(),
        ));
    }

    let mut cur = x.clone();
    let mut prepad = None;
    if let LayerKind::Conv1d { in_channels, .. } | LayerKind::Conv1dTranspose { in_channels, .. } =
        specs[0].kind
    {
        cur = as_channels(cur, in_channels, 0)?;
        let len = cur.shape()[1];
        let padded = len.next_power_of_two();
        if padded != len {
            let mut data = vec![0.0; in_channels * padded];
            for c in 0..in_channels {
                data[c * padded..c * padded + len]
                    .copy_from_slice(&cur.data()[c * len..(c + 1) * len]);
            }
            cur = Tensor::new(data, vec![in_channels, padded])?;
            prepad = Some((len, padded));
        }
    }

    let mut layer_inputs = Vec::with_capacity(specs.len());
    let mut preacts = Vec::with_capacity(specs.len());

    for (i, spec) in specs.iter().enumerate() {
        let input = match spec.kind {
            LayerKind::Dense { in_dim, .. } => {
                let len = cur.len();
                if len != in_dim {
                    return Err(NnError::ShapeMismatch(format!(
                        "layer {i}: dense expects {in_dim} inputs, got {len}"
                    )));
                }
                cur.reshaped(vec![in_dim])?
            }
            LayerKind::Conv1d { in_channels, .. }
            | LayerKind::Conv1dTranspose { in_channels, .. } => as_channels(cur, in_channels, i)?,
        };

        let z = linear_forward(&params.layers[i].weight, &params.layers[i].bias, spec, &input)?;
        let mut out = z.clone();
        for v in out.data_mut() {
            *v = spec.activation.apply(*v);
        }
        layer_inputs.push(input);
        preacts.push(z);
        cur = out;
    }

    let mut cropped = false;
    if let Some((orig, _)) = prepad {
        if matches!(specs[specs.len() - 1].kind, LayerKind::Conv1dTranspose { .. })
            && cur.shape().len() == 2
            && cur.shape()[1] >= orig
        {
            let channels = cur.shape()[0];
            let padded_len = cur.shape()[1];
            let mut data = vec![0.0; channels * orig];
            for c in 0..channels {
                data[c * orig..(c + 1) * orig]
                    .copy_from_slice(&cur.data()[c * padded_len..c * padded_len + orig]);
            }
            cur = Tensor::new(data, vec![channels, orig])?;
            cropped = true;
        }
    }

    let cache = ForwardCache {
        layer_inputs,
        preacts,
        output_shape: cur.shape().to_vec(),
        prepad,
        cropped,
        fingerprint: cache_fingerprint(specs, params),
    };
    Ok((cur, cache))
}

/// Reverse pass: maps an upstream gradient `dLoss/dOutput` to parameter
/// gradients `dLoss/dTheta` for every layer.
pub fn backward(
    params: &ParamSet,
    specs: &[LayerSpec],
    cache: &ForwardCache,
    upstream: &Tensor,
) -> Result<ParamSet, NnError> {
    if cache.fingerprint != cache_fingerprint(specs, params) {
        return Err(NnError::StaleCache);
    }
    if upstream.shape() != cache.output_shape.as_slice() {
        return Err(NnError::ShapeMismatch(format!(
            "upstream gradient shape {:?} does not match output shape {:?}",
            upstream.shape(),
            cache.output_shape
        )));
    }

    // Undo the exit crop: scatter the upstream gradient into the padded tail.
    let mut grad: Vec<f64> = if cache.cropped {
        let channels = cache.output_shape[0];
        let orig = cache.output_shape[1];
        let padded_len = cache.preacts.last().map(|z| z.shape()[1]).unwrap_or(orig);
        let mut g = vec![0.0; channels * padded_len];
        for c in 0..channels {
            g[c * padded_len..c * padded_len + orig]
                .copy_from_slice(&upstream.data()[c * orig..(c + 1) * orig]);
        }
        g
    } else {
        upstream.data().to_vec()
    };

    let mut grads = ParamSet::zeros(specs);
    for i in (0..specs.len()).rev() {
        let z = &cache.preacts[i];
        if grad.len() != z.len() {
            return Err(NnError::ShapeMismatch(format!(
                "layer {i}: gradient length {} does not match activation length {}",
                grad.len(),
                z.len()
            )));
        }
        let mut dz = grad;
        for (g, zv) in dz.iter_mut().zip(z.data()) {
            *g *= specs[i].activation.grad(*zv);
        }
        let input = &cache.layer_inputs[i];
        let (dw, db, dx) = linear_backward(
            &params.layers[i].weight,
            &specs[i],
            input,
            &dz,
            z.shape(),
        )?;
        grads.layers[i].weight = dw;
        grads.layers[i].bias = db;
        grad = dx;
    }
    Ok(grads)
}

/// Linear part of a layer's forward pass (no activation).
fn linear_forward(
    weight: &Tensor,
    bias: &Tensor,
    spec: &LayerSpec,
    input: &Tensor,
) -> Result<Tensor, NnError> {
    match spec.kind {
        LayerKind::Dense { in_dim, out_dim } => {
            let x = input.data();
            let w = weight.data();
            let b = bias.data();
            let mut z = vec![0.0; out_dim];
            for o in 0..out_dim {
                let row = &w[o * in_dim..(o + 1) * in_dim];
                let mut acc = b[o];
                for (wi, xi) in row.iter().zip(x) {
                    acc += wi * xi;
                }
                z[o] = acc;
            }
            Tensor::new(z, vec![out_dim])
        }
        LayerKind::Conv1d {
            in_channels,
            out_channels,
            kernel_size,
            stride,
        } => {
            let len = input.shape()[1];
            let len_out = len.div_ceil(stride);
            let pl = same_pad_left(len, len_out, kernel_size, stride);
            let x = input.data();
            let w = weight.data();
            let b = bias.data();
            let mut z = vec![0.0; out_channels * len_out];
            for co in 0..out_channels {
                for j in 0..len_out {
                    let mut acc = b[co];
                    for ci in 0..in_channels {
                        let wbase = (co * in_channels + ci) * kernel_size;
                        let xbase = ci * len;
                        for t in 0..kernel_size {
                            let idx = (j * stride + t) as isize - pl;
                            if idx >= 0 && (idx as usize) < len {
                                acc += w[wbase + t] * x[xbase + idx as usize];
                            }
                        }
                    }
                    z[co * len_out + j] = acc;
                }
            }
            Tensor::new(z, vec![out_channels, len_out])
        }
        LayerKind::Conv1dTranspose {
            in_channels,
            out_channels,
            kernel_size,
            stride,
        } => {
            let len = input.shape()[1];
            let len_out = len * stride;
            let pl = same_pad_left(len_out, len, kernel_size, stride);
            let u = input.data();
            let w = weight.data();
            let b = bias.data();
            let mut z = vec![0.0; out_channels * len_out];
            for co in 0..out_channels {
                let zbase = co * len_out;
                for v in &mut z[zbase..zbase + len_out] {
                    *v = b[co];
                }
            }
            for ci in 0..in_channels {
                let ubase = ci * len;
                for j in 0..len {
                    let uval = u[ubase + j];
                    for t in 0..kernel_size {
                        let i = (j * stride + t) as isize - pl;
                        if i >= 0 && (i as usize) < len_out {
                            let i = i as usize;
                            for co in 0..out_channels {
                                z[co * len_out + i] +=
                                    w[(ci * out_channels + co) * kernel_size + t] * uval;
                            }
                        }
                    }
                }
            }
            Tensor::new(z, vec![out_channels, len_out])
        }
    }
}

/// Gradients of the linear part: returns (dWeight, dBias, dInput).
fn linear_backward(
    weight: &Tensor,
    spec: &LayerSpec,
    input: &Tensor,
    dz: &[f64],
    z_shape: &[usize],
) -> Result<(Tensor, Tensor, Vec<f64>), NnError> {
    match spec.kind {
        LayerKind::Dense { in_dim, out_dim } => {
            let x = input.data();
            let w = weight.data();
            let mut dw = vec![0.0; out_dim * in_dim];
            let mut dx = vec![0.0; in_dim];
            for o in 0..out_dim {
                let g = dz[o];
                let base = o * in_dim;
                for i in 0..in_dim {
                    dw[base + i] = g * x[i];
                    dx[i] += g * w[base + i];
                }
            }
            Ok((
                Tensor::new(dw, vec![out_dim, in_dim])?,
                Tensor::from_vec(dz.to_vec()),
                dx,
            ))
        }
        LayerKind::Conv1d {
            in_channels,
            out_channels,
            kernel_size,
            stride,
        } => {
            let len = input.shape()[1];
            let len_out = z_shape[1];
            let pl = same_pad_left(len, len_out, kernel_size, stride);
            let x = input.data();
            let w = weight.data();
            let mut dw = vec![0.0; out_channels * in_channels * kernel_size];
            let mut db = vec![0.0; out_channels];
            let mut dx = vec![0.0; in_channels * len];
            for co in 0..out_channels {
                for j in 0..len_out {
                    let g = dz[co * len_out + j];
                    db[co] += g;
                    for ci in 0..in_channels {
                        let wbase = (co * in_channels + ci) * kernel_size;
                        let xbase = ci * len;
                        for t in 0..kernel_size {
                            let idx = (j * stride + t) as isize - pl;
                            if idx >= 0 && (idx as usize) < len {
                                let idx = idx as usize;
                                dw[wbase + t] += g * x[xbase + idx];
                                dx[xbase + idx] += g * w[wbase + t];
                            }
                        }
                    }
                }
            }
            Ok((
                Tensor::new(dw, vec![out_channels, in_channels, kernel_size])?,
                Tensor::from_vec(db),
                dx,
            ))
        }
        LayerKind::Conv1dTranspose {
            in_channels,
            out_channels,
            kernel_size,
            stride,
        } => {
            let len = input.shape()[1];
            let len_out = z_shape[1];
            let pl = same_pad_left(len_out, len, kernel_size, stride);
            let u = input.data();
            let w = weight.data();
            let mut dw = vec![0.0; in_channels * out_channels * kernel_size];
            let mut db = vec![0.0; out_channels];
            let mut du = vec![0.0; in_channels * len];
            for co in 0..out_channels {
                let base = co * len_out;
                for i in 0..len_out {
                    db[co] += dz[base + i];
                }
            }
            for ci in 0..in_channels {
                let ubase = ci * len;
                for j in 0..len {
                    let uval = u[ubase + j];
                    for t in 0..kernel_size {
                        let i = (j * stride + t) as isize - pl;
                        if i >= 0 && (i as usize) < len_out {
                            let i = i as usize;
                            for co in 0..out_channels {
                                let g = dz[co * len_out + i];
                                let widx = (ci * out_channels + co) * kernel_size + t;
                                dw[widx] += uval * g;
                                du[ubase + j] += w[widx] * g;
                            }
                        }
                    }
                }
            }
            Ok((
                Tensor::new(dw, vec![in_channels, out_channels, kernel_size])?,
                Tensor::from_vec(db),
                du,
            ))
        }
    }
}
