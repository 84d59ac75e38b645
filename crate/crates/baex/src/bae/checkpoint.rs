//! Model checkpoint files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "BAEC" | u32 version | u8 scope tag | u64 sensor index
//! | u64 M | f64 lambda | u64 spec digest | u64 seed
//! | u64 input sensors | u64 input features
//! | u64 spec count | per spec: u8 kind, dims (u64), u8 activation [, f64 slope]
//! | per member: parameter block then anchor block
//!   (per layer: u64 count + f64 values for weight, then bias)
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::nn::{
    spec_digest, Activation, LayerKind, LayerParams, LayerSpec, ParamSet, Tensor,
};

use super::{BaeEnsemble, BaeError, EnsembleMember, ModelScope};

const MAGIC: &[u8; 4] = b"BAEC";
const VERSION: u32 = 1;

fn err(msg: impl Into<String>) -> BaeError {
    BaeError::Checkpoint(msg.into())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], BaeError> {
        if self.pos + n > self.buf.len() {
            return Err(err("unexpected end of checkpoint"));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, BaeError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, BaeError> {
        let mut raw = [0u8; 4];
        raw.copy_from_slice(self.take(4)?);
        Ok(u32::from_le_bytes(raw))
    }

    fn u64(&mut self) -> Result<u64, BaeError> {
        let mut raw = [0u8; 8];
        raw.copy_from_slice(self.take(8)?);
        Ok(u64::from_le_bytes(raw))
    }

    fn f64(&mut self) -> Result<f64, BaeError> {
        let mut raw = [0u8; 8];
        raw.copy_from_slice(self.take(8)?);
        Ok(f64::from_le_bytes(raw))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>, BaeError> {
        let raw = self.take(n * 8)?;
        let mut out = Vec::with_capacity(n);
        for chunk in raw.chunks_exact(8) {
            let mut b = [0u8; 8];
            b.copy_from_slice(chunk);
            out.push(f64::from_le_bytes(b));
        }
        Ok(out)
    }
}

fn write_specs(out: &mut Vec<u8>, specs: &[LayerSpec]) {
    out.extend_from_slice(&(specs.len() as u64).to_le_bytes());
    for s in specs {
        match s.kind {
            LayerKind::Dense { in_dim, out_dim } => {
                out.push(0);
                out.extend_from_slice(&(in_dim as u64).to_le_bytes());
                out.extend_from_slice(&(out_dim as u64).to_le_bytes());
            }
            LayerKind::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                stride,
            } => {
                out.push(1);
                for v in [in_channels, out_channels, kernel_size, stride] {
                    out.extend_from_slice(&(v as u64).to_le_bytes());
                }
            }
            LayerKind::Conv1dTranspose {
                in_channels,
                out_channels,
                kernel_size,
                stride,
            } => {
                out.push(2);
                for v in [in_channels, out_channels, kernel_size, stride] {
                    out.extend_from_slice(&(v as u64).to_le_bytes());
                }
            }
        }
        match s.activation {
            Activation::LeakyRelu(slope) => {
                out.push(0);
                out.extend_from_slice(&slope.to_le_bytes());
            }
            Activation::Sigmoid => out.push(1),
            Activation::Identity => out.push(2),
        }
    }
}

fn read_specs(r: &mut Reader) -> Result<Vec<LayerSpec>, BaeError> {
    let count = r.u64()? as usize;
    let mut specs = Vec::with_capacity(count);
    for _ in 0..count {
        let kind = match r.u8()? {
            0 => LayerKind::Dense {
                in_dim: r.u64()? as usize,
                out_dim: r.u64()? as usize,
            },
            1 => LayerKind::Conv1d {
                in_channels: r.u64()? as usize,
                out_channels: r.u64()? as usize,
                kernel_size: r.u64()? as usize,
                stride: r.u64()? as usize,
            },
            2 => LayerKind::Conv1dTranspose {
                in_channels: r.u64()? as usize,
                out_channels: r.u64()? as usize,
                kernel_size: r.u64()? as usize,
                stride: r.u64()? as usize,
            },
            t => return Err(err(format!("unknown layer kind tag {t}"))),
        };
        let activation = match r.u8()? {
            0 => Activation::LeakyRelu(r.f64()?),
            1 => Activation::Sigmoid,
            2 => Activation::Identity,
            t => return Err(err(format!("unknown activation tag {t}"))),
        };
        specs.push(LayerSpec { kind, activation });
    }
    Ok(specs)
}

fn write_param_set(out: &mut Vec<u8>, params: &ParamSet) {
    for layer in &params.layers {
        for tensor in [&layer.weight, &layer.bias] {
            out.extend_from_slice(&(tensor.len() as u64).to_le_bytes());
            for v in tensor.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
}

fn read_param_set(r: &mut Reader, specs: &[LayerSpec]) -> Result<ParamSet, BaeError> {
    let mut layers = Vec::with_capacity(specs.len());
    for spec in specs {
        let w_shape = spec.kind.weight_shape();
        let w_len: usize = w_shape.iter().product();
        let count = r.u64()? as usize;
        if count != w_len {
            return Err(err(format!(
                "weight block holds {count} values, spec needs {w_len}"
            )));
        }
        let weight = Tensor::new(r.f64_vec(w_len)?, w_shape).map_err(|e| err(e.to_string()))?;
        let b_len = spec.kind.bias_len();
        let count = r.u64()? as usize;
        if count != b_len {
            return Err(err(format!(
                "bias block holds {count} values, spec needs {b_len}"
            )));
        }
        let bias = Tensor::from_vec(r.f64_vec(b_len)?);
        layers.push(LayerParams { weight, bias });
    }
    Ok(ParamSet { layers })
}

pub fn save_ensemble(ensemble: &BaeEnsemble, path: &Path) -> Result<(), BaeError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    match ensemble.scope {
        ModelScope::Centralised => {
            out.push(0);
            out.extend_from_slice(&0u64.to_le_bytes());
        }
        ModelScope::Sensor(k) => {
            out.push(1);
            out.extend_from_slice(&(k as u64).to_le_bytes());
        }
    }
    out.extend_from_slice(&(ensemble.ensemble_size() as u64).to_le_bytes());
    out.extend_from_slice(&ensemble.lambda.to_le_bytes());
    out.extend_from_slice(&spec_digest(&ensemble.specs).to_le_bytes());
    out.extend_from_slice(&ensemble.seed.to_le_bytes());
    out.extend_from_slice(&(ensemble.input_sensors as u64).to_le_bytes());
    out.extend_from_slice(&(ensemble.input_features as u64).to_le_bytes());
    write_specs(&mut out, &ensemble.specs);
    for member in &ensemble.members {
        write_param_set(&mut out, &member.params);
        write_param_set(&mut out, &member.anchor);
    }

    let mut f = fs::File::create(path)
        .map_err(|e| err(format!("cannot create {}: {e}", path.display())))?;
    f.write_all(&out)
        .map_err(|e| err(format!("cannot write {}: {e}", path.display())))
}

pub fn load_ensemble(path: &Path) -> Result<BaeEnsemble, BaeError> {
    let mut buf = Vec::new();
    fs::File::open(path)
        .map_err(|e| err(format!("cannot open {}: {e}", path.display())))?
        .read_to_end(&mut buf)
        .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
    let mut r = Reader { buf: &buf, pos: 0 };

    if r.take(4)? != MAGIC {
        return Err(err("bad magic; not a model checkpoint"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(err(format!("unsupported checkpoint version {version}")));
    }
    let scope = match r.u8()? {
        0 => {
            r.u64()?;
            ModelScope::Centralised
        }
        1 => ModelScope::Sensor(r.u64()? as usize),
        t => return Err(err(format!("unknown scope tag {t}"))),
    };
    let m = r.u64()? as usize;
    let lambda = r.f64()?;
    let digest = r.u64()?;
    let seed = r.u64()?;
    let input_sensors = r.u64()? as usize;
    let input_features = r.u64()? as usize;
    let specs = read_specs(&mut r)?;
    if spec_digest(&specs) != digest {
        return Err(err("spec digest mismatch; checkpoint is corrupt"));
    }
    let mut members = Vec::with_capacity(m);
    for _ in 0..m {
        let params = read_param_set(&mut r, &specs)?;
        let anchor = read_param_set(&mut r, &specs)?;
        members.push(EnsembleMember { params, anchor });
    }
    if r.pos != buf.len() {
        return Err(err("trailing bytes after last member block"));
    }
    Ok(BaeEnsemble {
        members,
        specs,
        lambda,
        scope,
        seed,
        input_sensors,
        input_features,
    })
}

/// FNV-1a digest of a checkpoint file's bytes, as a hex string.
pub fn read_checkpoint_digest(path: &Path) -> Result<String, BaeError> {
    let mut buf = Vec::new();
    fs::File::open(path)
        .map_err(|e| err(format!("cannot open {}: {e}", path.display())))?
        .read_to_end(&mut buf)
        .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
    Ok(format!("{:016x}", crate::nn::fnv1a(&buf)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bae::{train_bae, ArchitectureConfig, LrPolicy, TrainingConfig};
    use crate::pipeline::SensorCube;
    use tempfile::tempdir;

    fn trained() -> BaeEnsemble {
        let cube = SensorCube::with_default_names(vec![0.5; 6 * 16], 6, 1, 16).unwrap();
        let arch = ArchitectureConfig {
            depth: 1,
            capacity: 0.5,
            ..ArchitectureConfig::default()
        };
        let cfg = TrainingConfig {
            ensemble_size: 2,
            epochs: 2,
            learning_rate: LrPolicy::Fixed(0.01),
            seed: 4,
            ..TrainingConfig::default()
        };
        train_bae(&cube, &arch, &cfg, ModelScope::Sensor(3)).unwrap()
    }

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.baec");
        let ens = trained();
        save_ensemble(&ens, &path).unwrap();
        let back = load_ensemble(&path).unwrap();
        assert_eq!(back.specs, ens.specs);
        assert_eq!(back.lambda, ens.lambda);
        assert_eq!(back.scope, ens.scope);
        assert_eq!(back.seed, ens.seed);
        assert_eq!(back.input_sensors, ens.input_sensors);
        assert_eq!(back.input_features, ens.input_features);
        for (a, b) in back.members.iter().zip(&ens.members) {
            assert_eq!(a.params, b.params);
            assert_eq!(a.anchor, b.anchor);
        }
    }

    #[test]
    fn serialized_anchors_unchanged_by_training() {
        // The anchor blocks in a checkpoint equal a fresh draw from the
        // anchor seeds: training never touches them.
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.baec");
        let ens = trained();
        save_ensemble(&ens, &path).unwrap();
        let back = load_ensemble(&path).unwrap();
        for (m, member) in back.members.iter().enumerate() {
            let fresh = crate::nn::kaiming_uniform_init(
                &back.specs,
                crate::seed_for(4, "anchor", m as u64),
            )
            .unwrap();
            assert_eq!(member.anchor.to_le_bytes(), fresh.to_le_bytes());
        }
    }

    #[test]
    fn corrupt_file_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.baec");
        let ens = trained();
        save_ensemble(&ens, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[6] ^= 0xff; // clobber the version field
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_ensemble(&path).is_err());
    }
}
