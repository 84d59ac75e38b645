//! Cube file formats.
//!
//! CSV: header `cycle,sensor,f0,...,f{D-1}`, one row per (cycle, sensor),
//! rows grouped by cycle with the same sensor order in every cycle block.
//! Binary: magic `SCUB1`, three little-endian u64 dims (N, K, D), then
//! N*K*D little-endian f64 values in row-major order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{PipelineError, SensorCube};

pub const BINARY_MAGIC: &[u8; 5] = b"SCUB1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubeFormat {
    Csv,
    Binary,
}

fn io_err(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_cube_csv(cube: &SensorCube, path: &Path) -> Result<(), PipelineError> {
    let mut out = String::new();
    out.push_str("cycle,sensor");
    for d in 0..cube.features() {
        out.push_str(&format!(",f{d}"));
    }
    out.push('\n');
    for n in 0..cube.cycles() {
        for k in 0..cube.sensors() {
            out.push_str(&format!("{n},{}", cube.sensor_names()[k]));
            for v in cube.row(n, k) {
                out.push(',');
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_cube_csv(path: &Path) -> Result<SensorCube, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or(PipelineError::Parse {
        line: 1,
        message: "empty file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "cycle" || cols[1] != "sensor" {
        return Err(PipelineError::Parse {
            line: 1,
            message: "header must start with 'cycle,sensor,f0,...'".into(),
        });
    }
    let features = cols.len() - 2;
    for (d, name) in cols[2..].iter().enumerate() {
        if *name != format!("f{d}") {
            return Err(PipelineError::Parse {
                line: 1,
                message: format!("feature column {} should be named f{d}", name),
            });
        }
    }

    let mut sensor_names: Vec<String> = Vec::new();
    let mut data: Vec<f64> = Vec::new();
    let mut current_cycle: Option<u64> = None;
    let mut sensor_in_cycle = 0usize;
    let mut cycle_count = 0usize;

    for (idx, raw) in lines {
        let lineno = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != features + 2 {
            return Err(PipelineError::Parse {
                line: lineno,
                message: format!(
                    "expected {} fields, found {}",
                    features + 2,
                    fields.len()
                ),
            });
        }
        let cycle: u64 = fields[0].parse().map_err(|_| PipelineError::Parse {
            line: lineno,
            message: format!("invalid cycle index '{}'", fields[0]),
        })?;
        let sensor = fields[1].to_string();

        match current_cycle {
            None => {
                current_cycle = Some(cycle);
                cycle_count = 1;
            }
            Some(c) if cycle == c => {}
            Some(c) => {
                if cycle <= c {
                    return Err(PipelineError::Parse {
                        line: lineno,
                        message: format!("cycle {cycle} out of order after {c}"),
                    });
                }
                if sensor_in_cycle != sensor_names.len() {
                    return Err(PipelineError::Parse {
                        line: lineno,
                        message: format!(
                            "cycle {c} has {sensor_in_cycle} sensor rows, expected {}",
                            sensor_names.len()
                        ),
                    });
                }
                current_cycle = Some(cycle);
                cycle_count += 1;
                sensor_in_cycle = 0;
            }
        }

        if cycle_count == 1 {
            if sensor_names.contains(&sensor) {
                return Err(PipelineError::Parse {
                    line: lineno,
                    message: format!("duplicate sensor '{sensor}' in first cycle"),
                });
            }
            sensor_names.push(sensor);
        } else {
            let expect = sensor_names.get(sensor_in_cycle).cloned().unwrap_or_default();
            if sensor != expect {
                return Err(PipelineError::Parse {
                    line: lineno,
                    message: format!("expected sensor '{expect}' here, found '{sensor}'"),
                });
            }
        }
        sensor_in_cycle += 1;

        for (d, field) in fields[2..].iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| PipelineError::Parse {
                line: lineno,
                message: format!("non-numeric cell '{field}' in column f{d}"),
            })?;
            data.push(v);
        }
    }

    if cycle_count == 0 {
        return Err(PipelineError::Parse {
            line: 2,
            message: "no data rows".into(),
        });
    }
    if sensor_in_cycle != sensor_names.len() {
        return Err(PipelineError::Parse {
            line: text.lines().count(),
            message: format!(
                "last cycle has {sensor_in_cycle} sensor rows, expected {}",
                sensor_names.len()
            ),
        });
    }

    SensorCube::new(data, cycle_count, sensor_names.len(), features, sensor_names)
}

pub fn write_cube_binary(cube: &SensorCube, path: &Path) -> Result<(), PipelineError> {
    let mut buf: Vec<u8> =
        Vec::with_capacity(5 + 24 + cube.data().len() * 8);
    buf.extend_from_slice(BINARY_MAGIC);
    for dim in [cube.cycles(), cube.sensors(), cube.features()] {
        buf.extend_from_slice(&(dim as u64).to_le_bytes());
    }
    for v in cube.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(&buf).map_err(|e| io_err(path, e))
}

pub fn read_cube_binary(path: &Path) -> Result<SensorCube, PipelineError> {
    let mut f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf).map_err(|e| io_err(path, e))?;
    if buf.len() < 5 + 24 || &buf[..5] != BINARY_MAGIC {
        return Err(PipelineError::InvalidCube(
            "not a binary cube (bad magic or truncated header)".into(),
        ));
    }
    let mut dims = [0usize; 3];
    for (i, dim) in dims.iter_mut().enumerate() {
        let start = 5 + i * 8;
        let mut raw = [0u8; 8];
        raw.copy_from_slice(&buf[start..start + 8]);
        *dim = u64::from_le_bytes(raw) as usize;
    }
    let [n, k, d] = dims;
    let expected = n
        .checked_mul(k)
        .and_then(|x| x.checked_mul(d))
        .ok_or_else(|| PipelineError::InvalidCube("dimension overflow".into()))?;
    let body = &buf[5 + 24..];
    if body.len() != expected * 8 {
        return Err(PipelineError::InvalidCube(format!(
            "payload holds {} values, header declares {expected}",
            body.len() / 8
        )));
    }
    let mut data = Vec::with_capacity(expected);
    for chunk in body.chunks_exact(8) {
        let mut raw = [0u8; 8];
        raw.copy_from_slice(chunk);
        data.push(f64::from_le_bytes(raw));
    }
    SensorCube::with_default_names(data, n, k, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn small_cube() -> SensorCube {
        SensorCube::with_default_names(
            vec![1.0, 2.5, -0.25, 4.0, 5.0, 6.125, 7.0, 8.0],
            2,
            1,
            4,
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cube.csv");
        let cube = small_cube();
        write_cube_csv(&cube, &path).unwrap();
        let back = read_cube_csv(&path).unwrap();
        assert_eq!(back, cube);
        assert_eq!(back.cycles(), 2);
        assert_eq!(back.sensors(), 1);
        assert_eq!(back.features(), 4);
    }

    #[test]
    fn binary_round_trip_is_bit_identical() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cube.scub");
        let cube = small_cube();
        write_cube_binary(&cube, &path).unwrap();
        let back = read_cube_binary(&path).unwrap();
        assert_eq!(back.data(), cube.data());
    }

    #[test]
    fn missing_cell_names_offending_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        std::fs::write(
            &path,
            "cycle,sensor,f0,f1\n0,a,1.0,2.0\n1,a,3.0\n",
        )
        .unwrap();
        match read_cube_csv(&path) {
            Err(PipelineError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error on line 3, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("alpha.csv");
        std::fs::write(&path, "cycle,sensor,f0\n0,a,oops\n").unwrap();
        match read_cube_csv(&path) {
            Err(PipelineError::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("oops"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_sensor_order_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("order.csv");
        std::fs::write(
            &path,
            "cycle,sensor,f0\n0,a,1\n0,b,2\n1,b,3\n1,a,4\n",
        )
        .unwrap();
        assert!(read_cube_csv(&path).is_err());
    }

    #[test]
    fn two_cycles_one_sensor_shape() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("shape.csv");
        std::fs::write(
            &path,
            "cycle,sensor,f0,f1,f2,f3\n0,acc,1,2,3,4\n1,acc,5,6,7,8\n",
        )
        .unwrap();
        let cube = read_cube_csv(&path).unwrap();
        assert_eq!(
            (cube.cycles(), cube.sensors(), cube.features()),
            (2, 1, 4)
        );
        assert_eq!(cube.sensor_names(), &["acc".to_string()]);
    }
}
