//! Data preparation: cube ingestion, cycle trimming, FFT magnitude features,
//! chronological splitting, min-max scaling, covariate-shift scenario
//! construction via bootstrap resampling, attribution postprocessing, and a
//! synthetic drift generator for desk-scale experiments.

mod cube;
mod fft;
mod postprocess;
mod prep;
mod scenario;
mod synth;

pub use cube::{read_cube_binary, read_cube_csv, write_cube_binary, write_cube_csv, CubeFormat};
pub use fft::fft_magnitude;
pub use postprocess::{postprocess, PostprocessOutcome};
pub use prep::{apply_scale, chronological_split, fit_scale, trim_cycles, ScalerState};
pub use scenario::{build_scenario, ShiftScenario};
pub use synth::{synth_drift, DriftProfile, SynthConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid cube: {0}")]
    InvalidCube(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("operation would produce an empty cube: {0}")]
    Empty(String),
}

/// The universal data carrier: `cycles x sensors x features`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorCube {
    data: Vec<f64>,
    cycles: usize,
    sensors: usize,
    features: usize,
    sensor_names: Vec<String>,
}

impl SensorCube {
    /// Builds a cube, validating dimensions, finiteness and name count.
    pub fn new(
        data: Vec<f64>,
        cycles: usize,
        sensors: usize,
        features: usize,
        sensor_names: Vec<String>,
    ) -> Result<Self, PipelineError> {
        if cycles == 0 || sensors == 0 || features == 0 {
            return Err(PipelineError::InvalidCube(format!(
                "dimensions must be positive, got {cycles}x{sensors}x{features}"
            )));
        }
        if data.len() != cycles * sensors * features {
            return Err(PipelineError::InvalidCube(format!(
                "data length {} does not match {cycles}x{sensors}x{features}",
                data.len()
            )));
        }
        if sensor_names.len() != sensors {
            return Err(PipelineError::InvalidCube(format!(
                "{} sensor names for {sensors} sensors",
                sensor_names.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(PipelineError::InvalidCube(format!(
                "non-finite value at flat index {pos}"
            )));
        }
        Ok(Self {
            data,
            cycles,
            sensors,
            features,
            sensor_names,
        })
    }

    /// Cube with default sensor names `s0..s{K-1}`.
    pub fn with_default_names(
        data: Vec<f64>,
        cycles: usize,
        sensors: usize,
        features: usize,
    ) -> Result<Self, PipelineError> {
        let names = (0..sensors).map(|k| format!("s{k}")).collect();
        Self::new(data, cycles, sensors, features, names)
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn sensors(&self) -> usize {
        self.sensors
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn sensor_names(&self) -> &[String] {
        &self.sensor_names
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, cycle: usize, sensor: usize, feature: usize) -> f64 {
        self.data[(cycle * self.sensors + sensor) * self.features + feature]
    }

    /// One sensor's feature row for a cycle.
    #[inline]
    pub fn row(&self, cycle: usize, sensor: usize) -> &[f64] {
        let base = (cycle * self.sensors + sensor) * self.features;
        &self.data[base..base + self.features]
    }

    pub(crate) fn row_mut(&mut self, cycle: usize, sensor: usize) -> &mut [f64] {
        let base = (cycle * self.sensors + sensor) * self.features;
        &mut self.data[base..base + self.features]
    }

    /// The full `sensors x features` block for one cycle.
    #[inline]
    pub fn cycle_block(&self, cycle: usize) -> &[f64] {
        let base = cycle * self.sensors * self.features;
        &self.data[base..base + self.sensors * self.features]
    }

    /// Extracts a single-sensor cube (`cycles x 1 x features`).
    pub fn slice_sensor(&self, sensor: usize) -> Result<SensorCube, PipelineError> {
        if sensor >= self.sensors {
            return Err(PipelineError::InvalidArgument(format!(
                "sensor index {sensor} out of range for {} sensors",
                self.sensors
            )));
        }
        let mut data = Vec::with_capacity(self.cycles * self.features);
        for n in 0..self.cycles {
            data.extend_from_slice(self.row(n, sensor));
        }
        SensorCube::new(
            data,
            self.cycles,
            1,
            self.features,
            vec![self.sensor_names[sensor].clone()],
        )
    }

    /// Keeps the half-open cycle range `[start, end)`.
    pub fn slice_cycles(&self, start: usize, end: usize) -> Result<SensorCube, PipelineError> {
        if start >= end || end > self.cycles {
            return Err(PipelineError::InvalidArgument(format!(
                "cycle range {start}..{end} invalid for {} cycles",
                self.cycles
            )));
        }
        let stride = self.sensors * self.features;
        let data = self.data[start * stride..end * stride].to_vec();
        SensorCube::new(
            data,
            end - start,
            self.sensors,
            self.features,
            self.sensor_names.clone(),
        )
    }

    /// Concatenates two cubes along the cycle axis.
    pub fn concat_cycles(&self, other: &SensorCube) -> Result<SensorCube, PipelineError> {
        if self.sensors != other.sensors || self.features != other.features {
            return Err(PipelineError::InvalidArgument(
                "cubes disagree on sensors or features".into(),
            ));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        SensorCube::new(
            data,
            self.cycles + other.cycles,
            self.sensors,
            self.features,
            self.sensor_names.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions_and_non_finite() {
        assert!(SensorCube::with_default_names(vec![], 0, 1, 1).is_err());
        assert!(SensorCube::with_default_names(vec![1.0, 2.0], 1, 1, 3).is_err());
        assert!(SensorCube::with_default_names(vec![f64::NAN], 1, 1, 1).is_err());
    }

    #[test]
    fn indexing_is_row_major() {
        // 2 cycles x 2 sensors x 2 features
        let data: Vec<f64> = (0..8).map(f64::from).collect();
        let cube = SensorCube::with_default_names(data, 2, 2, 2).unwrap();
        assert_eq!(cube.get(0, 0, 1), 1.0);
        assert_eq!(cube.get(0, 1, 0), 2.0);
        assert_eq!(cube.get(1, 0, 0), 4.0);
        assert_eq!(cube.row(1, 1), &[6.0, 7.0]);
        assert_eq!(cube.cycle_block(1), &[4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn sensor_slice_extracts_column() {
        let data: Vec<f64> = (0..12).map(f64::from).collect();
        let cube = SensorCube::with_default_names(data, 2, 3, 2).unwrap();
        let s1 = cube.slice_sensor(1).unwrap();
        assert_eq!(s1.sensors(), 1);
        assert_eq!(s1.row(0, 0), &[2.0, 3.0]);
        assert_eq!(s1.row(1, 0), &[8.0, 9.0]);
        assert!(cube.slice_sensor(3).is_err());
    }

    #[test]
    fn concat_restores_split() {
        let data: Vec<f64> = (0..12).map(f64::from).collect();
        let cube = SensorCube::with_default_names(data, 3, 2, 2).unwrap();
        let head = cube.slice_cycles(0, 1).unwrap();
        let tail = cube.slice_cycles(1, 3).unwrap();
        assert_eq!(head.concat_cycles(&tail).unwrap(), cube);
    }
}
