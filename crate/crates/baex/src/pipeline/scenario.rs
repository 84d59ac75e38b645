//! Covariate-shift scenario construction.
//!
//! A scenario designates a set of shifting sensors that keep their natural
//! test data and resamples every other sensor's test rows by bootstrap from
//! that sensor's training rows, so the non-shifting side is stationary by
//! construction. The degradation proxy is a linear ramp over test cycles.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::seed_for;

use super::{PipelineError, SensorCube};

/// A resampled test cube with its shifting / non-shifting designation and
/// degradation proxy.
#[derive(Debug, Clone)]
pub struct ShiftScenario {
    shift_set: Vec<usize>,
    noshift_set: Vec<usize>,
    test_cube: SensorCube,
    y: Vec<f64>,
}

impl ShiftScenario {
    pub fn shift_set(&self) -> &[usize] {
        &self.shift_set
    }

    pub fn noshift_set(&self) -> &[usize] {
        &self.noshift_set
    }

    pub fn test_cube(&self) -> &SensorCube {
        &self.test_cube
    }

    pub fn degradation(&self) -> &[f64] {
        &self.y
    }

    /// Replaces the scenario's cube (used after applying the scaler).
    pub fn with_test_cube(mut self, cube: SensorCube) -> Result<Self, PipelineError> {
        if cube.cycles() != self.test_cube.cycles() || cube.sensors() != self.test_cube.sensors() {
            return Err(PipelineError::InvalidArgument(
                "replacement cube disagrees on cycles or sensors".into(),
            ));
        }
        self.test_cube = cube;
        Ok(self)
    }

    /// Short identifier like `shift-0-2`, used for file names and reports.
    pub fn label(&self) -> String {
        let ids: Vec<String> = self.shift_set.iter().map(|k| k.to_string()).collect();
        format!("shift-{}", ids.join("-"))
    }
}

/// Builds a scenario: shifting sensors keep their true test rows, each
/// non-shifting sensor's rows are drawn i.i.d. with replacement from that
/// sensor's training rows (one independent RNG stream per sensor).
pub fn build_scenario(
    train: &SensorCube,
    test: &SensorCube,
    shift_set: &[usize],
    seed: u64,
) -> Result<ShiftScenario, PipelineError> {
    if train.sensors() != test.sensors() || train.features() != test.features() {
        return Err(PipelineError::InvalidArgument(
            "train and test cubes disagree on sensors or features".into(),
        ));
    }
    if train.cycles() == 0 {
        return Err(PipelineError::Empty("empty training cube".into()));
    }
    if shift_set.is_empty() {
        return Err(PipelineError::InvalidArgument(
            "shift set must contain at least one sensor".into(),
        ));
    }
    let k = train.sensors();
    let mut shift: Vec<usize> = shift_set.to_vec();
    shift.sort_unstable();
    shift.dedup();
    if let Some(bad) = shift.iter().find(|s| **s >= k) {
        return Err(PipelineError::InvalidArgument(format!(
            "shift sensor {bad} out of range for {k} sensors"
        )));
    }
    let noshift: Vec<usize> = (0..k).filter(|s| !shift.contains(s)).collect();

    let mut cube = test.clone();
    let n_train = train.cycles();
    for &sensor in &noshift {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_for(seed, "bootstrap", sensor as u64));
        for n in 0..cube.cycles() {
            let draw = rng.gen_range(0..n_train);
            let src = train.row(draw, sensor).to_vec();
            cube.row_mut(n, sensor).copy_from_slice(&src);
        }
    }

    let n_test = cube.cycles();
    let y = if n_test == 1 {
        vec![0.0]
    } else {
        (0..n_test)
            .map(|n| n as f64 / (n_test - 1) as f64)
            .collect()
    };

    Ok(ShiftScenario {
        shift_set: shift,
        noshift_set: noshift,
        test_cube: cube,
        y,
    })
}
