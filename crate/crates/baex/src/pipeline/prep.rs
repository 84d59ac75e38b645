//! Cycle trimming, chronological splitting and min-max scaling.

use super::{PipelineError, SensorCube};

/// Drops `floor(head_frac * N)` leading and `floor(tail_frac * N)` trailing
/// cycles (run-in and total-failure phases).
pub fn trim_cycles(
    cube: &SensorCube,
    head_frac: f64,
    tail_frac: f64,
) -> Result<SensorCube, PipelineError> {
    if !(0.0..1.0).contains(&head_frac) || !(0.0..1.0).contains(&tail_frac) {
        return Err(PipelineError::InvalidArgument(
            "trim fractions must lie in [0, 1)".into(),
        ));
    }
    let n = cube.cycles();
    let head = (head_frac * n as f64).floor() as usize;
    let tail = (tail_frac * n as f64).floor() as usize;
    if head + tail >= n {
        return Err(PipelineError::Empty(format!(
            "trimming {head} + {tail} cycles would empty a {n}-cycle cube"
        )));
    }
    cube.slice_cycles(head, n - tail)
}

/// Splits the first `floor(train_frac * N)` cycles into the training cube,
/// the remainder into the test cube, preserving order.
pub fn chronological_split(
    cube: &SensorCube,
    train_frac: f64,
) -> Result<(SensorCube, SensorCube), PipelineError> {
    if !(0.0..1.0).contains(&train_frac) {
        return Err(PipelineError::InvalidArgument(
            "train fraction must lie in (0, 1)".into(),
        ));
    }
    let n = cube.cycles();
    let n_train = (train_frac * n as f64).floor() as usize;
    if n_train == 0 || n_train >= n {
        return Err(PipelineError::Empty(format!(
            "split at {n_train} of {n} cycles leaves an empty side"
        )));
    }
    Ok((
        cube.slice_cycles(0, n_train)?,
        cube.slice_cycles(n_train, n)?,
    ))
}

/// Per-(sensor, feature) min and max fitted on the training split only.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerState {
    mins: Vec<f64>,
    maxs: Vec<f64>,
    sensors: usize,
    features: usize,
}

impl ScalerState {
    pub fn sensors(&self) -> usize {
        self.sensors
    }

    pub fn features(&self) -> usize {
        self.features
    }

    /// Raw scaled value, before clipping. Degenerate features (max == min)
    /// map every input to 0.5.
    pub fn scale_value(&self, sensor: usize, feature: usize, x: f64) -> f64 {
        let i = sensor * self.features + feature;
        let (lo, hi) = (self.mins[i], self.maxs[i]);
        if hi > lo {
            (x - lo) / (hi - lo)
        } else {
            0.5
        }
    }
}

/// Fits per-(sensor, feature) minima and maxima on the training cube.
pub fn fit_scale(train: &SensorCube) -> ScalerState {
    let k = train.sensors();
    let d = train.features();
    let mut mins = vec![f64::INFINITY; k * d];
    let mut maxs = vec![f64::NEG_INFINITY; k * d];
    for n in 0..train.cycles() {
        for s in 0..k {
            let row = train.row(n, s);
            for (f, v) in row.iter().enumerate() {
                let i = s * d + f;
                mins[i] = mins[i].min(*v);
                maxs[i] = maxs[i].max(*v);
            }
        }
    }
    ScalerState {
        mins,
        maxs,
        sensors: k,
        features: d,
    }
}

/// Applies `(x - min) / (max - min)` per (sensor, feature) and clips to
/// [0, 1]; out-of-range test values would otherwise conflate scaling
/// overflow with reconstruction error at the sigmoid output.
pub fn apply_scale(state: &ScalerState, cube: &SensorCube) -> Result<SensorCube, PipelineError> {
    if cube.sensors() != state.sensors || cube.features() != state.features {
        return Err(PipelineError::InvalidArgument(format!(
            "scaler fitted on {}x{} but cube is {}x{}",
            state.sensors,
            state.features,
            cube.sensors(),
            cube.features()
        )));
    }
    let mut data = Vec::with_capacity(cube.data().len());
    for n in 0..cube.cycles() {
        for s in 0..cube.sensors() {
            for (f, v) in cube.row(n, s).iter().enumerate() {
                data.push(state.scale_value(s, f, *v).clamp(0.0, 1.0));
            }
        }
    }
    SensorCube::new(
        data,
        cube.cycles(),
        cube.sensors(),
        cube.features(),
        cube.sensor_names().to_vec(),
    )
}
