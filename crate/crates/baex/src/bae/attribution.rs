//! NLL prediction cubes and their decomposition into per-sensor attributions.
//!
//! Under the fixed-variance isotropic Gaussian likelihood, the per-feature
//! NLL contribution reduces to the squared reconstruction error; the additive
//! Gaussian constant and the 1/2 factor are dropped since they cancel in the
//! ensemble variance and wash out under train-mean normalisation.

use rayon::prelude::*;

use crate::nn::{forward, Tensor};
use crate::pipeline::SensorCube;

use super::{AttributionMatrix, AttributionMethod, BaeEnsemble, BaeError, Configuration, NllCube};

/// Per-member, per-feature squared reconstruction errors on a test cube.
pub fn nll_cube(ensemble: &BaeEnsemble, test: &SensorCube) -> Result<NllCube, BaeError> {
    if test.sensors() != ensemble.input_sensors || test.features() != ensemble.input_features {
        return Err(BaeError::Shape(format!(
            "test cube is {}x{} per cycle but the ensemble was trained on {}x{}",
            test.sensors(),
            test.features(),
            ensemble.input_sensors,
            ensemble.input_features
        )));
    }
    let m = ensemble.ensemble_size();
    let n = test.cycles();
    let k = test.sensors();
    let d = test.features();

    let per_member: Result<Vec<Vec<f64>>, BaeError> = ensemble
        .members
        .par_iter()
        .map(|member| {
            let mut block = Vec::with_capacity(n * k * d);
            for cycle in 0..n {
                let x = Tensor::new(test.cycle_block(cycle).to_vec(), vec![k, d])?;
                let (y, _) = forward(&member.params, &ensemble.specs, &x)?;
                for (xv, yv) in x.data().iter().zip(y.data()) {
                    let diff = xv - yv;
                    block.push(diff * diff);
                }
            }
            Ok(block)
        })
        .collect();

    let mut values = Vec::with_capacity(m * n * k * d);
    for block in per_member? {
        values.extend_from_slice(&block);
    }
    NllCube::new(values, m, n, k, d)
}

/// Concatenates single-sensor cubes along the sensor axis, in the given
/// order. All cubes must agree on members, cycles and features.
pub fn concat_nll_cubes(cubes: &[NllCube]) -> Result<NllCube, BaeError> {
    if cubes.is_empty() {
        return Err(BaeError::Shape("no cubes to concatenate".into()));
    }
    let m = cubes[0].members();
    let n = cubes[0].cycles();
    let d = cubes[0].features();
    for (i, c) in cubes.iter().enumerate() {
        if c.sensors() != 1 {
            return Err(BaeError::Shape(format!(
                "cube {i} has {} sensors; concatenation expects single-sensor cubes",
                c.sensors()
            )));
        }
        if c.members() != m || c.cycles() != n || c.features() != d {
            return Err(BaeError::Shape(format!(
                "cube {i} disagrees on members, cycles or features"
            )));
        }
    }
    let k = cubes.len();
    let mut values = Vec::with_capacity(m * n * k * d);
    for member in 0..m {
        for cycle in 0..n {
            for cube in cubes {
                for f in 0..d {
                    values.push(cube.value(member, cycle, 0, f));
                }
            }
        }
    }
    NllCube::new(values, m, n, k, d)
}

/// Decomposes an NLL cube into per-cycle, per-sensor scores.
///
/// Mean-NLL sums the ensemble mean over features; var-NLL sums the ensemble
/// population variance (1/M) over features, which needs at least two members.
pub fn attribute(
    nll: &NllCube,
    method: AttributionMethod,
    config: Configuration,
) -> Result<AttributionMatrix, BaeError> {
    let m = nll.members();
    if method == AttributionMethod::VarNll && m < 2 {
        return Err(BaeError::VarianceNeedsEnsemble);
    }
    let n = nll.cycles();
    let k = nll.sensors();
    let d = nll.features();
    let mut scores = vec![0.0; n * k];
    for cycle in 0..n {
        for sensor in 0..k {
            let mut total = 0.0;
            for feature in 0..d {
                let mut mean = 0.0;
                for member in 0..m {
                    mean += nll.value(member, cycle, sensor, feature);
                }
                mean /= m as f64;
                match method {
                    AttributionMethod::MeanNll => total += mean,
                    AttributionMethod::VarNll => {
                        let mut var = 0.0;
                        for member in 0..m {
                            let dev = nll.value(member, cycle, sensor, feature) - mean;
                            var += dev * dev;
                        }
                        total += var / m as f64;
                    }
                }
            }
            scores[cycle * k + sensor] = total;
        }
    }
    AttributionMatrix::new(scores, n, k, method, config)
}
