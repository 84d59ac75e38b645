//! Anchored-ensemble Bayesian autoencoders.
//!
//! Each ensemble member is regularised toward its own fixed, randomly drawn
//! anchor parameter set, giving approximate posterior samples; prediction
//! produces per-feature negative-log-likelihood contributions (squared
//! reconstruction errors under the fixed-variance Gaussian likelihood) whose
//! per-sensor sums of ensemble means and variances are the two attribution
//! methods. Models run either centralised (one model over all sensors) or
//! coalitional (one independent model per sensor).

mod architecture;
mod attribution;
mod checkpoint;
mod orchestrate;
mod train;

pub use architecture::{build_autoencoder_specs, ArchitectureConfig};
pub use attribution::{attribute, concat_nll_cubes, nll_cube};
pub use checkpoint::{load_ensemble, read_checkpoint_digest, save_ensemble};
pub use orchestrate::{run_configuration, TrainedConfiguration};
pub use train::{
    lr_range_test, select_lr, train_bae, LrPolicy, LrSelection, TrainingConfig,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{LayerSpec, NnError, ParamSet};
use crate::pipeline::PipelineError;

#[derive(Debug, Error)]
pub enum BaeError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("non-finite loss at epoch {epoch} (member {member})")]
    NonFiniteLoss { epoch: usize, member: usize },
    #[error("epistemic variance requires an ensemble (M >= 2)")]
    VarianceNeedsEnsemble,
    #[error("sensor {sensor}: {source}")]
    Agent {
        sensor: usize,
        #[source]
        source: Box<BaeError>,
    },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// What a model consumes: all sensors jointly, or a single sensor's slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelScope {
    Centralised,
    Sensor(usize),
}

/// Centralised = one model over the full sensor block; coalitional = one
/// independent model per sensor, outputs concatenated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Configuration {
    Centralised,
    Coalitional,
}

impl Configuration {
    pub fn as_str(&self) -> &'static str {
        match self {
            Configuration::Centralised => "centralised",
            Configuration::Coalitional => "coalitional",
        }
    }
}

impl std::fmt::Display for Configuration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The two attribution methods: per-sensor sums of the ensemble mean or the
/// ensemble (population) variance of the per-feature NLL contributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttributionMethod {
    MeanNll,
    VarNll,
}

impl AttributionMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttributionMethod::MeanNll => "mean-nll",
            AttributionMethod::VarNll => "var-nll",
        }
    }
}

impl std::fmt::Display for AttributionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One ensemble member: trainable parameters plus the fixed anchor they are
/// regularised toward. Anchors are drawn once and never updated.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMember {
    pub params: ParamSet,
    pub anchor: ParamSet,
}

/// A trained anchored ensemble for one model scope.
#[derive(Debug, Clone)]
pub struct BaeEnsemble {
    pub members: Vec<EnsembleMember>,
    pub specs: Vec<LayerSpec>,
    pub lambda: f64,
    pub scope: ModelScope,
    pub seed: u64,
    pub input_sensors: usize,
    pub input_features: usize,
}

impl BaeEnsemble {
    pub fn ensemble_size(&self) -> usize {
        self.members.len()
    }
}

/// Per-member, per-feature negative-log-likelihood contributions:
/// `members x cycles x sensors x features`, all values >= 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NllCube {
    values: Vec<f64>,
    members: usize,
    cycles: usize,
    sensors: usize,
    features: usize,
}

impl NllCube {
    pub fn new(
        values: Vec<f64>,
        members: usize,
        cycles: usize,
        sensors: usize,
        features: usize,
    ) -> Result<Self, BaeError> {
        if values.len() != members * cycles * sensors * features {
            return Err(BaeError::Shape(format!(
                "nll cube length {} does not match {members}x{cycles}x{sensors}x{features}",
                values.len()
            )));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(BaeError::Shape(
                "nll values must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            values,
            members,
            cycles,
            sensors,
            features,
        })
    }

    pub fn members(&self) -> usize {
        self.members
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

    #[inline]
    pub fn value(&self, member: usize, cycle: usize, sensor: usize, feature: usize) -> f64 {
        self.values[((member * self.cycles + cycle) * self.sensors + sensor) * self.features
            + feature]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Total NLL over all sensors and features for one (member, cycle).
    pub fn member_cycle_total(&self, member: usize, cycle: usize) -> f64 {
        let stride = self.sensors * self.features;
        let base = (member * self.cycles + cycle) * stride;
        self.values[base..base + stride].iter().sum()
    }
}

/// Per-cycle, per-sensor attribution scores for one method under one model
/// configuration. Scores are non-negative by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionMatrix {
    scores: Vec<f64>,
    cycles: usize,
    sensors: usize,
    method: AttributionMethod,
    config: Configuration,
}

impl AttributionMatrix {
    pub fn new(
        scores: Vec<f64>,
        cycles: usize,
        sensors: usize,
        method: AttributionMethod,
        config: Configuration,
    ) -> Result<Self, BaeError> {
        if scores.len() != cycles * sensors {
            return Err(BaeError::Shape(format!(
                "attribution length {} does not match {cycles}x{sensors}",
                scores.len()
            )));
        }
        if scores.iter().any(|v| !(*v >= 0.0)) {
            return Err(BaeError::Shape(
                "attribution scores must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            scores,
            cycles,
            sensors,
            method,
            config,
        })
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn sensors(&self) -> usize {
        self.sensors
    }

    pub fn method(&self) -> AttributionMethod {
        self.method
    }

    pub fn config(&self) -> Configuration {
        self.config
    }

    #[inline]
    pub fn get(&self, cycle: usize, sensor: usize) -> f64 {
        self.scores[cycle * self.sensors + sensor]
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// One sensor's attribution curve over all cycles.
    pub fn column(&self, sensor: usize) -> Vec<f64> {
        (0..self.cycles).map(|n| self.get(n, sensor)).collect()
    }

    /// Per-sensor mean over all cycles, e.g. for train-set normalisers.
    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.sensors];
        for n in 0..self.cycles {
            for k in 0..self.sensors {
                means[k] += self.get(n, k);
            }
        }
        for m in &mut means {
            *m /= self.cycles as f64;
        }
        means
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nll_cube_rejects_negative_values() {
        assert!(NllCube::new(vec![-0.1], 1, 1, 1, 1).is_err());
        assert!(NllCube::new(vec![0.0, 1.0], 1, 1, 1, 2).is_ok());
        assert!(NllCube::new(vec![0.0], 1, 2, 1, 1).is_err());
    }

    #[test]
    fn attribution_matrix_column_access() {
        let m = AttributionMatrix::new(
            vec![1.0, 2.0, 3.0, 4.0],
            2,
            2,
            AttributionMethod::MeanNll,
            Configuration::Centralised,
        )
        .unwrap();
        assert_eq!(m.column(0), vec![1.0, 3.0]);
        assert_eq!(m.column(1), vec![2.0, 4.0]);
        assert_eq!(m.column_means(), vec![2.0, 3.0]);
    }
}
