//! Centralised / coalitional orchestration.
//!
//! Centralised trains one ensemble over the full sensor block (first conv
//! layer consumes all K channels). Coalitional trains K independent
//! single-sensor ensembles (first conv layer fixed to 1 channel) and
//! concatenates their outputs along the sensor axis, so attribution columns
//! are independent by construction. Agent k runs under seed
//! `seed + k * 10007`.

use rayon::prelude::*;

use crate::pipeline::SensorCube;

use super::{
    attribute, concat_nll_cubes, nll_cube, ArchitectureConfig, AttributionMatrix,
    AttributionMethod, BaeEnsemble, BaeError, Configuration, ModelScope, NllCube, TrainingConfig,
    train_bae,
};

/// Seed stride between coalition agents.
pub const AGENT_SEED_STRIDE: u64 = 10007;

/// The trained model(s) for one configuration: a single ensemble when
/// centralised, one ensemble per sensor when coalitional.
#[derive(Debug, Clone)]
pub struct TrainedConfiguration {
    pub configuration: Configuration,
    pub ensembles: Vec<BaeEnsemble>,
}

impl TrainedConfiguration {
    /// Trains the configuration on the scaled training cube. Coalition
    /// agents train in parallel; failures are wrapped with the sensor index.
    pub fn train(
        configuration: Configuration,
        train: &SensorCube,
        arch: &ArchitectureConfig,
        cfg: &TrainingConfig,
    ) -> Result<Self, BaeError> {
        let ensembles = match configuration {
            Configuration::Centralised => {
                vec![train_bae(train, arch, cfg, ModelScope::Centralised)?]
            }
            Configuration::Coalitional => {
                let per_sensor: Result<Vec<BaeEnsemble>, BaeError> = (0..train.sensors())
                    .into_par_iter()
                    .map(|k| {
                        let slice = train.slice_sensor(k)?;
                        let agent_cfg = TrainingConfig {
                            seed: cfg.seed + k as u64 * AGENT_SEED_STRIDE,
                            ..cfg.clone()
                        };
                        train_bae(&slice, arch, &agent_cfg, ModelScope::Sensor(k)).map_err(
                            |source| BaeError::Agent {
                                sensor: k,
                                source: Box::new(source),
                            },
                        )
                    })
                    .collect();
                per_sensor?
            }
        };
        Ok(Self {
            configuration,
            ensembles,
        })
    }

    pub fn sensors(&self) -> usize {
        match self.configuration {
            Configuration::Centralised => self.ensembles[0].input_sensors,
            Configuration::Coalitional => self.ensembles.len(),
        }
    }

    /// NLL cube for a scaled test cube; coalitional output is concatenated
    /// by sensor index regardless of evaluation order.
    pub fn nll(&self, test: &SensorCube) -> Result<NllCube, BaeError> {
        match self.configuration {
            Configuration::Centralised => nll_cube(&self.ensembles[0], test),
            Configuration::Coalitional => {
                if test.sensors() != self.ensembles.len() {
                    return Err(BaeError::Shape(format!(
                        "test cube has {} sensors, coalition has {} agents",
                        test.sensors(),
                        self.ensembles.len()
                    )));
                }
                let per_sensor: Result<Vec<NllCube>, BaeError> = self
                    .ensembles
                    .par_iter()
                    .enumerate()
                    .map(|(k, ens)| {
                        let slice = test.slice_sensor(k)?;
                        nll_cube(ens, &slice).map_err(|source| BaeError::Agent {
                            sensor: k,
                            source: Box::new(source),
                        })
                    })
                    .collect();
                concat_nll_cubes(&per_sensor?)
            }
        }
    }

    /// FNV-1a digest over every member's parameter and anchor bytes, as a
    /// hex string. Identical digests mean identical model parameters.
    pub fn parameter_digest(&self) -> String {
        let mut bytes = Vec::new();
        for ens in &self.ensembles {
            for member in &ens.members {
                bytes.extend_from_slice(&member.params.to_le_bytes());
                bytes.extend_from_slice(&member.anchor.to_le_bytes());
            }
        }
        format!("{:016x}", crate::nn::fnv1a(&bytes))
    }
}

/// Trains one configuration and attributes the test cube under each method.
pub fn run_configuration(
    configuration: Configuration,
    train: &SensorCube,
    test: &SensorCube,
    arch: &ArchitectureConfig,
    cfg: &TrainingConfig,
    methods: &[AttributionMethod],
) -> Result<Vec<AttributionMatrix>, BaeError> {
    let trained = TrainedConfiguration::train(configuration, train, arch, cfg)?;
    let nll = trained.nll(test)?;
    methods
        .iter()
        .map(|m| attribute(&nll, *m, configuration))
        .collect()
}
