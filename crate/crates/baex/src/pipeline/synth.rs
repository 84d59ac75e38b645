//! Synthetic multi-sensor drift generator.
//!
//! A desk-scale stand-in for run-to-failure datasets: every sensor emits a
//! fixed base spectrum plus Gaussian noise; drifting sensors additionally
//! move along a fixed random unit direction with a monotone schedule that
//! reaches the configured amplitude at the last test cycle.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::seed_for;

use super::{PipelineError, SensorCube};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftProfile {
    Linear,
    Quadratic,
}

impl DriftProfile {
    /// Drift schedule over test cycles: g(0) = 0 just before the test phase,
    /// g(n_test) = 1 at the last test cycle.
    fn g(self, cycle: usize, n_test: usize) -> f64 {
        let frac = (cycle + 1) as f64 / n_test as f64;
        match self {
            DriftProfile::Linear => frac,
            DriftProfile::Quadratic => frac * frac,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub sensors: usize,
    pub features: usize,
    pub train_cycles: usize,
    pub test_cycles: usize,
    pub drift_profile: DriftProfile,
    pub drift_amplitude: f64,
    pub noise_level: f64,
    /// Sensors that actually drift in the generated test data.
    pub drift_sensors: Vec<usize>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sensors: 4,
            features: 32,
            train_cycles: 60,
            test_cycles: 240,
            drift_profile: DriftProfile::Linear,
            drift_amplitude: 1.0,
            noise_level: 0.05,
            drift_sensors: vec![0],
            seed: 0,
        }
    }
}

/// Standard normal draw via Box-Muller; deterministic given the RNG state.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Generates (train, test, true shift set).
pub fn synth_drift(
    cfg: &SynthConfig,
) -> Result<(SensorCube, SensorCube, Vec<usize>), PipelineError> {
    if cfg.sensors == 0 || cfg.features == 0 || cfg.train_cycles == 0 || cfg.test_cycles == 0 {
        return Err(PipelineError::InvalidArgument(
            "synth dimensions must be positive".into(),
        ));
    }
    if cfg.noise_level < 0.0 || cfg.drift_amplitude < 0.0 {
        return Err(PipelineError::InvalidArgument(
            "noise level and drift amplitude must be non-negative".into(),
        ));
    }
    let mut drift: Vec<usize> = cfg.drift_sensors.clone();
    drift.sort_unstable();
    drift.dedup();
    if let Some(bad) = drift.iter().find(|s| **s >= cfg.sensors) {
        return Err(PipelineError::InvalidArgument(format!(
            "drift sensor {bad} out of range for {} sensors",
            cfg.sensors
        )));
    }

    let (k, d) = (cfg.sensors, cfg.features);

    // fixed base spectrum per sensor
    let mut bases = Vec::with_capacity(k);
    for sensor in 0..k {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_for(cfg.seed, "base", sensor as u64));
        let base: Vec<f64> = (0..d).map(|_| 0.25 + 0.5 * rng.gen::<f64>()).collect();
        bases.push(base);
    }

    // fixed unit drift direction per drifting sensor
    let mut directions = vec![None; k];
    for &sensor in &drift {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_for(cfg.seed, "dir", sensor as u64));
        let mut dir: Vec<f64> = (0..d).map(|_| gaussian(&mut rng)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut dir {
                *v /= norm;
            }
        }
        directions[sensor] = Some(dir);
    }

    let mut train = vec![0.0; cfg.train_cycles * k * d];
    let mut test = vec![0.0; cfg.test_cycles * k * d];
    for sensor in 0..k {
        let mut train_rng =
            ChaCha8Rng::seed_from_u64(seed_for(cfg.seed, "train-noise", sensor as u64));
        for n in 0..cfg.train_cycles {
            let base = &bases[sensor];
            for f in 0..d {
                train[(n * k + sensor) * d + f] =
                    base[f] + cfg.noise_level * gaussian(&mut train_rng);
            }
        }
        let mut test_rng =
            ChaCha8Rng::seed_from_u64(seed_for(cfg.seed, "test-noise", sensor as u64));
        for n in 0..cfg.test_cycles {
            let g = cfg.drift_profile.g(n, cfg.test_cycles);
            let base = &bases[sensor];
            for f in 0..d {
                let drift_term = match &directions[sensor] {
                    Some(dir) => cfg.drift_amplitude * g * dir[f],
                    None => 0.0,
                };
                test[(n * k + sensor) * d + f] =
                    base[f] + drift_term + cfg.noise_level * gaussian(&mut test_rng);
            }
        }
    }

    Ok((
        SensorCube::with_default_names(train, cfg.train_cycles, k, d)?,
        SensorCube::with_default_names(test, cfg.test_cycles, k, d)?,
        drift,
    ))
}
