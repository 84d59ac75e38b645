//! Anchored-ensemble training and the learning-rate range test.
//!
//! Each member m minimises
//!
//! ```text
//! Loss_m = (1/N) sum_n ||x_n - f(x_n; theta_m)||^2
//!        + (lambda/N) ||theta_m - theta_anc,m||^2
//! ```
//!
//! with its own Kaiming-uniform initialisation and its own fixed anchor drawn
//! from the same distribution. Members never share parameters and may train
//! in parallel.

use rayon::prelude::*;

use crate::nn::{
    adam_step, backward, forward, kaiming_uniform_init, AdamState, LayerSpec, ParamSet, Tensor,
};
use crate::pipeline::SensorCube;
use crate::seed_for;

use super::{
    build_autoencoder_specs, ArchitectureConfig, BaeEnsemble, BaeError, EnsembleMember, ModelScope,
};

/// Threshold below which an epoch is a single full-batch step.
const FULL_BATCH_LIMIT: usize = 512;
/// Mini-batch size above the full-batch limit; batches are taken in cycle
/// order without shuffling so runs stay reproducible.
const MINI_BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum LrPolicy {
    /// Run the range test over `[min, max]` with `steps` probe steps.
    Auto { min: f64, max: f64, steps: usize },
    Fixed(f64),
}

impl Default for LrPolicy {
    fn default() -> Self {
        LrPolicy::Auto {
            min: 1e-5,
            max: 1.0,
            steps: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub ensemble_size: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: LrPolicy,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            ensemble_size: 5,
            lambda: 0.001,
            epochs: 250,
            learning_rate: LrPolicy::default(),
            seed: 0,
        }
    }
}

/// Outcome of [`lr_range_test`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSelection {
    pub learning_rate: f64,
    /// Set when the loss was already non-finite at the smallest rate.
    pub diverged: bool,
}

fn cycle_input(cube: &SensorCube, cycle: usize) -> Tensor {
    Tensor::new(
        cube.cycle_block(cycle).to_vec(),
        vec![cube.sensors(), cube.features()],
    )
    .expect("cycle block matches cube dims")
}

fn batches(n: usize) -> Vec<Vec<usize>> {
    if n <= FULL_BATCH_LIMIT {
        vec![(0..n).collect()]
    } else {
        (0..n)
            .collect::<Vec<_>>()
            .chunks(MINI_BATCH)
            .map(|c| c.to_vec())
            .collect()
    }
}

/// Mean squared reconstruction error over a batch plus parameter gradients of
/// that mean. The anchor term is added by the caller.
fn batch_mse_and_grads(
    params: &ParamSet,
    specs: &[LayerSpec],
    cube: &SensorCube,
    batch: &[usize],
) -> Result<(f64, ParamSet), BaeError> {
    let scale = 1.0 / batch.len() as f64;
    let mut grads = ParamSet::zeros(specs);
    let mut loss = 0.0;
    for &n in batch {
        let x = cycle_input(cube, n);
        let (y, cache) = forward(params, specs, &x)?;
        let mut upstream = y.clone();
        let mut sample_loss = 0.0;
        for (u, xv) in upstream.data_mut().iter_mut().zip(x.data()) {
            let diff = *u - xv;
            sample_loss += diff * diff;
            *u = 2.0 * diff * scale;
        }
        loss += sample_loss * scale;
        let g = backward(params, specs, &cache, &upstream)?;
        grads.add_scaled(&g, 1.0);
    }
    Ok((loss, grads))
}

/// Trains one member; returns (params, anchor, per-epoch losses).
///
/// The recorded loss is the average over the epoch's batches of
/// `batch MSE + (lambda/N) * anchor penalty`.
fn train_member(
    specs: &[LayerSpec],
    cube: &SensorCube,
    lambda: f64,
    epochs: usize,
    learning_rate: f64,
    init_seed: u64,
    anchor_seed: u64,
    member: usize,
) -> Result<(ParamSet, ParamSet, Vec<f64>), BaeError> {
    let mut params = kaiming_uniform_init(specs, init_seed)?;
    let anchor = kaiming_uniform_init(specs, anchor_seed)?;
    let n_total = cube.cycles() as f64;
    let plan = batches(cube.cycles());
    let mut state = AdamState::new(&params, learning_rate);
    let mut history = Vec::with_capacity(epochs);

    for epoch in 0..epochs {
        let mut epoch_loss = 0.0;
        for batch in &plan {
            let (mse, mut grads) = batch_mse_and_grads(&params, specs, cube, batch)?;
            let penalty = lambda / n_total * params.squared_distance(&anchor);
            let loss = mse + penalty;
            if !loss.is_finite() {
                return Err(BaeError::NonFiniteLoss { epoch, member });
            }
            if lambda != 0.0 {
                grads.add_scaled(&params, 2.0 * lambda / n_total);
                grads.add_scaled(&anchor, -2.0 * lambda / n_total);
            }
            adam_step(&mut params, &grads, &mut state)?;
            epoch_loss += loss;
        }
        history.push(epoch_loss / plan.len() as f64);
    }
    Ok((params, anchor, history))
}

fn validate_unit_interval(cube: &SensorCube) -> Result<(), BaeError> {
    if cube.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(BaeError::InvalidConfig(
            "training cube must be scaled to [0, 1]".into(),
        ));
    }
    Ok(())
}

/// Trains an anchored ensemble of `cfg.ensemble_size` members on the scaled
/// training cube. Members are initialised and anchored independently
/// (seeds derived per member from `cfg.seed`) and trained in parallel; the
/// result is identical regardless of thread scheduling.
pub fn train_bae(
    train: &SensorCube,
    arch: &ArchitectureConfig,
    cfg: &TrainingConfig,
    scope: ModelScope,
) -> Result<BaeEnsemble, BaeError> {
    if cfg.ensemble_size == 0 {
        return Err(BaeError::InvalidConfig("ensemble size must be >= 1".into()));
    }
    if cfg.epochs == 0 {
        return Err(BaeError::InvalidConfig("epochs must be >= 1".into()));
    }
    validate_unit_interval(train)?;
    let specs = build_autoencoder_specs(train.sensors(), train.features(), arch)?;

    let learning_rate = match cfg.learning_rate {
        LrPolicy::Fixed(lr) => {
            if lr <= 0.0 || !lr.is_finite() {
                return Err(BaeError::InvalidConfig(format!(
                    "fixed learning rate must be positive, got {lr}"
                )));
            }
            lr
        }
        LrPolicy::Auto { min, max, steps } => {
            lr_range_test(train, &specs, (min, max), steps, cfg.seed)?.learning_rate
        }
    };

    let members: Result<Vec<EnsembleMember>, BaeError> = (0..cfg.ensemble_size)
        .into_par_iter()
        .map(|m| {
            let (params, anchor, _) = train_member(
                &specs,
                train,
                cfg.lambda,
                cfg.epochs,
                learning_rate,
                seed_for(cfg.seed, "init", m as u64),
                seed_for(cfg.seed, "anchor", m as u64),
                m,
            )?;
            Ok(EnsembleMember { params, anchor })
        })
        .collect();

    Ok(BaeEnsemble {
        members: members?,
        specs,
        lambda: cfg.lambda,
        scope,
        seed: cfg.seed,
        input_sensors: train.sensors(),
        input_features: train.features(),
    })
}

/// Pure selection rule of the range test: the rate one decade below the
/// smoothed-loss minimiser, ties broken toward the smaller rate, clamped to
/// the probed span.
pub fn select_lr(rates: &[f64], smoothed: &[f64], lr_min: f64, lr_max: f64) -> f64 {
    let mut best = 0usize;
    for i in 1..smoothed.len().min(rates.len()) {
        if smoothed[i] < smoothed[best] {
            best = i;
        }
    }
    (rates[best] / 10.0).clamp(lr_min, lr_max)
}

/// Probes geometrically increasing learning rates, recording an
/// exponentially smoothed loss, and returns the rate one decade below the
/// minimiser. A loss that is already non-finite at `lr_min` returns `lr_min`
/// with the `diverged` flag set.
pub fn lr_range_test(
    train: &SensorCube,
    specs: &[LayerSpec],
    span: (f64, f64),
    steps: usize,
    seed: u64,
) -> Result<LrSelection, BaeError> {
    let (lr_min, lr_max) = span;
    if !(lr_min > 0.0 && lr_max > lr_min) {
        return Err(BaeError::InvalidConfig(format!(
            "invalid learning-rate span [{lr_min}, {lr_max}]"
        )));
    }
    if steps < 2 {
        return Err(BaeError::InvalidConfig("range test needs >= 2 steps".into()));
    }

    let mut params = kaiming_uniform_init(specs, seed_for(seed, "lr-init", 0))?;
    let plan = batches(train.cycles());
    let mut state = AdamState::new(&params, lr_min);

    let ratio = lr_max / lr_min;
    let mut rates = Vec::with_capacity(steps);
    let mut smoothed = Vec::with_capacity(steps);
    let mut ema = 0.0;
    const BETA: f64 = 0.9;

    for i in 0..steps {
        let rate = lr_min * ratio.powf(i as f64 / (steps - 1) as f64);
        let batch = &plan[i % plan.len()];
        let (loss, grads) = batch_mse_and_grads(&params, specs, train, batch)?;
        if !loss.is_finite() {
            if i == 0 {
                return Ok(LrSelection {
                    learning_rate: lr_min,
                    diverged: true,
                });
            }
            break;
        }
        ema = BETA * ema + (1.0 - BETA) * loss;
        rates.push(rate);
        smoothed.push(ema / (1.0 - BETA.powi(i as i32 + 1)));
        state.learning_rate = rate;
        adam_step(&mut params, &grads, &mut state)?;
    }

    Ok(LrSelection {
        learning_rate: select_lr(&rates, &smoothed, lr_min, lr_max),
        diverged: false,
    })
}
