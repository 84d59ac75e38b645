//! Sweep execution: data preparation, per-cell training, shift-scenario
//! fan-out, evaluation and run-record persistence.
//!
//! Training happens once per (capacity, depth, configuration) cell and is
//! reused across every shift scenario; scenarios only alter the test data.
//! Per-cell seeds are derived from the root seed by hashing the cell
//! coordinates, scenario seeds by hashing the scenario index.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use baex::bae::{
    attribute, save_ensemble, ArchitectureConfig, AttributionMethod, Configuration,
    TrainedConfiguration, TrainingConfig,
};
use baex::metrics::{evaluate, group_mean_curves, EvaluationReport};
use baex::pipeline::{
    apply_scale, build_scenario, chronological_split, fft_magnitude, fit_scale, postprocess,
    read_cube_binary, read_cube_csv, synth_drift, trim_cycles, ScalerState, SensorCube,
    SynthConfig,
};
use baex::seed_for;

use crate::config::{DataSource, ExperimentConfig, ShiftPolicy};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupCurves {
    pub shift_mean: Vec<f64>,
    pub noshift_mean: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub train_seconds: f64,
    pub evaluate_seconds: f64,
}

/// One evaluated (configuration, method, scenario) triple. Replayable: the
/// same config and seed reproduce the record bit-for-bit except `timings`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub config_digest: String,
    pub dataset: String,
    pub configuration: String,
    pub method: String,
    pub scenario_id: String,
    pub shift_set: Vec<usize>,
    pub noshift_set: Vec<usize>,
    pub capacity: f64,
    pub depth: usize,
    pub root_seed: u64,
    pub cell_seed: u64,
    pub scenario_seed: u64,
    pub checkpoint_digest: String,
    pub report: EvaluationReport,
    pub curves: Option<GroupCurves>,
    pub timings: Timings,
}

fn capacity_tag(capacity: f64) -> String {
    format!("{capacity}").replace('.', "p")
}

impl RunRecord {
    /// Deterministic record file name.
    pub fn file_name(&self) -> String {
        format!(
            "{}_{}_{}_{}_c{}_d{}_s{}.json",
            self.dataset,
            self.configuration,
            self.method,
            self.scenario_id,
            capacity_tag(self.capacity),
            self.depth,
            self.root_seed
        )
    }
}

#[derive(Debug, Default)]
pub struct RunSummary {
    pub records: Vec<RunRecord>,
    pub diagnostics: Vec<String>,
}

/// Enumerates shift sets for K sensors under a policy. Returns the scenarios
/// plus notices about combinations that were filtered out (a full shift set
/// leaves no non-shifting sensors, so the metrics are undefined).
pub fn sweep_combinations(sensors: usize, policy: &ShiftPolicy) -> (Vec<Vec<usize>>, Vec<String>) {
    fn combinations(k: usize, size: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(size);
        fn recurse(k: usize, size: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if current.len() == size {
                out.push(current.clone());
                return;
            }
            let remaining = size - current.len();
            for i in start..=(k - remaining) {
                current.push(i);
                recurse(k, size, i + 1, current, out);
                current.pop();
            }
        }
        if size >= 1 && size <= k {
            recurse(k, size, 0, &mut current, &mut out);
        }
        out
    }

    let mut notices = Vec::new();
    let mut scenarios = Vec::new();
    match policy {
        ShiftPolicy::AllSubsets => {
            for size in 1..sensors {
                scenarios.extend(combinations(sensors, size));
            }
            if sensors <= 1 {
                notices.push("all-subsets needs K >= 2; no scenarios generated".into());
            }
        }
        ShiftPolicy::Sizes(sizes) => {
            let mut sorted: Vec<usize> = sizes.clone();
            sorted.sort_unstable();
            sorted.dedup();
            for size in sorted {
                if size == 0 {
                    notices.push("size 0 yields an empty shift set; skipped".into());
                } else if size >= sensors {
                    notices.push(format!(
                        "size {size} leaves no non-shifting sensors (K = {sensors}); \
                         skipped because the metrics are undefined"
                    ));
                } else {
                    scenarios.extend(combinations(sensors, size));
                }
            }
        }
    }
    (scenarios, notices)
}

/// Produces the raw (unscaled) train and test cubes for a config.
pub fn prepare_data(cfg: &ExperimentConfig, root_seed: u64) -> Result<(SensorCube, SensorCube)> {
    match cfg.data.source {
        DataSource::Synth => {
            let synth = SynthConfig {
                sensors: cfg.data.sensors,
                features: cfg.data.features,
                train_cycles: cfg.data.train_cycles,
                test_cycles: cfg.data.test_cycles,
                drift_profile: cfg.data.drift_profile,
                drift_amplitude: cfg.data.drift_amplitude,
                noise_level: cfg.data.noise_level,
                drift_sensors: cfg.data.drift_sensors.clone(),
                seed: seed_for(root_seed, "synth", 0),
            };
            let (train, test, _) = synth_drift(&synth)?;
            Ok((train, test))
        }
        DataSource::Csv | DataSource::Binary => {
            let path = cfg
                .data
                .path
                .as_ref()
                .context("file source without a path")?;
            let cube = match cfg.data.source {
                DataSource::Csv => read_cube_csv(path)?,
                _ => read_cube_binary(path)?,
            };
            let trimmed = trim_cycles(&cube, cfg.pipeline.trim_head, cfg.pipeline.trim_tail)?;
            let featured = if cfg.pipeline.fft {
                fft_magnitude(&trimmed)?
            } else {
                trimmed
            };
            Ok(chronological_split(&featured, cfg.pipeline.train_frac)?)
        }
    }
}

struct Cell {
    capacity: f64,
    depth: usize,
    seed: u64,
}

fn sweep_cells(cfg: &ExperimentConfig, root_seed: u64) -> Vec<Cell> {
    let mut cells = Vec::new();
    for (ci, &capacity) in cfg.model.capacities.iter().enumerate() {
        for (di, &depth) in cfg.model.depths.iter().enumerate() {
            let index = (ci * cfg.model.depths.len() + di) as u64;
            cells.push(Cell {
                capacity,
                depth,
                seed: seed_for(root_seed, "cell", index),
            });
        }
    }
    cells
}

/// Runs the full sweep. When `out_dir` is given, checkpoints and records are
/// written beneath it. Failures abort the affected configuration with a
/// diagnostic; completed records are preserved.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<RunSummary> {
    let root_seed = seed_override.unwrap_or(cfg.run.seed);
    let dataset = cfg.dataset_label();
    let config_digest = cfg.digest();

    let (train_raw, test_raw) = prepare_data(cfg, root_seed)?;
    let scaler = fit_scale(&train_raw);
    let train_scaled = apply_scale(&scaler, &train_raw)?;
    let window = train_scaled.cycles();

    let (scenarios, notices) = sweep_combinations(train_raw.sensors(), &cfg.run.shift_policy);
    let mut summary = RunSummary {
        records: Vec::new(),
        diagnostics: notices,
    };
    if scenarios.is_empty() {
        bail!("no shift scenarios to evaluate (policy produced an empty sweep)");
    }

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir.join("checkpoints"))?;
        std::fs::create_dir_all(dir.join("records"))?;
        std::fs::write(dir.join("run-config.ini"), cfg.canonical_string())?;
    }

    for cell in sweep_cells(cfg, root_seed) {
        let arch = ArchitectureConfig {
            depth: cell.depth,
            capacity: cell.capacity,
            kernel_size: cfg.model.kernel_size,
            ..ArchitectureConfig::default()
        };
        let train_cfg = TrainingConfig {
            ensemble_size: cfg.model.ensemble_size,
            lambda: cfg.model.lambda,
            epochs: cfg.model.epochs,
            learning_rate: cfg.model.lr_policy(),
            seed: cell.seed,
        };
        for &configuration in &cfg.run.configurations {
            let cell_tag = format!(
                "{dataset}_c{}_d{}_{configuration}",
                capacity_tag(cell.capacity),
                cell.depth
            );
            match run_cell(
                cfg,
                &cell,
                configuration,
                &arch,
                &train_cfg,
                &train_raw,
                &test_raw,
                &train_scaled,
                &scaler,
                window,
                &scenarios,
                &dataset,
                &config_digest,
                root_seed,
                out_dir,
                &cell_tag,
            ) {
                Ok((mut records, mut diags)) => {
                    summary.records.append(&mut records);
                    summary.diagnostics.append(&mut diags);
                }
                Err(e) => summary
                    .diagnostics
                    .push(format!("{cell_tag}: configuration aborted: {e:#}")),
            }
        }
    }

    if let Some(dir) = out_dir {
        persist_records(&summary.records, &dir.join("records"))?;
        if !summary.diagnostics.is_empty() {
            std::fs::write(
                dir.join("diagnostics.txt"),
                summary.diagnostics.join("\n") + "\n",
            )?;
        }
    }
    Ok(summary)
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    cfg: &ExperimentConfig,
    cell: &Cell,
    configuration: Configuration,
    arch: &ArchitectureConfig,
    train_cfg: &TrainingConfig,
    train_raw: &SensorCube,
    test_raw: &SensorCube,
    train_scaled: &SensorCube,
    scaler: &ScalerState,
    window: usize,
    scenarios: &[Vec<usize>],
    dataset: &str,
    config_digest: &str,
    root_seed: u64,
    out_dir: Option<&Path>,
    cell_tag: &str,
) -> Result<(Vec<RunRecord>, Vec<String>)> {
    let mut diagnostics = Vec::new();

    let train_start = Instant::now();
    let trained = TrainedConfiguration::train(configuration, train_scaled, arch, train_cfg)?;
    let train_seconds = train_start.elapsed().as_secs_f64();
    let checkpoint_digest = trained.parameter_digest();

    if let Some(dir) = out_dir {
        for (i, ens) in trained.ensembles.iter().enumerate() {
            let name = if trained.ensembles.len() == 1 {
                format!("{cell_tag}.baec")
            } else {
                format!("{cell_tag}_agent{i}.baec")
            };
            save_ensemble(ens, &dir.join("checkpoints").join(name))?;
        }
    }

    // per-method normalisers: mean attribution on the training data
    let train_nll = trained.nll(train_scaled)?;
    let mut method_means: Vec<(AttributionMethod, Vec<f64>)> = Vec::new();
    for &method in &cfg.run.methods {
        match attribute(&train_nll, method, configuration) {
            Ok(attr) => method_means.push((method, attr.column_means())),
            Err(e) => diagnostics.push(format!("{cell_tag} {method}: {e}")),
        }
    }

    let mut records = Vec::new();
    for (scenario_index, shift_set) in scenarios.iter().enumerate() {
        let scenario_seed = seed_for(root_seed, "scenario", scenario_index as u64);
        let produced = (|| -> Result<Vec<RunRecord>> {
            let scenario = build_scenario(train_raw, test_raw, shift_set, scenario_seed)?;
            let scaled_test = apply_scale(scaler, scenario.test_cube())?;
            let scenario = scenario.with_test_cube(scaled_test)?;

            let eval_start = Instant::now();
            let nll = trained.nll(scenario.test_cube())?;
            let mut out = Vec::new();
            for (method, means) in &method_means {
                let attr = attribute(&nll, *method, configuration)?;
                let post = postprocess(&attr, window, means)?;
                for sensor in &post.flagged_sensors {
                    diagnostics.push(format!(
                        "{cell_tag} {method} {}: sensor {sensor} had zero train-mean \
                         attribution; epsilon divisor used",
                        scenario.label()
                    ));
                }
                let report = evaluate(
                    &post.attr,
                    &scenario,
                    cfg.run.alpha,
                    cfg.run.seqi_weights.0,
                    cfg.run.seqi_weights.1,
                )?;
                let curves = if scenario.noshift_set().is_empty() {
                    None
                } else {
                    let (shift_mean, noshift_mean) = group_mean_curves(&post.attr, &scenario)?;
                    Some(GroupCurves {
                        shift_mean,
                        noshift_mean,
                    })
                };
                out.push(RunRecord {
                    schema_version: SCHEMA_VERSION,
                    config_digest: config_digest.to_string(),
                    dataset: dataset.to_string(),
                    configuration: configuration.to_string(),
                    method: method.to_string(),
                    scenario_id: scenario.label(),
                    shift_set: scenario.shift_set().to_vec(),
                    noshift_set: scenario.noshift_set().to_vec(),
                    capacity: cell.capacity,
                    depth: cell.depth,
                    root_seed,
                    cell_seed: cell.seed,
                    scenario_seed,
                    checkpoint_digest: checkpoint_digest.clone(),
                    report,
                    curves,
                    timings: Timings {
                        train_seconds,
                        evaluate_seconds: eval_start.elapsed().as_secs_f64(),
                    },
                });
            }
            Ok(out)
        })();
        match produced {
            Ok(mut out) => records.append(&mut out),
            Err(e) => diagnostics.push(format!(
                "{cell_tag} scenario {scenario_index}: {e:#}"
            )),
        }
    }
    Ok((records, diagnostics))
}

/// Writes one pretty-printed JSON document per record.
pub fn persist_records(records: &[RunRecord], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for record in records {
        let path = dir.join(record.file_name());
        let json = serde_json::to_string_pretty(record)?;
        std::fs::write(&path, json + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

/// Loads every `*.json` record in a directory, sorted by file name.
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut records = Vec::with_capacity(paths.len());
    for path in paths {
        let text = std::fs::read_to_string(&path)?;
        let record: RunRecord = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn all_subsets_k2_yields_two_scenarios() {
        let (scenarios, _) = sweep_combinations(2, &ShiftPolicy::AllSubsets);
        assert_eq!(scenarios, vec![vec![0], vec![1]]);
    }

    #[test]
    fn all_subsets_k3_yields_six_proper_subsets() {
        let (scenarios, _) = sweep_combinations(3, &ShiftPolicy::AllSubsets);
        assert_eq!(scenarios.len(), 6);
        assert!(scenarios.contains(&vec![0, 2]));
    }

    #[test]
    fn sizes_1_and_10_at_k11_yield_22() {
        let (scenarios, notices) = sweep_combinations(11, &ShiftPolicy::Sizes(vec![1, 10]));
        assert_eq!(scenarios.len(), 22);
        assert!(notices.is_empty());
    }

    #[test]
    fn full_size_is_filtered_with_notice() {
        let (scenarios, notices) = sweep_combinations(3, &ShiftPolicy::Sizes(vec![3, 1]));
        assert_eq!(scenarios.len(), 3);
        assert_eq!(notices.len(), 1);
        assert!(notices[0].contains("undefined"));
    }

    fn tiny_config() -> ExperimentConfig {
        parse_config(
            "[data]\nsensors = 2\nfeatures = 16\ntrain_cycles = 8\ntest_cycles = 12\n\
             drift_sensors = 0\n\
             [model]\nensemble_size = 2\nepochs = 3\ncapacities = 0.5\ndepths = 1\n\
             learning_rate = 0.02\n\
             [run]\nseed = 7\n",
        )
        .unwrap()
    }

    #[test]
    fn record_count_law_holds() {
        let cfg = tiny_config();
        let summary = run_experiment(&cfg, None, None).unwrap();
        // 2 configurations x 2 methods x 2 scenarios (all-subsets at K=2)
        assert_eq!(summary.records.len(), 8, "{:?}", summary.diagnostics);
    }

    #[test]
    fn var_nll_with_single_member_degrades_gracefully() {
        let mut cfg = tiny_config();
        cfg.model.ensemble_size = 1;
        let summary = run_experiment(&cfg, None, None).unwrap();
        // var-nll is rejected per configuration; mean-nll records remain
        assert_eq!(summary.records.len(), 4);
        assert!(summary
            .diagnostics
            .iter()
            .any(|d| d.contains("epistemic variance requires an ensemble")));
        assert!(summary.records.iter().all(|r| r.method == "mean-nll"));
    }

    #[test]
    fn training_reuse_shares_checkpoint_digest_across_scenarios() {
        let cfg = tiny_config();
        let summary = run_experiment(&cfg, None, None).unwrap();
        for configuration in ["centralised", "coalitional"] {
            let digests: Vec<&String> = summary
                .records
                .iter()
                .filter(|r| r.configuration == configuration)
                .map(|r| &r.checkpoint_digest)
                .collect();
            assert!(digests.len() > 1);
            assert!(digests.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn persist_and_load_round_trip() {
        let cfg = tiny_config();
        let dir = tempfile::tempdir().unwrap();
        let summary = run_experiment(&cfg, Some(dir.path()), None).unwrap();
        let loaded = load_records(&dir.path().join("records")).unwrap();
        assert_eq!(loaded.len(), summary.records.len());
        assert!(dir.path().join("run-config.ini").exists());
        // checkpoints: one centralised file plus one per coalition agent
        let checkpoints: Vec<_> = std::fs::read_dir(dir.path().join("checkpoints"))
            .unwrap()
            .collect();
        assert_eq!(checkpoints.len(), 3);
    }
}
