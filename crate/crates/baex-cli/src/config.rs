//! Experiment configuration: a flat `key = value` file with section headers.
//!
//! ```text
//! [data]
//! source = synth              ; synth | csv | binary
//! # path = trajectory.csv     ; required for csv / binary sources
//! sensors = 4
//! features = 32
//! train_cycles = 60
//! test_cycles = 240
//! drift_profile = linear      ; linear | quadratic
//! drift_amplitude = 1.0
//! noise_level = 0.05
//! drift_sensors = 0
//!
//! [pipeline]
//! trim_head = 0.10
//! trim_tail = 0.05
//! train_frac = 0.20
//! fft = true
//!
//! [model]
//! ensemble_size = 5
//! lambda = 0.001
//! epochs = 250
//! capacities = 1
//! depths = 1
//! kernel_size = 5
//! learning_rate = auto        ; auto | <float>
//! lr_min = 1e-5
//! lr_max = 1.0
//! lr_steps = 60
//!
//! [run]
//! configurations = centralised,coalitional
//! methods = mean-nll,var-nll
//! shift_policy = all-subsets  ; all-subsets | sizes:1,10
//! seed = 0
//! alpha = 0.05
//! seqi_weights = 0.5,0.5
//! ```
//!
//! Every key has a default; unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use baex::bae::{AttributionMethod, Configuration, LrPolicy};
use baex::pipeline::DriftProfile;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io: {0}")]
    Io(String),
    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    Synth,
    Csv,
    Binary,
}

#[derive(Debug, Clone)]
pub struct DataConfig {
    pub source: DataSource,
    pub path: Option<PathBuf>,
    pub sensors: usize,
    pub features: usize,
    pub train_cycles: usize,
    pub test_cycles: usize,
    pub drift_profile: DriftProfile,
    pub drift_amplitude: f64,
    pub noise_level: f64,
    pub drift_sensors: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub trim_head: f64,
    pub trim_tail: f64,
    pub train_frac: f64,
    pub fft: bool,
}

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub ensemble_size: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub capacities: Vec<f64>,
    pub depths: Vec<usize>,
    pub kernel_size: usize,
    pub learning_rate: Option<f64>, // None = auto
    pub lr_min: f64,
    pub lr_max: f64,
    pub lr_steps: usize,
}

impl ModelConfig {
    pub fn lr_policy(&self) -> LrPolicy {
        match self.learning_rate {
            Some(lr) => LrPolicy::Fixed(lr),
            None => LrPolicy::Auto {
                min: self.lr_min,
                max: self.lr_max,
                steps: self.lr_steps,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShiftPolicy {
    AllSubsets,
    Sizes(Vec<usize>),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub configurations: Vec<Configuration>,
    pub methods: Vec<AttributionMethod>,
    pub shift_policy: ShiftPolicy,
    pub seed: u64,
    pub alpha: f64,
    pub seqi_weights: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub pipeline: PipelineConfig,
    pub model: ModelConfig,
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataConfig {
                source: DataSource::Synth,
                path: None,
                sensors: 4,
                features: 32,
                train_cycles: 60,
                test_cycles: 240,
                drift_profile: DriftProfile::Linear,
                drift_amplitude: 1.0,
                noise_level: 0.05,
                drift_sensors: vec![0],
            },
            pipeline: PipelineConfig {
                trim_head: 0.10,
                trim_tail: 0.05,
                train_frac: 0.20,
                fft: true,
            },
            model: ModelConfig {
                ensemble_size: 5,
                lambda: 0.001,
                epochs: 250,
                capacities: vec![1.0],
                depths: vec![1],
                kernel_size: 5,
                learning_rate: None,
                lr_min: 1e-5,
                lr_max: 1.0,
                lr_steps: 60,
            },
            run: RunConfig {
                configurations: vec![Configuration::Centralised, Configuration::Coalitional],
                methods: vec![AttributionMethod::MeanNll, AttributionMethod::VarNll],
                shift_policy: ShiftPolicy::AllSubsets,
                seed: 0,
                alpha: 0.05,
                seqi_weights: (0.5, 0.5),
            },
        }
    }
}

/// Parsed `[section] key = value` lines, with duplicate detection.
fn parse_sections(
    text: &str,
) -> Result<BTreeMap<String, BTreeMap<String, (usize, String)>>, ConfigError> {
    let mut sections: BTreeMap<String, BTreeMap<String, (usize, String)>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find(['#', ';']) {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') || line.len() < 3 {
                return Err(ConfigError::Parse {
                    line: line_no,
                    message: format!("malformed section header '{line}'"),
                });
            }
            let name = line[1..line.len() - 1].trim().to_string();
            current = Some(name.clone());
            sections.entry(name).or_default();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("expected 'key = value', found '{line}'"),
            });
        };
        let section = current.clone().ok_or(ConfigError::Parse {
            line: line_no,
            message: "key before any [section] header".into(),
        })?;
        let key = key.trim().to_string();
        let entry = sections.entry(section).or_default();
        if entry
            .insert(key.clone(), (line_no, value.trim().to_string()))
            .is_some()
        {
            return Err(ConfigError::Parse {
                line: line_no,
                message: format!("duplicate key '{key}'"),
            });
        }
    }
    Ok(sections)
}

struct Section {
    name: String,
    entries: BTreeMap<String, (usize, String)>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, into: &mut T) -> Result<(), ConfigError> {
        if let Some((line, value)) = self.take(key) {
            *into = value.parse().map_err(|_| ConfigError::Parse {
                line,
                message: format!("cannot parse '{value}' for key '{key}'"),
            })?;
        }
        Ok(())
    }

    fn parse_list<T: std::str::FromStr>(
        &mut self,
        key: &str,
        into: &mut Vec<T>,
    ) -> Result<(), ConfigError> {
        if let Some((line, value)) = self.take(key) {
            let mut out = Vec::new();
            for part in value.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                out.push(part.parse().map_err(|_| ConfigError::Parse {
                    line,
                    message: format!("cannot parse '{part}' in list '{key}'"),
                })?);
            }
            *into = out;
        }
        Ok(())
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some((key, (line, _))) = self.entries.into_iter().next() {
            return Err(ConfigError::Parse {
                line,
                message: format!("unknown key '{key}' in section [{}]", self.name),
            });
        }
        Ok(())
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut sections = parse_sections(text)?;
    let mut cfg = ExperimentConfig::default();

    let mut section = |name: &str| Section {
        name: name.to_string(),
        entries: sections.remove(name).unwrap_or_default(),
    };

    // [data]
    let mut data = section("data");
    if let Some((line, value)) = data.take("source") {
        cfg.data.source = match value.as_str() {
            "synth" => DataSource::Synth,
            "csv" => DataSource::Csv,
            "binary" => DataSource::Binary,
            other => {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("unknown source '{other}' (synth | csv | binary)"),
                })
            }
        };
    }
    if let Some((_, value)) = data.take("path") {
        cfg.data.path = Some(PathBuf::from(value));
    }
    data.parse("sensors", &mut cfg.data.sensors)?;
    data.parse("features", &mut cfg.data.features)?;
    data.parse("train_cycles", &mut cfg.data.train_cycles)?;
    data.parse("test_cycles", &mut cfg.data.test_cycles)?;
    if let Some((line, value)) = data.take("drift_profile") {
        cfg.data.drift_profile = match value.as_str() {
            "linear" => DriftProfile::Linear,
            "quadratic" => DriftProfile::Quadratic,
            other => {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("unknown drift profile '{other}'"),
                })
            }
        };
    }
    data.parse("drift_amplitude", &mut cfg.data.drift_amplitude)?;
    data.parse("noise_level", &mut cfg.data.noise_level)?;
    data.parse_list("drift_sensors", &mut cfg.data.drift_sensors)?;
    data.finish()?;

    // [pipeline]
    let mut pipeline = section("pipeline");
    pipeline.parse("trim_head", &mut cfg.pipeline.trim_head)?;
    pipeline.parse("trim_tail", &mut cfg.pipeline.trim_tail)?;
    pipeline.parse("train_frac", &mut cfg.pipeline.train_frac)?;
    pipeline.parse("fft", &mut cfg.pipeline.fft)?;
    pipeline.finish()?;

    // [model]
    let mut model = section("model");
    model.parse("ensemble_size", &mut cfg.model.ensemble_size)?;
    model.parse("lambda", &mut cfg.model.lambda)?;
    model.parse("epochs", &mut cfg.model.epochs)?;
    model.parse_list("capacities", &mut cfg.model.capacities)?;
    model.parse_list("depths", &mut cfg.model.depths)?;
    model.parse("kernel_size", &mut cfg.model.kernel_size)?;
    if let Some((line, value)) = model.take("learning_rate") {
        cfg.model.learning_rate = if value == "auto" {
            None
        } else {
            Some(value.parse().map_err(|_| ConfigError::Parse {
                line,
                message: format!("learning_rate must be 'auto' or a float, got '{value}'"),
            })?)
        };
    }
    model.parse("lr_min", &mut cfg.model.lr_min)?;
    model.parse("lr_max", &mut cfg.model.lr_max)?;
    model.parse("lr_steps", &mut cfg.model.lr_steps)?;
    model.finish()?;

    // [run]
    let mut run = section("run");
    if let Some((line, value)) = run.take("configurations") {
        let mut out = Vec::new();
        for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            out.push(match part {
                "centralised" => Configuration::Centralised,
                "coalitional" => Configuration::Coalitional,
                other => {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("unknown configuration '{other}'"),
                    })
                }
            });
        }
        cfg.run.configurations = out;
    }
    if let Some((line, value)) = run.take("methods") {
        let mut out = Vec::new();
        for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            out.push(match part {
                "mean-nll" => AttributionMethod::MeanNll,
                "var-nll" => AttributionMethod::VarNll,
                other => {
                    return Err(ConfigError::Parse {
                        line,
                        message: format!("unknown method '{other}'"),
                    })
                }
            });
        }
        cfg.run.methods = out;
    }
    if let Some((line, value)) = run.take("shift_policy") {
        cfg.run.shift_policy = if value == "all-subsets" {
            ShiftPolicy::AllSubsets
        } else if let Some(rest) = value.strip_prefix("sizes:") {
            let mut sizes = Vec::new();
            for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                sizes.push(part.parse().map_err(|_| ConfigError::Parse {
                    line,
                    message: format!("cannot parse size '{part}'"),
                })?);
            }
            ShiftPolicy::Sizes(sizes)
        } else {
            return Err(ConfigError::Parse {
                line,
                message: format!("shift_policy must be 'all-subsets' or 'sizes:<list>', got '{value}'"),
            });
        };
    }
    run.parse("seed", &mut cfg.run.seed)?;
    run.parse("alpha", &mut cfg.run.alpha)?;
    if let Some((line, value)) = run.take("seqi_weights") {
        let parts: Vec<&str> = value.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(ConfigError::Parse {
                line,
                message: "seqi_weights needs exactly two comma-separated values".into(),
            });
        }
        let w1 = parts[0].parse().map_err(|_| ConfigError::Parse {
            line,
            message: format!("bad weight '{}'", parts[0]),
        })?;
        let w2 = parts[1].parse().map_err(|_| ConfigError::Parse {
            line,
            message: format!("bad weight '{}'", parts[1]),
        })?;
        cfg.run.seqi_weights = (w1, w2);
    }
    run.finish()?;

    if let Some(name) = sections.keys().next() {
        return Err(ConfigError::Invalid(format!("unknown section [{name}]")));
    }

    validate(&cfg)?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    let invalid = |m: String| Err(ConfigError::Invalid(m));
    if cfg.data.source != DataSource::Synth && cfg.data.path.is_none() {
        return invalid("file sources need 'path'".into());
    }
    if cfg.data.source == DataSource::Synth {
        if cfg.data.sensors == 0 || cfg.data.features == 0 {
            return invalid("synth sensors and features must be positive".into());
        }
        if cfg.data.train_cycles == 0 || cfg.data.test_cycles == 0 {
            return invalid("synth cycle counts must be positive".into());
        }
        if let Some(bad) = cfg.data.drift_sensors.iter().find(|s| **s >= cfg.data.sensors) {
            return invalid(format!("drift sensor {bad} out of range"));
        }
    }
    if !(0.0..1.0).contains(&cfg.pipeline.trim_head)
        || !(0.0..1.0).contains(&cfg.pipeline.trim_tail)
    {
        return invalid("trim fractions must lie in [0, 1)".into());
    }
    if !(0.0..1.0).contains(&cfg.pipeline.train_frac) || cfg.pipeline.train_frac == 0.0 {
        return invalid("train_frac must lie in (0, 1)".into());
    }
    if cfg.model.ensemble_size == 0 {
        return invalid("ensemble_size must be >= 1".into());
    }
    if cfg.model.epochs == 0 {
        return invalid("epochs must be >= 1".into());
    }
    if cfg.model.capacities.is_empty() || cfg.model.depths.is_empty() {
        return invalid("capacities and depths must be non-empty".into());
    }
    for c in &cfg.model.capacities {
        if ![0.5, 1.0, 2.0].contains(c) {
            return invalid(format!("capacity {c} not in {{0.5, 1, 2}}"));
        }
    }
    for d in &cfg.model.depths {
        if !(1..=3).contains(d) {
            return invalid(format!("depth {d} not in {{1, 2, 3}}"));
        }
    }
    if let Some(lr) = cfg.model.learning_rate {
        if lr <= 0.0 || !lr.is_finite() {
            return invalid(format!("learning_rate {lr} must be positive"));
        }
    }
    if !(cfg.model.lr_min > 0.0 && cfg.model.lr_max > cfg.model.lr_min) {
        return invalid("lr range must satisfy 0 < lr_min < lr_max".into());
    }
    if cfg.model.lr_steps < 2 {
        return invalid("lr_steps must be >= 2".into());
    }
    if cfg.run.configurations.is_empty() || cfg.run.methods.is_empty() {
        return invalid("configurations and methods must be non-empty".into());
    }
    if !(0.0..=1.0).contains(&cfg.run.alpha) {
        return invalid("alpha must lie in [0, 1]".into());
    }
    let (w1, w2) = cfg.run.seqi_weights;
    if w1 < 0.0 || w2 < 0.0 || (w1 + w2 - 1.0).abs() > 1e-9 {
        return invalid("seqi weights must be non-negative and sum to 1".into());
    }
    if let ShiftPolicy::Sizes(sizes) = &cfg.run.shift_policy {
        if sizes.is_empty() {
            return invalid("shift_policy sizes list is empty".into());
        }
    }
    Ok(())
}

impl ExperimentConfig {
    /// Canonical text form: every field in fixed order. Feeds the digest and
    /// makes runs replayable.
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[data]");
        let _ = writeln!(
            s,
            "source = {}",
            match self.data.source {
                DataSource::Synth => "synth",
                DataSource::Csv => "csv",
                DataSource::Binary => "binary",
            }
        );
        if let Some(path) = &self.data.path {
            let _ = writeln!(s, "path = {}", path.display());
        }
        let _ = writeln!(s, "sensors = {}", self.data.sensors);
        let _ = writeln!(s, "features = {}", self.data.features);
        let _ = writeln!(s, "train_cycles = {}", self.data.train_cycles);
        let _ = writeln!(s, "test_cycles = {}", self.data.test_cycles);
        let _ = writeln!(
            s,
            "drift_profile = {}",
            match self.data.drift_profile {
                DriftProfile::Linear => "linear",
                DriftProfile::Quadratic => "quadratic",
            }
        );
        let _ = writeln!(s, "drift_amplitude = {}", self.data.drift_amplitude);
        let _ = writeln!(s, "noise_level = {}", self.data.noise_level);
        let drift: Vec<String> = self.data.drift_sensors.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(s, "drift_sensors = {}", drift.join(","));

        let _ = writeln!(s, "[pipeline]");
        let _ = writeln!(s, "trim_head = {}", self.pipeline.trim_head);
        let _ = writeln!(s, "trim_tail = {}", self.pipeline.trim_tail);
        let _ = writeln!(s, "train_frac = {}", self.pipeline.train_frac);
        let _ = writeln!(s, "fft = {}", self.pipeline.fft);

        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "ensemble_size = {}", self.model.ensemble_size);
        let _ = writeln!(s, "lambda = {}", self.model.lambda);
        let _ = writeln!(s, "epochs = {}", self.model.epochs);
        let caps: Vec<String> = self.model.capacities.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(s, "capacities = {}", caps.join(","));
        let depths: Vec<String> = self.model.depths.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(s, "depths = {}", depths.join(","));
        let _ = writeln!(s, "kernel_size = {}", self.model.kernel_size);
        match self.model.learning_rate {
            Some(lr) => {
                let _ = writeln!(s, "learning_rate = {lr}");
            }
            None => {
                let _ = writeln!(s, "learning_rate = auto");
            }
        }
        let _ = writeln!(s, "lr_min = {}", self.model.lr_min);
        let _ = writeln!(s, "lr_max = {}", self.model.lr_max);
        let _ = writeln!(s, "lr_steps = {}", self.model.lr_steps);

        let _ = writeln!(s, "[run]");
        let configs: Vec<&str> = self
            .run
            .configurations
            .iter()
            .map(|c| c.as_str())
            .collect();
        let _ = writeln!(s, "configurations = {}", configs.join(","));
        let methods: Vec<&str> = self.run.methods.iter().map(|m| m.as_str()).collect();
        let _ = writeln!(s, "methods = {}", methods.join(","));
        match &self.run.shift_policy {
            ShiftPolicy::AllSubsets => {
                let _ = writeln!(s, "shift_policy = all-subsets");
            }
            ShiftPolicy::Sizes(sizes) => {
                let list: Vec<String> = sizes.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(s, "shift_policy = sizes:{}", list.join(","));
            }
        }
        let _ = writeln!(s, "seed = {}", self.run.seed);
        let _ = writeln!(s, "alpha = {}", self.run.alpha);
        let _ = writeln!(
            s,
            "seqi_weights = {},{}",
            self.run.seqi_weights.0, self.run.seqi_weights.1
        );
        s
    }

    /// FNV-1a digest of the canonical form, as hex.
    pub fn digest(&self) -> String {
        let bytes = self.canonical_string().into_bytes();
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    /// Dataset label used in record names and report rows.
    pub fn dataset_label(&self) -> String {
        match (&self.data.source, &self.data.path) {
            (DataSource::Synth, _) => "synth".to_string(),
            (_, Some(path)) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into()),
            _ => "dataset".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_survive_empty_config() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.model.ensemble_size, 5);
        assert_eq!(cfg.model.lambda, 0.001);
        assert_eq!(cfg.model.epochs, 250);
        assert_eq!(cfg.pipeline.train_frac, 0.20);
        assert_eq!(cfg.run.alpha, 0.05);
    }

    #[test]
    fn full_round_trip() {
        let text = "\
[data]
source = synth
sensors = 3
features = 16
train_cycles = 10
test_cycles = 20
drift_profile = quadratic
drift_amplitude = 0.8
noise_level = 0.02
drift_sensors = 0,2

[pipeline]
train_frac = 0.25
fft = false

[model]
ensemble_size = 3
epochs = 17
capacities = 0.5,1
depths = 1,2
learning_rate = 0.01

[run]
configurations = coalitional
methods = mean-nll
shift_policy = sizes:1,2
seed = 42
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.data.sensors, 3);
        assert_eq!(cfg.data.drift_sensors, vec![0, 2]);
        assert_eq!(cfg.model.capacities, vec![0.5, 1.0]);
        assert_eq!(cfg.model.learning_rate, Some(0.01));
        assert_eq!(cfg.run.shift_policy, ShiftPolicy::Sizes(vec![1, 2]));
        assert_eq!(cfg.run.seed, 42);
        // canonical form re-parses to the same digest
        let canon = cfg.canonical_string();
        let cfg2 = parse_config(&canon).unwrap();
        assert_eq!(cfg.digest(), cfg2.digest());
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        assert!(parse_config("[model]\nbogus = 1\n").is_err());
        assert!(parse_config("[nope]\n").is_err());
        assert!(parse_config("stray = 1\n").is_err());
    }

    #[test]
    fn bad_values_name_the_line() {
        let err = parse_config("[model]\nepochs = fast\n").unwrap_err();
        match err {
            ConfigError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validation_catches_bad_capacity_and_weights() {
        assert!(parse_config("[model]\ncapacities = 0.75\n").is_err());
        assert!(parse_config("[run]\nseqi_weights = 0.9,0.2\n").is_err());
        assert!(parse_config("[data]\nsource = csv\n").is_err());
    }

    #[test]
    fn digest_changes_with_seed() {
        let a = parse_config("[run]\nseed = 1\n").unwrap();
        let b = parse_config("[run]\nseed = 2\n").unwrap();
        assert_ne!(a.digest(), b.digest());
    }
}
