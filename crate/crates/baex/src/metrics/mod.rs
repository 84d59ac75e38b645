//! Explanation-quality metrics.
//!
//! Spearman drift coefficients per sensor, their geometric-mean score over
//! shifting vs non-shifting sensors (G_SDC), sensitivity-specificity of the
//! per-cycle top-I sensor ranking (G_SSER), their weighted combination
//! (SEQI), the Matthews correlation coefficient over the same ranking
//! confusion matrix, and the diagnostic Pearson correlation between
//! group-mean attribution curves.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::bae::AttributionMatrix;
use crate::pipeline::ShiftScenario;

/// Significance level used for the drift-coefficient gate.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Largest length for which the Spearman p-value is computed by exact
/// permutation enumeration; the t-approximation is used beyond it.
pub const EXACT_PERMUTATION_MAX: usize = 8;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} values, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("metric undefined: {0}")]
    Undefined(String),
}

/// Strict descending ranks: rank 1 is the largest value, ties broken by the
/// lower index.
pub fn rank_desc(values: &[f64]) -> Result<Vec<usize>, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| {
        values[j]
            .partial_cmp(&values[i])
            .expect("finite values compare")
            .then(i.cmp(&j))
    });
    let mut ranks = vec![0usize; values.len()];
    for (position, &idx) in order.iter().enumerate() {
        ranks[idx] = position + 1;
    }
    Ok(ranks)
}

/// Ascending average ranks (standard Spearman tie handling).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share the average rank
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; returns 0 when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        let da = x - mean_a;
        let db = y - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a <= 0.0 || var_b <= 0.0 {
        0.0
    } else {
        cov / (var_a * var_b).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpearmanResult {
    pub rho: f64,
    pub p_value: f64,
}

/// Heap's algorithm; calls `f` for every permutation of `arr[..k]`.
fn for_each_permutation(arr: &mut [f64], k: usize, f: &mut impl FnMut(&[f64])) {
    if k <= 1 {
        f(arr);
        return;
    }
    for i in 0..k - 1 {
        for_each_permutation(arr, k - 1, f);
        if k % 2 == 0 {
            arr.swap(i, k - 1);
        } else {
            arr.swap(0, k - 1);
        }
    }
    for_each_permutation(arr, k - 1, f);
}

/// Exact two-sided permutation p-value for the rank correlation, conditional
/// on the observed tie pattern.
fn exact_permutation_p(ranks_a: &[f64], ranks_b: &[f64], observed: f64) -> f64 {
    let mut b = ranks_b.to_vec();
    let threshold = observed.abs() - 1e-12;
    let mut hits = 0u64;
    let mut total = 0u64;
    let len = b.len();
    for_each_permutation(&mut b, len, &mut |perm| {
        total += 1;
        if pearson(ranks_a, perm).abs() >= threshold {
            hits += 1;
        }
    });
    hits as f64 / total as f64
}

/// Spearman rank correlation with a two-sided p-value.
///
/// The correlation is the Pearson correlation of average-tie ranks. For
/// lengths up to [`EXACT_PERMUTATION_MAX`] the p-value is an exact
/// permutation enumeration (the t-approximation is too coarse there to meet
/// a 0.02 oracle tolerance); beyond that it uses the t-approximation
/// `t = rho * sqrt((L-2) / (1-rho^2))` on L-2 degrees of freedom.
/// `|rho| = 1` maps to p = 0 and zero-variance inputs to (0, 1).
pub fn spearman(a: &[f64], b: &[f64]) -> Result<SpearmanResult, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    let l = a.len();
    if l < 3 {
        return Err(MetricsError::TooShort { need: 3, got: l });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(a) || constant(b) {
        return Ok(SpearmanResult {
            rho: 0.0,
            p_value: 1.0,
        });
    }

    let ranks_a = average_ranks(a);
    let ranks_b = average_ranks(b);
    let rho = pearson(&ranks_a, &ranks_b).clamp(-1.0, 1.0);

    let p_value = if rho.abs() >= 1.0 - 1e-12 {
        0.0
    } else if l <= EXACT_PERMUTATION_MAX {
        exact_permutation_p(&ranks_a, &ranks_b, rho)
    } else {
        let t = rho * ((l as f64 - 2.0) / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, l as f64 - 2.0).expect("valid dof");
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    };

    Ok(SpearmanResult { rho, p_value })
}

/// Spearman drift coefficient: `|rho|` when significant at `alpha`, else 0.
pub fn drift_coefficient(
    attr_column: &[f64],
    degradation: &[f64],
    alpha: f64,
) -> Result<f64, MetricsError> {
    let result = spearman(attr_column, degradation)?;
    if result.p_value <= alpha {
        Ok(result.rho.abs())
    } else {
        Ok(0.0)
    }
}

/// Geometric mean rewarding high drift coefficients on shifting sensors and
/// penalising them on non-shifting ones. `None` when either side is empty
/// (the metric divides by both set sizes).
pub fn g_sdc(shift_rhos: &[f64], noshift_rhos: &[f64]) -> Option<f64> {
    if shift_rhos.is_empty() || noshift_rhos.is_empty() {
        return None;
    }
    let shift_term = shift_rhos.iter().sum::<f64>() / shift_rhos.len() as f64;
    let noshift_term =
        noshift_rhos.iter().map(|r| 1.0 - r).sum::<f64>() / noshift_rhos.len() as f64;
    Some((shift_term * noshift_term).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: u64,
    pub true_negatives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_positives + self.true_negatives + self.false_positives + self.false_negatives
    }

    pub fn sensitivity(&self) -> f64 {
        self.true_positives as f64 / (self.true_positives + self.false_negatives) as f64
    }

    pub fn specificity(&self) -> f64 {
        self.true_negatives as f64 / (self.true_negatives + self.false_positives) as f64
    }
}

/// Per-cycle top-I ranking against the gold shift labels, aggregated into a
/// confusion matrix, scored by the G-mean of sensitivity and specificity.
pub fn g_sser(
    attr: &AttributionMatrix,
    scenario: &ShiftScenario,
) -> Result<(ConfusionCounts, f64), MetricsError> {
    let i_count = scenario.shift_set().len();
    let j_count = scenario.noshift_set().len();
    if i_count == 0 || j_count == 0 {
        return Err(MetricsError::Undefined(
            "G_SSER needs at least one shifting and one non-shifting sensor".into(),
        ));
    }
    if attr.sensors() != i_count + j_count {
        return Err(MetricsError::LengthMismatch(
            attr.sensors(),
            i_count + j_count,
        ));
    }

    let mut counts = ConfusionCounts {
        true_positives: 0,
        true_negatives: 0,
        false_positives: 0,
        false_negatives: 0,
    };
    let mut row = vec![0.0; attr.sensors()];
    for cycle in 0..attr.cycles() {
        for sensor in 0..attr.sensors() {
            row[sensor] = attr.get(cycle, sensor);
        }
        let ranks = rank_desc(&row)?;
        for sensor in 0..attr.sensors() {
            let predicted_shift = ranks[sensor] <= i_count;
            let gold_shift = scenario.shift_set().contains(&sensor);
            match (predicted_shift, gold_shift) {
                (true, true) => counts.true_positives += 1,
                (false, false) => counts.true_negatives += 1,
                (true, false) => counts.false_positives += 1,
                (false, true) => counts.false_negatives += 1,
            }
        }
    }
    let score = (counts.sensitivity() * counts.specificity()).sqrt();
    Ok((counts, score))
}

/// Weighted combination of G_SDC and G_SSER; weights must be non-negative
/// and sum to 1.
pub fn seqi(g_sdc: f64, g_sser: f64, w1: f64, w2: f64) -> Result<f64, MetricsError> {
    if w1 < 0.0 || w2 < 0.0 {
        return Err(MetricsError::InvalidWeights(
            "weights must be non-negative".into(),
        ));
    }
    if (w1 + w2 - 1.0).abs() > 1e-9 {
        return Err(MetricsError::InvalidWeights(format!(
            "weights must sum to 1, got {}",
            w1 + w2
        )));
    }
    Ok(w1 * g_sdc + w2 * g_sser)
}

/// Matthews correlation coefficient over a ranking confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mcc {
    pub signed: f64,
    pub absolute: f64,
}

/// Any zero factor in the denominator yields 0 by convention.
pub fn mcc(counts: &ConfusionCounts) -> Mcc {
    let tp = counts.true_positives as f64;
    let tn = counts.true_negatives as f64;
    let fp = counts.false_positives as f64;
    let fn_ = counts.false_negatives as f64;
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let signed = if denom <= 0.0 {
        0.0
    } else {
        (tp * tn - fp * fn_) / denom.sqrt()
    };
    Mcc {
        signed,
        absolute: signed.abs(),
    }
}

/// Pearson correlation between the per-cycle mean attribution over shifting
/// sensors and over non-shifting sensors. Zero-variance curves give 0.
pub fn group_pearson(
    attr: &AttributionMatrix,
    scenario: &ShiftScenario,
) -> Result<f64, MetricsError> {
    let (shift_curve, noshift_curve) = group_mean_curves(attr, scenario)?;
    Ok(pearson(&shift_curve, &noshift_curve))
}

/// The two per-cycle group-mean attribution curves (shift, non-shift).
pub fn group_mean_curves(
    attr: &AttributionMatrix,
    scenario: &ShiftScenario,
) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
    if scenario.shift_set().is_empty() || scenario.noshift_set().is_empty() {
        return Err(MetricsError::Undefined(
            "group curves need both shifting and non-shifting sensors".into(),
        ));
    }
    let mean_over = |sensors: &[usize]| -> Vec<f64> {
        (0..attr.cycles())
            .map(|n| {
                sensors.iter().map(|k| attr.get(n, *k)).sum::<f64>() / sensors.len() as f64
            })
            .collect()
    };
    Ok((
        mean_over(scenario.shift_set()),
        mean_over(scenario.noshift_set()),
    ))
}

/// Everything the evaluation produces for one (configuration, method,
/// scenario) triple. Metrics that divide by an empty sensor group are
/// reported as absent rather than coerced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub configuration: String,
    pub method: String,
    pub scenario: String,
    pub per_sensor_rho: Vec<f64>,
    pub g_sdc: Option<f64>,
    pub g_sser: Option<f64>,
    pub seqi: Option<f64>,
    pub mcc_signed: Option<f64>,
    pub mcc_abs: Option<f64>,
    pub group_pearson: Option<f64>,
    pub confusion: Option<ConfusionCounts>,
}

/// Runs the full metric set for one attribution matrix under one scenario.
pub fn evaluate(
    attr: &AttributionMatrix,
    scenario: &ShiftScenario,
    alpha: f64,
    w1: f64,
    w2: f64,
) -> Result<EvaluationReport, MetricsError> {
    if attr.cycles() != scenario.degradation().len() {
        return Err(MetricsError::LengthMismatch(
            attr.cycles(),
            scenario.degradation().len(),
        ));
    }
    let k = scenario.shift_set().len() + scenario.noshift_set().len();
    if attr.sensors() != k {
        return Err(MetricsError::LengthMismatch(attr.sensors(), k));
    }

    let per_sensor_rho: Result<Vec<f64>, MetricsError> = (0..attr.sensors())
        .map(|sensor| drift_coefficient(&attr.column(sensor), scenario.degradation(), alpha))
        .collect();
    let per_sensor_rho = per_sensor_rho?;

    let shift_rhos: Vec<f64> = scenario
        .shift_set()
        .iter()
        .map(|k| per_sensor_rho[*k])
        .collect();
    let noshift_rhos: Vec<f64> = scenario
        .noshift_set()
        .iter()
        .map(|k| per_sensor_rho[*k])
        .collect();

    let g_sdc_value = g_sdc(&shift_rhos, &noshift_rhos);
    let (confusion, g_sser_value) = if scenario.noshift_set().is_empty() {
        (None, None)
    } else {
        let (counts, score) = g_sser(attr, scenario)?;
        (Some(counts), Some(score))
    };
    let seqi_value = match (g_sdc_value, g_sser_value) {
        (Some(sdc), Some(sser)) => Some(seqi(sdc, sser, w1, w2)?),
        _ => None,
    };
    let mcc_value = confusion.as_ref().map(mcc);
    let pearson_value = if scenario.noshift_set().is_empty() {
        None
    } else {
        Some(group_pearson(attr, scenario)?)
    };

    Ok(EvaluationReport {
        configuration: attr.config().to_string(),
        method: attr.method().to_string(),
        scenario: scenario.label(),
        per_sensor_rho,
        g_sdc: g_sdc_value,
        g_sser: g_sser_value,
        seqi: seqi_value,
        mcc_signed: mcc_value.map(|m| m.signed),
        mcc_abs: mcc_value.map(|m| m.absolute),
        group_pearson: pearson_value,
        confusion,
    })
}
