//! Cross-run method comparison: Friedman test, pairwise Wilcoxon
//! signed-rank tests with Holm correction, average ranks, and a
//! critical-difference style grouping summary emitted as JSON and SVG.

mod svg;

pub use svg::rank_diagram_svg;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

use crate::metrics::average_ranks;

/// Exact Wilcoxon enumeration is used up to this many non-zero differences;
/// the normal approximation (with tie correction) beyond.
pub const WILCOXON_EXACT_MAX: usize = 12;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("degenerate table: {0}")]
    DegenerateTable(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("non-finite value in input")]
    NonFinite,
}

/// Rows are experimental runs, columns are methods, cells are metric values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    methods: Vec<String>,
    row_labels: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn new(
        methods: Vec<String>,
        row_labels: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, StatsError> {
        if methods.is_empty() || rows.is_empty() {
            return Err(StatsError::DegenerateTable("no methods or no rows".into()));
        }
        if row_labels.len() != rows.len() {
            return Err(StatsError::LengthMismatch(row_labels.len(), rows.len()));
        }
        for row in &rows {
            if row.len() != methods.len() {
                return Err(StatsError::DegenerateTable(format!(
                    "row width {} does not match {} methods",
                    row.len(),
                    methods.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(StatsError::NonFinite);
            }
        }
        Ok(Self {
            methods,
            row_labels,
            rows,
        })
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

/// Friedman test over within-row average ranks.
///
/// The statistic is `12n/(k(k+1)) * (sum_j Rbar_j^2 - k(k+1)^2/4)` with the
/// p-value taken from the chi-squared distribution on k-1 degrees of freedom.
pub fn friedman(table: &ScoreTable) -> Result<(f64, f64), StatsError> {
    let k = table.methods.len();
    let n = table.rows.len();
    if k < 2 || n < 2 {
        return Err(StatsError::DegenerateTable(format!(
            "friedman needs >= 2 methods and >= 2 rows, got {k} x {n}"
        )));
    }
    let mut rank_sums = vec![0.0; k];
    for row in &table.rows {
        for (j, r) in average_ranks(row).iter().enumerate() {
            rank_sums[j] += r;
        }
    }
    let n_f = n as f64;
    let k_f = k as f64;
    let sum_sq: f64 = rank_sums
        .iter()
        .map(|s| {
            let mean = s / n_f;
            mean * mean
        })
        .sum();
    let statistic = (12.0 * n_f / (k_f * (k_f + 1.0)))
        * (sum_sq - k_f * (k_f + 1.0) * (k_f + 1.0) / 4.0);
    let statistic = statistic.max(0.0);
    let dist = ChiSquared::new(k_f - 1.0).expect("valid dof");
    let p_value = (1.0 - dist.cdf(statistic)).clamp(0.0, 1.0);
    Ok((statistic, p_value))
}

/// Which p-value route [`wilcoxon_signed_rank_with`] takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WilcoxonMode {
    /// Exact enumeration for n <= [`WILCOXON_EXACT_MAX`], normal beyond.
    Auto,
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// `min(W+, W-)` over signed ranks of the non-zero |differences|.
    pub statistic: f64,
    pub p_value: f64,
    /// Number of non-zero differences that entered the test.
    pub n_effective: usize,
}

/// Two-sided Wilcoxon signed-rank test on paired scores. Zero differences
/// are dropped; if all pairs tie the result is (0, 1).
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, StatsError> {
    wilcoxon_signed_rank_with(a, b, WilcoxonMode::Auto)
}

pub fn wilcoxon_signed_rank_with(
    a: &[f64],
    b: &[f64],
    mode: WilcoxonMode,
) -> Result<WilcoxonResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            p_value: 1.0,
            n_effective: 0,
        });
    }

    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let mut w_plus = 0.0;
    let mut w_minus = 0.0;
    for (d, r) in diffs.iter().zip(&ranks) {
        if *d > 0.0 {
            w_plus += r;
        } else {
            w_minus += r;
        }
    }
    let statistic = w_plus.min(w_minus);

    let exact = match mode {
        WilcoxonMode::Auto => n <= WILCOXON_EXACT_MAX,
        WilcoxonMode::Exact => true,
        WilcoxonMode::NormalApprox => false,
    };

    let p_value = if exact {
        exact_wilcoxon_p(&ranks, statistic)
    } else {
        normal_wilcoxon_p(&ranks, statistic)
    };

    Ok(WilcoxonResult {
        statistic,
        p_value,
        n_effective: n,
    })
}

/// Exact two-sided p: enumerate all 2^n sign assignments of the ranks; by
/// sign symmetry `p = min(1, 2 * P(W+ <= w_obs))`.
fn exact_wilcoxon_p(ranks: &[f64], w_obs: f64) -> f64 {
    let n = ranks.len();
    let total = 1u64 << n;
    let mut hits = 0u64;
    for mask in 0..total {
        let mut w = 0.0;
        for (i, r) in ranks.iter().enumerate() {
            if mask & (1 << i) != 0 {
                w += r;
            }
        }
        if w <= w_obs + 1e-9 {
            hits += 1;
        }
    }
    (2.0 * hits as f64 / total as f64).min(1.0)
}

/// Normal approximation with tie correction and a 0.5 continuity correction
/// toward the mean.
fn normal_wilcoxon_p(ranks: &[f64], w_obs: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    // tie correction: subtract sum(t^3 - t)/48 over tie groups
    let mut sorted = ranks.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if variance <= 0.0 {
        return 1.0;
    }
    let z = (w_obs - mean + 0.5) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * normal.cdf(z)).clamp(0.0, 1.0)
}

/// Mean within-row rank per method; rank 1 is best under the flag.
pub fn average_method_ranks(table: &ScoreTable, higher_is_better: bool) -> Vec<f64> {
    let k = table.methods.len();
    let n = table.rows.len() as f64;
    let mut sums = vec![0.0; k];
    for row in &table.rows {
        let oriented: Vec<f64> = if higher_is_better {
            row.iter().map(|v| -v).collect()
        } else {
            row.clone()
        };
        for (j, r) in average_ranks(&oriented).iter().enumerate() {
            sums[j] += r;
        }
    }
    sums.iter().map(|s| s / n).collect()
}

/// Critical-difference style summary: methods ordered by average rank with
/// cliques of mutually non-significant methods (Holm-corrected pairwise
/// Wilcoxon), gated on Friedman rejection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CdSummary {
    pub method_names: Vec<String>,
    pub friedman_statistic: f64,
    pub friedman_p: f64,
    pub alpha: f64,
    /// True when the Friedman test rejected and pairwise tests were run.
    pub significant: bool,
    pub average_ranks: Vec<f64>,
    /// Method indices sorted best (lowest average rank) first.
    pub order: Vec<usize>,
    /// Holm-adjusted pairwise p-values (symmetric, 1 on the diagonal).
    pub pairwise_p: Vec<Vec<f64>>,
    /// Cliques of method indices with no significant internal difference,
    /// each sorted by average rank; maximal intervals in rank order.
    pub cliques: Vec<Vec<usize>>,
}

/// Holm step-down adjustment; input (pair index, raw p), output adjusted p.
fn holm_adjust(raw: &[f64]) -> Vec<f64> {
    let m = raw.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| raw[i].partial_cmp(&raw[j]).unwrap());
    let mut adjusted = vec![0.0; m];
    let mut running_max = 0.0f64;
    for (rank, &idx) in order.iter().enumerate() {
        let scaled = ((m - rank) as f64 * raw[idx]).min(1.0);
        running_max = running_max.max(scaled);
        adjusted[idx] = running_max;
    }
    adjusted
}

pub fn cd_summary(
    table: &ScoreTable,
    alpha: f64,
    higher_is_better: bool,
) -> Result<CdSummary, StatsError> {
    let k = table.methods.len();
    let (friedman_statistic, friedman_p) = friedman(table)?;
    let avg = average_method_ranks(table, higher_is_better);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| avg[i].partial_cmp(&avg[j]).unwrap().then(i.cmp(&j)));

    let significant = friedman_p <= alpha;
    let mut pairwise_p = vec![vec![1.0; k]; k];
    if significant {
        let mut pairs = Vec::new();
        let mut raw = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                let r = wilcoxon_signed_rank(&table.column(i), &table.column(j))?;
                pairs.push((i, j));
                raw.push(r.p_value);
            }
        }
        let adjusted = holm_adjust(&raw);
        for ((i, j), p) in pairs.into_iter().zip(adjusted) {
            pairwise_p[i][j] = p;
            pairwise_p[j][i] = p;
        }
    }

    // cliques: maximal rank-order intervals whose pairs are all non-significant
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    if significant {
        let mut reach_prev = 0usize;
        for start in 0..k {
            let mut end = start;
            'extend: for candidate in (start + 1)..k {
                for inner in start..candidate {
                    if pairwise_p[order[inner]][order[candidate]] <= alpha {
                        break 'extend;
                    }
                }
                end = candidate;
            }
            if cliques.is_empty() || end > reach_prev {
                cliques.push(order[start..=end].to_vec());
                reach_prev = end;
            }
        }
    } else {
        cliques.push(order.clone());
    }

    Ok(CdSummary {
        method_names: table.methods.clone(),
        friedman_statistic,
        friedman_p,
        alpha,
        significant,
        average_ranks: avg,
        order,
        pairwise_p,
        cliques,
    })
}

impl CdSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serialises")
    }

    pub fn to_svg(&self) -> String {
        rank_diagram_svg(self)
    }
}

#[cfg(test)]
mod tests;
