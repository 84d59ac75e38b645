//! Report emission: metric tables (CSV), attribution-curve plots,
//! rank summaries and the complementary empirical distribution of the
//! group-mean Pearson correlation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use baex::stats::{cd_summary, ScoreTable};

use crate::experiment::RunRecord;
use crate::plot::{line_plot, Series, PALETTE};

pub const METRICS: [&str; 5] = ["seqi", "g_sdc", "g_sser", "pearson", "mcc"];

/// Threshold marked on the Pearson CEDF plot: correlations above it count as
/// high (misleading-explanation territory).
pub const HIGH_CORRELATION: f64 = 0.8;

fn metric_of(record: &RunRecord, metric: &str) -> Option<f64> {
    match metric {
        "seqi" => record.report.seqi,
        "g_sdc" => record.report.g_sdc,
        "g_sser" => record.report.g_sser,
        "pearson" => record.report.group_pearson,
        "mcc" => record.report.mcc_abs,
        _ => None,
    }
}

/// Column key: configuration + method, e.g. `coalitional/mean-nll`.
fn column_of(record: &RunRecord) -> String {
    format!("{}/{}", record.configuration, record.method)
}

/// Row key: everything that identifies one experimental run.
fn row_of(record: &RunRecord) -> (String, String, String, usize, u64) {
    (
        record.dataset.clone(),
        record.scenario_id.clone(),
        format!("{}", record.capacity),
        record.depth,
        record.root_seed,
    )
}

type Grid = BTreeMap<(String, String, String, usize, u64), BTreeMap<String, f64>>;

fn collect_grid(records: &[RunRecord], metric: &str) -> (Vec<String>, Grid) {
    let mut columns: Vec<String> = records.iter().map(column_of).collect();
    columns.sort();
    columns.dedup();
    let mut grid: Grid = BTreeMap::new();
    for record in records {
        if let Some(value) = metric_of(record, metric) {
            grid.entry(row_of(record))
                .or_default()
                .insert(column_of(record), value);
        }
    }
    (columns, grid)
}

/// Lower |r| is better for the correlation diagnostic; higher is better for
/// the quality scores.
fn higher_is_better(metric: &str) -> bool {
    metric != "pearson"
}

fn best_column(columns: &[String], cells: &BTreeMap<String, f64>, metric: &str) -> Option<String> {
    let mut best: Option<(&String, f64)> = None;
    for column in columns {
        let Some(value) = cells.get(column) else {
            continue;
        };
        let key = if higher_is_better(metric) {
            *value
        } else {
            -value.abs()
        };
        match best {
            Some((_, best_key)) if best_key >= key => {}
            _ => best = Some((column, key)),
        }
    }
    best.map(|(c, _)| c.clone())
}

fn metric_table_csv(records: &[RunRecord], metric: &str) -> String {
    let (columns, grid) = collect_grid(records, metric);
    let mut out = String::from("dataset,scenario,capacity,depth,seed");
    for column in &columns {
        let _ = write!(out, ",{column}");
    }
    out.push_str(",best\n");
    for ((dataset, scenario, capacity, depth, seed), cells) in &grid {
        let _ = write!(out, "{dataset},{scenario},{capacity},{depth},{seed}");
        for column in &columns {
            match cells.get(column) {
                Some(v) => {
                    let _ = write!(out, ",{v:.6}");
                }
                None => out.push(','),
            }
        }
        let best = best_column(&columns, cells, metric).unwrap_or_default();
        let _ = writeln!(out, ",{best}");
    }
    out
}

fn curves_svg(record: &RunRecord) -> Option<String> {
    let curves = record.curves.as_ref()?;
    let as_points = |values: &[f64]| -> Vec<(f64, f64)> {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| (i as f64, *v))
            .collect()
    };
    let series = [
        Series {
            label: format!("shifting {:?}", record.shift_set),
            points: as_points(&curves.shift_mean),
            color: PALETTE[1].into(),
            dashed: false,
        },
        Series {
            label: format!("non-shifting {:?}", record.noshift_set),
            points: as_points(&curves.noshift_mean),
            color: PALETTE[0].into(),
            dashed: true,
        },
    ];
    let annotation = record
        .report
        .group_pearson
        .map(|r| format!("Pearson r = {r:.3}"));
    Some(line_plot(
        &format!(
            "{} {} {} ({})",
            record.dataset, record.configuration, record.method, record.scenario_id
        ),
        "test cycle",
        "normalised attribution",
        &series,
        None,
        annotation.as_deref(),
    ))
}

/// Complementary empirical distribution of |group Pearson r| per column,
/// with the high-correlation marker.
fn pearson_cedf_svg(records: &[RunRecord]) -> Option<String> {
    let mut by_column: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for record in records {
        if let Some(r) = record.report.group_pearson {
            by_column.entry(column_of(record)).or_default().push(r.abs());
        }
    }
    if by_column.is_empty() {
        return None;
    }
    let mut series = Vec::new();
    for (i, (column, mut values)) in by_column.into_iter().enumerate() {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = values.len() as f64;
        // P(|r| >= x) evaluated just left and right of each sample
        let mut points = vec![(0.0, 1.0)];
        for (idx, v) in values.iter().enumerate() {
            points.push((*v, 1.0 - idx as f64 / n));
            points.push((*v, 1.0 - (idx + 1) as f64 / n));
        }
        points.push((1.0, 0.0));
        series.push(Series {
            label: column.clone(),
            points,
            color: PALETTE[i % PALETTE.len()].into(),
            dashed: column.starts_with("coalitional"),
        });
    }
    Some(line_plot(
        "complementary empirical distribution of |group Pearson r|",
        "|r|",
        "P(|r| >= x)",
        &series,
        Some(HIGH_CORRELATION),
        None,
    ))
}

/// Rank summary over complete rows of one metric; absent-metric rows are
/// dropped row-wise.
fn rank_table(records: &[RunRecord], metric: &str) -> Option<ScoreTable> {
    let (columns, grid) = collect_grid(records, metric);
    if columns.len() < 2 {
        return None;
    }
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for ((dataset, scenario, capacity, depth, seed), cells) in &grid {
        let values: Vec<f64> = columns
            .iter()
            .filter_map(|c| {
                cells.get(c).map(|v| {
                    if higher_is_better(metric) {
                        *v
                    } else {
                        -v.abs()
                    }
                })
            })
            .collect();
        if values.len() == columns.len() {
            labels.push(format!("{dataset}|{scenario}|c{capacity}|d{depth}|s{seed}"));
            rows.push(values);
        }
    }
    if rows.len() < 2 {
        return None;
    }
    ScoreTable::new(columns, labels, rows).ok()
}

/// Emits everything into `out`: per-metric tables, per-record curve plots,
/// rank summaries, and the Pearson CEDF. Returns the written paths.
pub fn emit_report(records: &[RunRecord], out: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        bail!("no records to report on");
    }
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    std::fs::create_dir_all(out.join("curves"))?;
    let mut written = Vec::new();
    let mut write = |path: PathBuf, content: String| -> Result<()> {
        std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(())
    };

    for metric in METRICS {
        write(
            out.join(format!("table_{metric}.csv")),
            metric_table_csv(records, metric),
        )?;
    }

    for record in records {
        if let Some(svg) = curves_svg(record) {
            let stem = record.file_name().replace(".json", ".svg");
            write(out.join("curves").join(stem), svg)?;
        }
    }

    for metric in ["seqi", "g_sdc", "g_sser"] {
        if let Some(table) = rank_table(records, metric) {
            let summary = cd_summary(&table, 0.05, true)?;
            write(out.join(format!("rank_{metric}.json")), summary.to_json())?;
            write(out.join(format!("rank_{metric}.svg")), summary.to_svg())?;
        }
    }

    if let Some(svg) = pearson_cedf_svg(records) {
        write(out.join("pearson_cedf.svg"), svg)?;
    }
    Ok(written)
}

/// Cross-directory comparison on one metric: rows from every records dir,
/// columns = configuration/method, critical-difference summary as output.
pub fn compare_runs(dirs: &[PathBuf], metric: &str, out: &Path) -> Result<Vec<PathBuf>> {
    if !METRICS.contains(&metric) {
        bail!("unknown metric '{metric}'; pick one of {METRICS:?}");
    }
    let mut all = Vec::new();
    for dir in dirs {
        let records_dir = if dir.join("records").is_dir() {
            dir.join("records")
        } else {
            dir.clone()
        };
        let mut records = crate::experiment::load_records(&records_dir)?;
        let tag = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        // prefix the dataset with the directory tag so rows stay distinct
        for r in &mut records {
            r.dataset = format!("{tag}:{}", r.dataset);
        }
        all.append(&mut records);
    }
    if all.is_empty() {
        bail!("no records found in the given directories");
    }

    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let table = rank_table(&all, metric)
        .context("not enough complete rows for a comparison (need >= 2 rows and >= 2 methods)")?;
    let summary = cd_summary(&table, 0.05, true)?;
    let json_path = out.join(format!("compare_{metric}.json"));
    std::fs::write(&json_path, summary.to_json())?;
    written.push(json_path);
    let svg_path = out.join(format!("compare_{metric}.svg"));
    std::fs::write(&svg_path, summary.to_svg())?;
    written.push(svg_path);
    let csv_path = out.join(format!("compare_{metric}.csv"));
    std::fs::write(&csv_path, metric_table_csv(&all, metric))?;
    written.push(csv_path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{GroupCurves, RunRecord, Timings, SCHEMA_VERSION};
    use baex::metrics::EvaluationReport;

    fn record(configuration: &str, method: &str, scenario: &str, seqi: f64, r: f64) -> RunRecord {
        RunRecord {
            schema_version: SCHEMA_VERSION,
            config_digest: "d".into(),
            dataset: "synth".into(),
            configuration: configuration.into(),
            method: method.into(),
            scenario_id: scenario.into(),
            shift_set: vec![0],
            noshift_set: vec![1],
            capacity: 1.0,
            depth: 1,
            root_seed: 0,
            cell_seed: 1,
            scenario_seed: 2,
            checkpoint_digest: "c".into(),
            report: EvaluationReport {
                configuration: configuration.into(),
                method: method.into(),
                scenario: scenario.into(),
                per_sensor_rho: vec![1.0, 0.0],
                g_sdc: Some(seqi),
                g_sser: Some(seqi),
                seqi: Some(seqi),
                mcc_signed: Some(0.5),
                mcc_abs: Some(0.5),
                group_pearson: Some(r),
                confusion: None,
            },
            curves: Some(GroupCurves {
                shift_mean: vec![1.0, 2.0, 3.0],
                noshift_mean: vec![1.0, 1.1, 0.9],
            }),
            timings: Timings::default(),
        }
    }

    #[test]
    fn one_record_yields_table_row_and_curve_plot() {
        let records = vec![record("centralised", "mean-nll", "shift-0", 0.9, 0.5)];
        let dir = tempfile::tempdir().unwrap();
        let written = emit_report(&records, dir.path()).unwrap();
        let table = std::fs::read_to_string(dir.path().join("table_seqi.csv")).unwrap();
        assert_eq!(table.lines().count(), 2);
        assert!(table.contains("0.900000"));
        assert!(written.iter().any(|p| p.to_string_lossy().contains("curves/")));
    }

    #[test]
    fn two_methods_produce_rank_summary() {
        let mut records = Vec::new();
        for scenario in ["shift-0", "shift-1", "shift-2"] {
            records.push(record("centralised", "mean-nll", scenario, 0.6, 0.9));
            records.push(record("coalitional", "mean-nll", scenario, 0.9, 0.2));
        }
        let dir = tempfile::tempdir().unwrap();
        emit_report(&records, dir.path()).unwrap();
        let json = std::fs::read_to_string(dir.path().join("rank_seqi.json")).unwrap();
        assert!(json.contains("coalitional/mean-nll"));
        assert!(dir.path().join("pearson_cedf.svg").exists());
    }

    #[test]
    fn cedf_fraction_above_marker() {
        // |r| values {0.9, 0.7, 0.85}: 2 of 3 lie above 0.8
        let records = vec![
            record("centralised", "mean-nll", "shift-0", 0.5, 0.9),
            record("centralised", "mean-nll", "shift-1", 0.5, 0.7),
            record("centralised", "mean-nll", "shift-2", 0.5, 0.85),
        ];
        let svg = pearson_cedf_svg(&records).unwrap();
        assert!(svg.contains("polyline"));
        // the step function passes through P = 2/3 after 0.7
        let by: Vec<f64> = records
            .iter()
            .filter_map(|r| r.report.group_pearson)
            .filter(|r| r.abs() >= HIGH_CORRELATION)
            .collect();
        assert_eq!(by.len(), 2);
    }

    #[test]
    fn best_column_handles_pearson_direction() {
        let records = vec![
            record("centralised", "mean-nll", "shift-0", 0.5, 0.9),
            record("coalitional", "mean-nll", "shift-0", 0.8, 0.1),
        ];
        let table = metric_table_csv(&records, "pearson");
        let data_line = table.lines().nth(1).unwrap();
        assert!(
            data_line.ends_with("coalitional/mean-nll"),
            "lower |r| should win: {data_line}"
        );
        let table = metric_table_csv(&records, "seqi");
        assert!(table.lines().nth(1).unwrap().ends_with("coalitional/mean-nll"));
    }
}
