//! Property tests for the metric, statistics and pipeline invariants.

use proptest::prelude::*;

use baex::bae::{attribute, AttributionMatrix, AttributionMethod, Configuration, NllCube};
use baex::metrics::{
    drift_coefficient, evaluate, g_sser, rank_desc, spearman, DEFAULT_ALPHA,
};
use baex::pipeline::{apply_scale, build_scenario, fit_scale, SensorCube};
use baex::stats::{friedman, ScoreTable};

fn attr_matrix(scores: Vec<f64>, cycles: usize, sensors: usize) -> AttributionMatrix {
    AttributionMatrix::new(
        scores,
        cycles,
        sensors,
        AttributionMethod::MeanNll,
        Configuration::Centralised,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_desc_invariant_under_positive_scaling(
        values in prop::collection::vec(0.0f64..1e3, 1..12),
        scale in 1e-3f64..1e3,
    ) {
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        prop_assert_eq!(rank_desc(&values).unwrap(), rank_desc(&scaled).unwrap());
    }

    #[test]
    fn spearman_invariant_under_monotone_transform(
        values in prop::collection::vec(0.0f64..10.0, 5..20),
        gain in 0.1f64..3.0,
        offset in -2.0f64..2.0,
    ) {
        let y: Vec<f64> = (0..values.len()).map(|n| n as f64).collect();
        let affine: Vec<f64> = values.iter().map(|v| gain * v + offset).collect();
        let expv: Vec<f64> = values.iter().map(|v| (0.3 * v).exp()).collect();
        let base = spearman(&values, &y).unwrap();
        for transformed in [affine, expv] {
            let t = spearman(&transformed, &y).unwrap();
            prop_assert!((base.rho - t.rho).abs() < 1e-9);
            prop_assert!((base.p_value - t.p_value).abs() < 1e-9);
        }
    }

    #[test]
    fn monotone_transform_preserves_drift_and_ranking_metrics(
        raw in prop::collection::vec(0.01f64..5.0, 24),
    ) {
        // 8 cycles x 3 sensors, shift = {0}
        let cycles = 8;
        let sensors = 3;
        let train = SensorCube::with_default_names(vec![0.5; 2 * sensors], 2, sensors, 1).unwrap();
        let test = SensorCube::with_default_names(vec![0.5; cycles * sensors], cycles, sensors, 1).unwrap();
        let scenario = build_scenario(&train, &test, &[0], 1).unwrap();

        let attr = attr_matrix(raw.clone(), cycles, sensors);
        // strictly increasing map applied to every score
        let transformed: Vec<f64> = raw.iter().map(|v| (2.0 * v).exp() + v).collect();
        let attr_t = attr_matrix(transformed, cycles, sensors);

        for sensor in 0..sensors {
            let a = drift_coefficient(&attr.column(sensor), scenario.degradation(), DEFAULT_ALPHA).unwrap();
            let b = drift_coefficient(&attr_t.column(sensor), scenario.degradation(), DEFAULT_ALPHA).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
        let (counts_a, score_a) = g_sser(&attr, &scenario).unwrap();
        let (counts_b, score_b) = g_sser(&attr_t, &scenario).unwrap();
        prop_assert_eq!(counts_a, counts_b);
        prop_assert!((score_a - score_b).abs() < 1e-12);
    }

    #[test]
    fn metric_reports_invariant_under_sensor_relabelling(
        raw in prop::collection::vec(0.01f64..5.0, 40),
    ) {
        // 10 cycles x 4 sensors; swap sensors 0 <-> 2 together with the gold labels
        let cycles = 10;
        let sensors = 4;
        let train = SensorCube::with_default_names(vec![0.5; 2 * sensors], 2, sensors, 1).unwrap();
        let test = SensorCube::with_default_names(vec![0.5; cycles * sensors], cycles, sensors, 1).unwrap();

        let scenario = build_scenario(&train, &test, &[0, 1], 1).unwrap();
        let permuted_scenario = build_scenario(&train, &test, &[2, 1], 1).unwrap();

        let attr = attr_matrix(raw.clone(), cycles, sensors);
        let mut permuted = raw.clone();
        for n in 0..cycles {
            permuted.swap(n * sensors, n * sensors + 2);
        }
        let attr_p = attr_matrix(permuted, cycles, sensors);

        let a = evaluate(&attr, &scenario, DEFAULT_ALPHA, 0.5, 0.5).unwrap();
        let b = evaluate(&attr_p, &permuted_scenario, DEFAULT_ALPHA, 0.5, 0.5).unwrap();
        prop_assert!((a.g_sdc.unwrap() - b.g_sdc.unwrap()).abs() < 1e-12);
        prop_assert!((a.g_sser.unwrap() - b.g_sser.unwrap()).abs() < 1e-12);
        prop_assert!((a.seqi.unwrap() - b.seqi.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mean_nll_attribution_decomposes_exactly(
        values in prop::collection::vec(0.0f64..4.0, 2 * 3 * 2 * 5),
    ) {
        // members=2, cycles=3, sensors=2, features=5
        let cube = NllCube::new(values, 2, 3, 2, 5).unwrap();
        let attr = attribute(&cube, AttributionMethod::MeanNll, Configuration::Centralised).unwrap();
        for cycle in 0..3 {
            let sum_k: f64 = (0..2).map(|k| attr.get(cycle, k)).sum();
            let mean_total = (0..2)
                .map(|m| cube.member_cycle_total(m, cycle))
                .sum::<f64>()
                / 2.0;
            let scale = mean_total.abs().max(1.0);
            prop_assert!((sum_k - mean_total).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn scaling_is_idempotent_on_train(
        raw in prop::collection::vec(-100.0f64..100.0, 6 * 2 * 3),
    ) {
        let cube = SensorCube::with_default_names(raw, 6, 2, 3).unwrap();
        let state = fit_scale(&cube);
        let scaled = apply_scale(&state, &cube).unwrap();
        for k in 0..2 {
            for d in 0..3 {
                let col: Vec<f64> = (0..6).map(|n| scaled.get(n, k, d)).collect();
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let raw_col: Vec<f64> = (0..6).map(|n| cube.get(n, k, d)).collect();
                let degenerate = raw_col.iter().all(|v| *v == raw_col[0]);
                if degenerate {
                    prop_assert!(col.iter().all(|v| *v == 0.5));
                } else {
                    prop_assert!(lo.abs() < 1e-12);
                    prop_assert!((hi - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn friedman_invariant_under_row_monotone_transforms(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 4), 3..10),
    ) {
        let methods: Vec<String> = (0..4).map(|j| format!("m{j}")).collect();
        let labels: Vec<String> = (0..rows.len()).map(|i| format!("r{i}")).collect();
        let t1 = ScoreTable::new(methods.clone(), labels.clone(), rows.clone()).unwrap();
        // a different strictly increasing transform per row
        let transformed: Vec<Vec<f64>> = rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let gain = 1.0 + i as f64;
                row.iter().map(|v| (gain * v).exp()).collect()
            })
            .collect();
        let t2 = ScoreTable::new(methods, labels, transformed).unwrap();
        let (s1, p1) = friedman(&t1).unwrap();
        let (s2, p2) = friedman(&t2).unwrap();
        prop_assert!((s1 - s2).abs() < 1e-9);
        prop_assert!((p1 - p2).abs() < 1e-9);
    }

    #[test]
    fn bootstrap_rows_are_training_rows(
        seed in 0u64..1000,
    ) {
        let train_data: Vec<f64> = (0..5 * 2 * 3).map(|i| (i as f64 * 0.77).sin()).collect();
        let test_data: Vec<f64> = (0..7 * 2 * 3).map(|i| (i as f64 * 0.31).cos()).collect();
        let train = SensorCube::with_default_names(train_data, 5, 2, 3).unwrap();
        let test = SensorCube::with_default_names(test_data, 7, 2, 3).unwrap();
        let scenario = build_scenario(&train, &test, &[1], seed).unwrap();
        for n in 0..7 {
            let row = scenario.test_cube().row(n, 0);
            prop_assert!((0..5).any(|m| train.row(m, 0) == row));
            // shifting sensor keeps its natural rows
            prop_assert_eq!(scenario.test_cube().row(n, 1), test.row(n, 1));
        }
    }
}
