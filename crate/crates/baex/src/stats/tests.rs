use super::*;

fn table(rows: Vec<Vec<f64>>) -> ScoreTable {
    let k = rows[0].len();
    let methods = (0..k).map(|j| format!("m{j}")).collect();
    let labels = (0..rows.len()).map(|i| format!("run{i}")).collect();
    ScoreTable::new(methods, labels, rows).unwrap()
}

#[test]
fn friedman_identical_rows_gives_zero_statistic() {
    let t = table(vec![vec![0.5, 0.5, 0.5]; 6]);
    let (stat, p) = friedman(&t).unwrap();
    assert!(stat.abs() < 1e-12);
    assert!((p - 1.0).abs() < 1e-12);
}

#[test]
fn friedman_two_methods_total_dominance_equals_n() {
    // At k = 2 with one method always better, the statistic reduces to n.
    for n in [4usize, 9, 30] {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![1.0 + i as f64, 0.5]).collect();
        let (stat, _) = friedman(&table(rows)).unwrap();
        assert!(
            (stat - n as f64).abs() < 1e-9,
            "statistic {stat} should equal n = {n}"
        );
    }
}

#[test]
fn friedman_matches_explicit_rank_sum_recount() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<Vec<f64>> = (0..10)
        .map(|_| (0..3).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let t = table(rows.clone());
    let (stat, _) = friedman(&t).unwrap();

    // independent recount via explicit rank sums
    let n = rows.len() as f64;
    let k = 3f64;
    let mut sums = [0.0; 3];
    for row in &rows {
        let ranks = crate::metrics::average_ranks(row);
        for (j, r) in ranks.iter().enumerate() {
            sums[j] += r;
        }
    }
    let expected =
        12.0 / (n * k * (k + 1.0)) * sums.iter().map(|s| s * s).sum::<f64>() - 3.0 * n * (k + 1.0);
    assert!((stat - expected).abs() < 1e-9, "{stat} vs {expected}");
}

#[test]
fn friedman_rejects_degenerate_tables() {
    let t = ScoreTable::new(
        vec!["only".into()],
        vec!["r".into()],
        vec![vec![1.0]],
    );
    assert!(t.is_err() || friedman(&t.unwrap()).is_err());
    let one_row = table(vec![vec![1.0, 2.0]]);
    assert!(friedman(&one_row).is_err());
}

#[test]
fn wilcoxon_identical_vectors() {
    let a = [1.0, 2.0, 3.0];
    let r = wilcoxon_signed_rank(&a, &a).unwrap();
    assert_eq!(r.statistic, 0.0);
    assert_eq!(r.p_value, 1.0);
    assert_eq!(r.n_effective, 0);
}

#[test]
fn wilcoxon_five_positive_differences_exact_p() {
    // n = 5, all differences positive: W = 0, exact two-sided p = 2/32.
    let a = [2.0, 3.0, 4.0, 5.0, 6.0];
    let b = [1.0, 1.0, 1.0, 1.0, 1.0];
    let r = wilcoxon_signed_rank(&a, &b).unwrap();
    assert_eq!(r.statistic, 0.0);
    assert!((r.p_value - 0.0625).abs() < 1e-12);
}

#[test]
fn wilcoxon_exact_is_symmetric_in_sign() {
    let a = [1.0, 5.0, 2.0, 8.0, 3.0, 9.0];
    let b = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
    let r1 = wilcoxon_signed_rank(&a, &b).unwrap();
    let r2 = wilcoxon_signed_rank(&b, &a).unwrap();
    assert_eq!(r1.statistic, r2.statistic);
    assert_eq!(r1.p_value, r2.p_value);
}

#[test]
fn wilcoxon_normal_approx_close_to_exact_at_crossover() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..300 {
        let a: Vec<f64> = (0..12).map(|_| rng.gen::<f64>()).collect();
        let b: Vec<f64> = (0..12).map(|_| rng.gen::<f64>()).collect();
        let exact = wilcoxon_signed_rank_with(&a, &b, WilcoxonMode::Exact).unwrap();
        let approx = wilcoxon_signed_rank_with(&a, &b, WilcoxonMode::NormalApprox).unwrap();
        worst = worst.max((exact.p_value - approx.p_value).abs());
    }
    assert!(worst <= 0.03, "worst exact-vs-normal gap {worst}");
}

#[test]
fn average_method_ranks_single_row() {
    let t = table(vec![vec![0.9, 0.5, 0.7]]);
    assert_eq!(average_method_ranks(&t, true), vec![1.0, 3.0, 2.0]);
    assert_eq!(average_method_ranks(&t, false), vec![3.0, 1.0, 2.0]);
}

#[test]
fn average_method_ranks_mean_of_permuted_rows() {
    // per-row ranks are [1,3,2] and [3,1,2]; the mean rank is their average
    let t = table(vec![vec![0.9, 0.5, 0.7], vec![0.5, 0.9, 0.7]]);
    assert_eq!(average_method_ranks(&t, true), vec![2.0, 2.0, 2.0]);
}

#[test]
fn average_method_ranks_ties_share_rank() {
    let t = table(vec![vec![0.5, 0.5, 0.1], vec![0.7, 0.7, 0.3]]);
    let ranks = average_method_ranks(&t, true);
    assert_eq!(ranks[0], ranks[1]);
    assert_eq!(ranks[0], 1.5);
    assert_eq!(ranks[2], 3.0);
}

#[test]
fn cd_summary_all_identical_single_clique() {
    let t = table(vec![vec![0.5, 0.5, 0.5]; 8]);
    let s = cd_summary(&t, 0.05, true).unwrap();
    assert!(!s.significant);
    assert_eq!(s.cliques.len(), 1);
    assert_eq!(s.cliques[0].len(), 3);
}

#[test]
fn cd_summary_dominating_method_separates() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<Vec<f64>> = (0..30)
        .map(|_| {
            let noise: f64 = rng.gen();
            vec![0.9 + 0.05 * noise, 0.3 * rng.gen::<f64>()]
        })
        .collect();
    let t = table(rows);
    let s = cd_summary(&t, 0.05, true).unwrap();
    assert!(s.significant);
    // both methods end up in singleton cliques
    assert!(s.cliques.iter().all(|c| c.len() == 1));
    assert_eq!(s.order[0], 0, "method 0 should rank best");
    assert!(s.pairwise_p[0][1] <= 0.05);
    // symmetry of the pair tests
    assert_eq!(s.pairwise_p[0][1], s.pairwise_p[1][0]);
}

#[test]
fn cd_summary_is_deterministic() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let rows: Vec<Vec<f64>> = (0..12)
        .map(|_| (0..4).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let t = table(rows);
    let a = cd_summary(&t, 0.05, true).unwrap();
    let b = cd_summary(&t, 0.05, true).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn holm_adjustment_is_monotone_and_bounded() {
    let raw = [0.01, 0.04, 0.03, 0.5];
    let adj = holm_adjust(&raw);
    for (r, a) in raw.iter().zip(&adj) {
        assert!(a >= r);
        assert!(*a <= 1.0);
    }
    // smallest raw p gets the largest multiplier
    assert!((adj[0] - 0.04).abs() < 1e-12);
}

#[test]
fn svg_diagram_mentions_methods() {
    let t = table(vec![vec![0.9, 0.5], vec![0.8, 0.4], vec![0.7, 0.3]]);
    let s = cd_summary(&t, 0.05, true).unwrap();
    let svg = s.to_svg();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("m0"));
    assert!(svg.contains("m1"));
}
