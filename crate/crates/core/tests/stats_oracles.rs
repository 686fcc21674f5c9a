mod common;

use common::{check_balacc_exact, check_ks_exact, max_t_quadrature_gap, t_two_sided_by_quadrature};
use noisecascade::diagnostics::{histogram_overlap, ks_two_sample};
use noisecascade::rng;
use noisecascade::stats::{cohens_d_paired, paired_t_test, student_t_two_sided};
use proptest::prelude::*;
use rand::Rng as _;

#[test]
fn ks_matches_brute_force_exactly() {
    check_ks_exact(100).unwrap();
}

#[test]
fn t_tail_matches_quadrature() {
    assert!(max_t_quadrature_gap() < 1e-6);
    for df in 2..=10u32 {
        for &t in &[0.0, 0.1, 3.0, 4.5, 8.0, -2.5] {
            let p = student_t_two_sided(t, df as f64);
            assert!((p - t_two_sided_by_quadrature(t, df)).abs() < 1e-6, "df {df} t {t}");
        }
    }
}

#[test]
fn paired_test_p_matches_quadrature() {
    let mut r = rng::stream(12, 0);
    for n in 3..=11usize {
        let a: Vec<f64> = (0..n).map(|_| r.random_range(0.5..0.9)).collect();
        let b: Vec<f64> = a.iter().map(|x| x - r.random_range(-0.05..0.1)).collect();
        let t = paired_t_test(&a, &b).unwrap();
        assert_eq!(t.df, n - 1);
        let q = t_two_sided_by_quadrature(t.t, t.df as u32);
        assert!((t.p - q).abs() < 1e-6, "n {n}: {} vs {q}", t.p);
    }
}

#[test]
fn known_t_critical_values() {
    // two-sided 5% critical values from standard tables
    for (df, crit) in [(2.0, 4.302653), (5.0, 2.570582), (10.0, 2.228139)] {
        assert!((student_t_two_sided(crit, df) - 0.05).abs() < 1e-6);
    }
}

#[test]
fn identical_methods_give_p_one() {
    let a = [0.7, 0.72, 0.69, 0.71, 0.7];
    let t = paired_t_test(&a, &a).unwrap();
    assert_eq!(t.p, 1.0);
    assert_eq!(cohens_d_paired(&a, &a).unwrap(), 0.0);
}

#[test]
fn balanced_accuracy_is_mean_recall() {
    check_balacc_exact(100).unwrap();
}

proptest! {
    #[test]
    fn ks_p_value_in_unit_interval(a in prop::collection::vec(-5.0f64..5.0, 2..60),
                                   b in prop::collection::vec(-5.0f64..5.0, 2..60)) {
        let r = ks_two_sample(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.p_value));
        prop_assert!((0.0..=1.0).contains(&r.statistic));
    }

    #[test]
    fn overlap_of_sample_with_itself_is_one(a in prop::collection::vec(-5.0f64..5.0, 1..60)) {
        prop_assert!((histogram_overlap(&a, &a, 50).unwrap() - 1.0).abs() < 1e-12);
    }
}
