//! Paired t-test against values from `scipy.stats.ttest_1samp`.

use offpolicy_betting::experiments::paired_t_test;

#[test]
fn matches_reference_values() {
    let cases: [(&[f64], f64, f64); 3] = [
        (&[0.1, -0.2, 0.35, 0.05, 0.4], 1.2860825940889509, 0.2678111370808302),
        (&[1.2, 0.8, 1.1, 0.95, 1.3, 1.05, 0.7], 12.567519991897218, 1.5533916869383058e-05),
        (
            &[-0.01, 0.02, -0.03, 0.015, -0.005, 0.0, -0.02, 0.01, -0.015, 0.025],
            -0.17349447958987196,
            0.8661022007175928,
        ),
    ];
    for (d, t_ref, p_ref) in cases {
        let (t, p) = paired_t_test(d).unwrap();
        assert!((t - t_ref).abs() <= 1e-10 * t_ref.abs(), "t {t} vs {t_ref}");
        assert!((p - p_ref).abs() <= 1e-10 * p_ref.max(1e-6), "p {p} vs {p_ref}");
    }
}

#[test]
fn degenerate_inputs() {
    assert_eq!(paired_t_test(&[0.3]), None);
    assert_eq!(paired_t_test(&[0.0, 0.0, 0.0]), Some((0.0, 1.0)));
    let (t, p) = paired_t_test(&[0.2, 0.2]).unwrap();
    assert!(t.is_infinite() && p == 0.0);
}
