use offpolicy_betting::bandit::{LoggedInteraction, Policy};
use offpolicy_betting::learning::{objective_gradient, objective_value, Family, Objective, ScoreFunction};
use proptest::prelude::*;

fn log_strategy() -> impl Strategy<Value = Vec<LoggedInteraction>> {
    prop::collection::vec(
        (prop::collection::vec(-2.0f64..2.0, 2), 0usize..3, 0.0f64..=1.0, 0.05f64..=1.0),
        1..40,
    )
    .prop_map(|recs| {
        recs.into_iter()
            .map(|(x, a, r, p)| LoggedInteraction::new(x, a, r, p).unwrap())
            .collect()
    })
}

fn weights() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.5f64..1.5, 2), 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn freezing_below_clipping_below_ls(x in 0.0f64..1e4) {
        let v = |s: ScoreFunction| s.eval(x).unwrap();
        prop_assert!(v(ScoreFunction::Freezing) <= v(ScoreFunction::Clipping));
        prop_assert!(v(ScoreFunction::Clipping) <= v(ScoreFunction::Ls));
        prop_assert_eq!(v(ScoreFunction::Ls), x.ln_1p());
    }

    #[test]
    fn score_functions_bounded_by_log1p(x in 0.0f64..1e6) {
        for s in ScoreFunction::ALL {
            let v = s.eval(x).unwrap();
            prop_assert!(v >= 0.0 && v <= x.ln_1p(), "{}: {v}", s.name());
        }
    }

    #[test]
    fn objectives_ignore_log_order(log in log_strategy(), w in weights(), beta in 0.01f64..1.0, shift in 0usize..40) {
        let behavior = Policy::fixed(vec![0.5, 0.3, 0.2]).unwrap();
        let pi = Policy::linear_softmax(w, 1.0).unwrap();
        let mut rotated = log.clone();
        rotated.rotate_left(shift % log.len());
        rotated.reverse();
        for family in Family::ALL {
            let obj = Objective::new(family, if family.uses_beta() { beta } else { 0.0 }).unwrap();
            let a = objective_value(&obj, &log, &pi, Some(&behavior)).unwrap();
            let b = objective_value(&obj, &rotated, &pi, Some(&behavior)).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{family}: {a} vs {b}");
            let ga = objective_gradient(&obj, &log, &pi, Some(&behavior)).unwrap();
            let gb = objective_gradient(&obj, &rotated, &pi, Some(&behavior)).unwrap();
            for (x, y) in ga.iter().flatten().zip(gb.iter().flatten()) {
                prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn score_objective_below_scaled_iw(log in log_strategy(), w in weights(), beta in 0.01f64..1.0) {
        // φ(β r̃) ≤ ln(1 + β r̃) ≤ β r̃
        let pi = Policy::linear_softmax(w, 1.0).unwrap();
        let iw = objective_value(&Objective::new(Family::Iw, 0.0).unwrap(), &log, &pi, None).unwrap();
        for s in ScoreFunction::ALL {
            let v = objective_value(&Objective::score(s, beta).unwrap(), &log, &pi, None).unwrap();
            prop_assert!(v <= beta * iw * (1.0 + 1e-12) + 1e-15);
        }
    }
}
