use proptest::prelude::*;
use wrongway_core::risk_measures::*;
use wrongway_testkit::cvar_by_quantile_integral;

fn four() -> DiscreteDistribution {
    DiscreteDistribution::uniform(vec![1.0, 2.0, 3.0, 4.0]).unwrap()
}

fn quantile_integral(d: &DiscreteDistribution, alpha: f64) -> f64 {
    cvar_by_quantile_integral(d.outcomes(), d.probs(), alpha)
}

fn law() -> impl Strategy<Value = DiscreteDistribution> {
    (1usize..=50).prop_flat_map(|j| {
        (prop::collection::vec(-1e3f64..1e3, j), prop::collection::vec(0.0f64..1.0, j), prop::collection::vec(any::<bool>(), j)).prop_map(|(mut x, w, tie)| {
            // Force some ties so atom splitting is exercised.
            for i in 1..x.len() {
                if tie[i] {
                    x[i] = x[i - 1];
                }
            }
            let w: Vec<f64> = w.iter().map(|v| v + 1e-3).collect();
            DiscreteDistribution::from_weights(x, &w).unwrap()
        })
    })
}

#[test]
fn var_examples() {
    assert_eq!(var(&four(), 0.75), 3.0);
    assert_eq!(var(&DiscreteDistribution::point_mass(7.0), 0.42), 7.0);
    assert_eq!(var(&four(), 0.01), 1.0);
}

#[test]
fn cvar_examples() {
    assert_eq!(cvar(&four(), 0.75), 4.0);
    assert_eq!(cvar(&four(), 0.5), 3.5);
    assert_eq!(quantile_integral(&four(), 0.75), 4.0);
    let d = DiscreteDistribution::new(vec![2.0, -1.0, 8.0], vec![0.2, 0.5, 0.3]).unwrap();
    assert!((cvar(&d, 1e-12) - d.mean()).abs() <= 1e-10);
}

#[test]
fn tilting_examples() {
    let d = DiscreteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
    let (v, g) = cvar_by_tilting(&d, 0.5);
    assert_eq!((v, g), (1.0, vec![0.0, 1.0]));
    let d = DiscreteDistribution::new(vec![3.0, -1.0, 5.0], vec![0.3, 0.3, 0.4]).unwrap();
    let (v, g) = cvar_by_tilting(&d, 1e-15);
    for (gi, pi) in g.iter().zip(d.probs()) {
        assert!((gi - pi).abs() <= 1e-14);
    }
    assert!((v - d.mean()).abs() <= 1e-12);
    for alpha in [0.1, 0.5, 0.99] {
        assert_eq!(cvar_by_tilting(&DiscreteDistribution::point_mass(-2.5), alpha).0, -2.5);
    }
}

#[test]
fn economic_capital_examples() {
    let pm = DiscreteDistribution::point_mass(3.0);
    assert_eq!(economic_capital(&pm, 0.9, EcMode::CvarMinusEl), 0.0);
    assert_eq!(economic_capital(&pm, 0.9, EcMode::VarMinusEl), 0.0);
    assert_eq!(economic_capital(&four(), 0.75, EcMode::CvarMinusEl), 1.5);
    assert_eq!(economic_capital(&four(), 0.75, EcMode::VarMinusEl), 0.5);
    assert_eq!(economic_capital(&four(), 0.3, EcMode::Cvar), cvar(&four(), 0.3));
    assert_eq!(economic_capital(&four(), 0.3, EcMode::Var), var(&four(), 0.3));
}

#[test]
fn alpha_multiplier_examples() {
    assert_eq!(alpha_multiplier(5.0, 5.0).unwrap(), 1.0);
    assert!((alpha_multiplier(2.8, 2.0).unwrap() - 1.4).abs() <= 1e-15);
    assert!(alpha_multiplier(1.0, 0.0).is_err());
    assert!(alpha_multiplier(1.0, -1.0).is_err());
    assert_eq!(ALPHA_FLOORS, [1.2, 1.4]);
}

#[test]
fn distribution_contract() {
    assert!(DiscreteDistribution::new(vec![1.0], vec![0.9]).is_err());
    assert!(DiscreteDistribution::new(vec![1.0, 2.0], vec![1.1, -0.1]).is_err());
    assert!(DiscreteDistribution::new(vec![], vec![]).is_err());
    assert!(DiscreteDistribution::new(vec![f64::NAN], vec![1.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tilting_matches_quantile_average(d in law(), alpha in 0.001f64..0.999) {
        let c = cvar(&d, alpha);
        let (t, g) = cvar_by_tilting(&d, alpha);
        let scale = d.outcomes().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tol = 1e-13 * (1.0 + scale);
        prop_assert!((c - t).abs() <= tol, "cvar {} tilting {}", c, t);
        let q = quantile_integral(&d, alpha);
        prop_assert!((c - q).abs() <= 16.0 * f64::EPSILON * (1.0 + scale) / (1.0 - alpha), "cvar {} oracle {}", c, q);
        let cap = 1.0 / (1.0 - alpha);
        for (gi, pi) in g.iter().zip(d.probs()) {
            prop_assert!(*gi >= 0.0 && *gi <= pi * cap * (1.0 + 1e-12));
        }
        prop_assert!((g.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn cvar_is_monotone_in_alpha(d in law(), a in 0.001f64..0.999, b in 0.001f64..0.999) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(cvar(&d, lo) <= cvar(&d, hi) + 1e-10);
        prop_assert!(var(&d, lo) <= var(&d, hi));
    }

    #[test]
    fn cvar_dominates_var_for_nonnegative_losses(d in law(), alpha in 0.001f64..0.999) {
        let shifted = d.affine(1.0, 1e3);
        let (v, c) = (var(&shifted, alpha), cvar(&shifted, alpha));
        prop_assert!(c >= v - 1e-9 && v >= 0.0);
    }

    #[test]
    fn homogeneous_and_translation_equivariant(d in law(), alpha in 0.001f64..0.999, c in 0.01f64..100.0, t in -1e3f64..1e3) {
        let base = cvar(&d, alpha);
        let moved = cvar(&d.affine(c, t), alpha);
        prop_assert!((moved - (c * base + t)).abs() <= 1e-9 * (1.0 + c * base.abs() + t.abs()));
    }

    #[test]
    fn empirical_versions_agree(xs in prop::collection::vec(-50.0f64..50.0, 1..300), alpha in 0.001f64..0.999) {
        let d = DiscreteDistribution::uniform(xs.clone()).unwrap();
        let mut s = xs.clone();
        prop_assert!((empirical_cvar(&mut s, alpha) - cvar(&d, alpha)).abs() <= 1e-9);
        let mut s = xs;
        prop_assert_eq!(empirical_var(&mut s, alpha), var(&d, alpha));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trapezoid_integral_of_var(d in law(), alpha in 0.01f64..0.99) {
        let n = 100_000;
        let h = (1.0 - alpha) / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            // Keep the right endpoint inside (0, 1).
            let xi = (alpha + i as f64 * h).min(1.0 - 1e-15);
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * var(&d, xi);
        }
        let integral = acc * h / (1.0 - alpha);
        let range = d.outcomes().iter().copied().fold(f64::NEG_INFINITY, f64::max) - d.outcomes().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!((integral - cvar(&d, alpha)).abs() <= 1e-4 * range.max(1.0));
    }
}
