use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wrongway_core::credit_model::*;
use wrongway_core::portfolio_data::{Counterparty, ExposureMatrix};
use wrongway_core::CoreError;

fn cp(id: &str, pd: f64, rho: f64) -> Counterparty {
    Counterparty::new(id, pd, rho).unwrap()
}

#[test]
fn grid_examples() {
    let g = build_credit_grid(1, -5.0, 5.0).unwrap();
    assert_eq!((g.cell_probs(), g.cell_reps()), (&[1.0][..], &[0.0][..]));
    let g = build_credit_grid(2, -5.0, 5.0).unwrap();
    assert_eq!(g.cell_probs(), &[0.5, 0.5][..]);
    let g = build_credit_grid(1000, -5.0, 5.0).unwrap();
    assert_eq!(g.cell_probs().iter().fold(0.0, |a, b| a + b), 1.0);
    let max_interior = g.cell_probs()[1..999].iter().copied().fold(0.0, f64::max);
    // With an even cell count 0 is a boundary, so the widest-mass cells are
    // [0, 0.01] and its mirror: Phi(0.01) - Phi(0) offline. That is within
    // 1.3e-5 relative of a cell centred on 0, Phi(0.005) - Phi(-0.005).
    assert!((max_interior - 0.00398935631463160378).abs() <= 1e-14, "{max_interior}");
    assert!((max_interior / 0.00398940618148164468 - 1.0).abs() <= 2e-5);
    assert!(matches!(build_credit_grid(0, -5.0, 5.0), Err(CoreError::Validation(_))));
    assert!(build_credit_grid(3, 1.0, 1.0).is_err());
}

#[test]
fn grid_mass_is_exactly_one_up_to_5000_cells() {
    for n in 1..=5000 {
        let g = build_credit_grid(n, -5.0, 5.0).unwrap();
        let s = g.cell_probs().iter().fold(0.0, |a, b| a + b);
        assert_eq!(s, 1.0, "n={n}");
        assert!(g.cell_probs().iter().all(|&q| q > 0.0));
        assert!(g.interior_points().windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn cell_representatives_are_conditional_means() {
    let g = build_credit_grid(7, -3.0, 4.0).unwrap();
    for n in 0..7 {
        let (a, b) = g.cell_bounds(n);
        // Trapezoid on the truncated density, tails cut at +-12.
        let (lo, hi) = (a.max(-12.0), b.min(12.0));
        let steps = 200_000;
        let h = (hi - lo) / steps as f64;
        let (mut mass, mut first) = (0.0, 0.0);
        for i in 0..=steps {
            let z = lo + i as f64 * h;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 } * h * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
            mass += w;
            first += w * z;
        }
        assert!((g.cell_probs()[n] - mass).abs() < 1e-10, "cell {n}");
        assert!((g.cell_reps()[n] - first / mass).abs() < 1e-8, "cell {n}");
        assert!(a < g.cell_reps()[n] && g.cell_reps()[n] < b);
    }
}

#[test]
fn conditional_pd_examples() {
    for z in [-3.0, 0.0, 2.5] {
        assert_eq!(conditional_pd(&cp("a", 0.5, 0.0), z), 0.5);
    }
    assert_eq!(conditional_pd(&cp("a", 0.5, 0.5), 0.0), 0.5);
    // Phi((Phi^{-1}(0.1) + 2 sqrt(0.2)) / sqrt(0.8)) computed offline.
    let v = conditional_pd(&cp("a", 0.1, 0.2), -2.0);
    assert!((v - 0.3325).abs() <= 5e-4);
    assert!((v - 0.332573421973800161813).abs() <= 1e-15);
}

#[test]
fn surface_examples() {
    let x = ExposureMatrix::with_uniform_probs(vec!["a".into()], vec![vec![10.0, 10.0, 10.0]]).unwrap();
    let grid = build_credit_grid(4, -5.0, 5.0).unwrap();
    let l = systematic_loss_surface(&x, &[cp("a", 0.5, 0.0)], &grid).unwrap();
    assert!(l.values().iter().all(|&v| v == 5.0));
    assert!(systematic_loss_surface(&x, &[cp("b", 0.5, 0.0)], &grid).is_err());

    let x = ExposureMatrix::with_uniform_probs(vec!["a".into(), "b".into()], vec![vec![1.0, 3.0], vec![2.5, 0.5]]).unwrap();
    let cps = [cp("a", 0.02, 0.3).with_lgd(0.6).unwrap(), cp("b", 0.1, 0.15)];
    let both = systematic_loss_surface(&x, &cps, &grid).unwrap();
    for n in 0..4 {
        for m in 0..2 {
            let z = grid.cell_reps()[n];
            let want = 0.6 * x.get(0, m) * conditional_pd(&cps[0], z) + x.get(1, m) * conditional_pd(&cps[1], z);
            assert_eq!(both.get(m, n), want);
        }
    }
    // Monotone nonincreasing along rows.
    for m in 0..2 {
        assert!(both.row(m).windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn two_counterparty_surface_is_sum_of_singles() {
    let grid = build_credit_grid(9, -4.0, 4.0).unwrap();
    let rows = vec![vec![1.5, 0.0, 7.0], vec![2.0, 4.0, 0.25]];
    let cps = [cp("a", 0.03, 0.2), cp("b", 0.2, 0.05).with_lgd(0.4).unwrap()];
    let x = ExposureMatrix::with_uniform_probs(vec!["a".into(), "b".into()], rows.clone()).unwrap();
    let both = systematic_loss_surface(&x, &cps, &grid).unwrap();
    let single = |k: usize| {
        let x = ExposureMatrix::with_uniform_probs(vec![cps[k].id.clone()], vec![rows[k].clone()]).unwrap();
        systematic_loss_surface(&x, &cps[k..=k], &grid).unwrap()
    };
    let (sa, sb) = (single(0), single(1));
    for i in 0..both.values().len() {
        assert_eq!(both.values()[i], sa.values()[i] + sb.values()[i]);
    }
}

#[test]
fn cwi_and_default_examples() {
    assert_eq!(cwi(1.7, -0.3, 0.0), -0.3);
    assert_eq!(cwi(2.0, 0.0, 0.25), 1.0);
    let pd = norm_cdf(6.0);
    for (z, e) in [(3.0, 3.0), (-2.0, 4.0), (4.0, 4.0)] {
        assert!(is_default(cwi(z, e, 0.3), pd));
    }
}

#[test]
fn total_loss_examples() {
    let cps = [cp("a", 0.05, 0.2), cp("b", 0.1, 0.3).with_lgd(0.5).unwrap()];
    assert_eq!(total_loss(&[4.0, 6.0], &cps, 0.0, &[10.0, 10.0]).unwrap(), 0.0);
    let sure = [cp("a", 1.0 - 1e-12, 0.2).with_lgd(0.7).unwrap(), cp("b", 1.0 - 1e-12, 0.3).with_lgd(0.5).unwrap()];
    assert_eq!(total_loss(&[4.0, 6.0], &sure, 0.5, &[0.1, -0.2]).unwrap(), 0.7 * 4.0 + 0.5 * 6.0);
    // a: sqrt(.2)(-1) + sqrt(.8)(-1.5) = -1.789 <= -1.645 defaults;
    // b: sqrt(.3)(-1) + sqrt(.7)(0) = -0.548 > -1.28 survives.
    assert_eq!(total_loss(&[4.0, 6.0], &cps, -1.0, &[-1.5, 0.0]).unwrap(), 4.0);
    assert!(total_loss(&[4.0], &cps, 0.0, &[0.0, 0.0]).is_err());
    let model = DefaultModel::new(&cps);
    let eps = [-1.5, 0.0];
    assert_eq!(model.total_loss(&[4.0, 6.0], -1.0, |k| eps[k]), 4.0);
}

#[test]
fn basel_examples() {
    let b = BaselInputs::new(100.0, 1.0, 0.01, 0.2);
    let v = basel_capital(&b).unwrap();
    assert!((v - 14.55).abs() <= 0.05);
    // 100 Phi((Phi^{-1}(.01) + sqrt(.2) Phi^{-1}(.999)) / sqrt(.8)) offline.
    assert!((v - 14.5525266131071333414).abs() <= 1e-12);
    let flat = basel_capital(&BaselInputs::new(250.0, 0.4, 0.03, 0.0)).unwrap();
    assert!((flat - 250.0 * 0.4 * 0.03).abs() <= 1e-13);
    assert_eq!(basel_capital(&BaselInputs::new(100.0, 0.0, 0.01, 0.2)).unwrap(), 0.0);
    assert!(matches!(basel_capital(&BaselInputs::new(1.0, 1.0, 0.01, 1.0)), Err(CoreError::Domain(_))));
    let ma = BaselInputs { maturity_adjustment: 1.5, ..b };
    assert!((basel_capital(&ma).unwrap() - 1.5 * v).abs() <= 1e-12);
}

#[test]
fn monte_carlo_defaults_average_to_conditional_pd() {
    let cps = [cp("a", 0.05, 0.25), cp("b", 0.2, 0.4).with_lgd(0.6).unwrap(), cp("c", 0.01, 0.1)];
    let y = [3.0, 1.0, 10.0];
    let model = DefaultModel::new(&cps);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for z in [-2.5, -0.7, 0.0, 1.3] {
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let l = model.total_loss(&y, z, |_| rng.sample(StandardNormal));
            s += l;
            s2 += l * l;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        let exact = model.systematic_loss(&y, z);
        assert!((mean - exact).abs() <= 3.0 * se, "z={z}: {mean} vs {exact} (se {se})");
    }
}

proptest! {
    #[test]
    fn conditional_pd_is_monotone_and_in_range(pd in 1e-4f64..0.999, rho in 0.0f64..0.99, z1 in -8.0f64..8.0, dz in 0.0f64..4.0) {
        let c = cp("a", pd, rho);
        let (a, b) = (conditional_pd(&c, z1), conditional_pd(&c, z1 + dz));
        prop_assert!(b <= a);
        prop_assert!((0.0..=1.0).contains(&a));
        if rho == 0.0 {
            prop_assert_eq!(a, pd);
        }
    }

    #[test]
    fn grid_integrates_conditional_pd_to_pd(pd in 1e-3f64..0.5, rho in 0.0f64..0.6) {
        let g = build_credit_grid(400, -5.0, 5.0).unwrap();
        let c = cp("a", pd, rho);
        let total: f64 = g.cell_probs().iter().zip(g.cell_reps()).map(|(q, z)| q * conditional_pd(&c, *z)).sum();
        prop_assert!((total - pd).abs() <= 1e-4);
    }

    #[test]
    fn surface_is_linear_in_exposures(
        a in prop::collection::vec(0.0f64..1e6, 8),
        b in prop::collection::vec(0.0f64..1e6, 8),
        pd in 1e-3f64..0.3, rho in 0.0f64..0.5,
    ) {
        let grid = build_credit_grid(12, -5.0, 5.0).unwrap();
        let cps = [cp("a", pd, rho), cp("b", pd * 0.5, rho * 0.5)];
        let surf = |r0: Vec<f64>, r1: Vec<f64>| {
            let x = ExposureMatrix::with_uniform_probs(vec!["a".into(), "b".into()], vec![r0, r1]).unwrap();
            systematic_loss_surface(&x, &cps, &grid).unwrap()
        };
        let s1 = surf(a[..4].to_vec(), a[4..].to_vec());
        let s2 = surf(b[..4].to_vec(), b[4..].to_vec());
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let s12 = surf(sum[..4].to_vec(), sum[4..].to_vec());
        for i in 0..s12.values().len() {
            let want = s1.values()[i] + s2.values()[i];
            prop_assert!((s12.values()[i] - want).abs() <= 1e-12 * want.max(1e-300));
        }
    }
}
