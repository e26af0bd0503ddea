use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wrongway_core::credit_model::LossSurface;
use wrongway_core::risk_measures::{cvar, cvar_by_tilting, DiscreteDistribution};
use wrongway_core::wcc::*;
use wrongway_core::CoreError;
use wrongway_testkit::{cvar_by_quantile_integral, full_program_by_enumeration, max_profit_flow, random_coupling, random_probs};

fn surface(values: Vec<f64>, p: Vec<f64>, q: Vec<f64>) -> LossSurface {
    LossSurface::new(values, p, q).unwrap()
}

fn random_surface(rng: &mut ChaCha8Rng, max_m: usize, max_n: usize) -> LossSurface {
    let m = rng.random_range(1..=max_m);
    let n = rng.random_range(1..=max_n);
    let p = random_probs(rng, m);
    let q = random_probs(rng, n);
    let values = (0..m * n).map(|_| rng.random_range(0.0..10.0)).collect();
    surface(values, p, q)
}

fn check_invariants(w: &WorstCaseCoupling, l: &LossSurface) {
    let (m, n) = (l.num_market(), l.num_credit());
    let alpha = w.alpha;
    assert!(w.psi.iter().all(|&v| v >= 0.0));
    for i in 0..m {
        let s: f64 = w.psi[i * n..(i + 1) * n].iter().sum();
        assert!((s - l.market_probs()[i]).abs() <= 1e-9, "row {i}");
    }
    for j in 0..n {
        let s: f64 = (0..m).map(|i| w.psi[i * n + j]).sum();
        assert!((s - l.credit_probs()[j]).abs() <= 1e-9, "col {j}");
    }
    for (mu, psi) in w.mu.iter().zip(&w.psi) {
        assert!(*mu >= 0.0 && *mu <= psi + 1e-12);
    }
    assert!((w.mu.iter().sum::<f64>() - (1.0 - alpha)).abs() <= 1e-9);
    let direct: f64 = l.values().iter().zip(&w.mu).map(|(a, b)| a * b).sum::<f64>() / (1.0 - alpha);
    assert!((w.wcc_cvar - direct).abs() <= 1e-9 * l.scale());
    assert_eq!(w.certificate.status, "optimal");
}

#[test]
fn anti_diagonal_gives_one() {
    let l = surface(vec![0.0, 1.0, 1.0, 0.0], vec![0.5, 0.5], vec![0.5, 0.5]);
    for f in [Formulation::Full, Formulation::Reduced, Formulation::Both] {
        let w = solve_wcc(&l, 0.5, f).unwrap();
        assert!((w.wcc_cvar - 1.0).abs() <= 1e-12, "{f:?}");
        check_invariants(&w, &l);
    }
    // One-parameter family psi = [[t, .5-t], [.5-t, t]]: the loss law puts
    // mass 1 - 2t on 1, so CVaR_0.5 = min(1, 2(1 - 2t)), maximized at t = 0.
    let best = (0..=500).map(|i| i as f64 / 1000.0).map(|t| coupling_cvar(&l, &[t, 0.5 - t, 0.5 - t, t], 0.5).unwrap()).fold(0.0, f64::max);
    assert_eq!(best, 1.0);
}

#[test]
fn separable_two_by_two_is_comonotone() {
    // L = y_m + z_n, y = z = (0, 1).
    let l = surface(vec![0.0, 1.0, 1.0, 2.0], vec![0.5, 0.5], vec![0.5, 0.5]);
    let w = solve_wcc(&l, 0.5, Formulation::Full).unwrap();
    assert!((w.wcc_cvar - 2.0).abs() <= 1e-12);
    let best = (0..=500).map(|i| i as f64 / 1000.0).map(|t| coupling_cvar(&l, &[t, 0.5 - t, 0.5 - t, t], 0.5).unwrap()).fold(0.0, f64::max);
    assert_eq!(best, 2.0);
}

#[test]
fn single_credit_cell_is_the_marginal_cvar() {
    let p = vec![0.1, 0.2, 0.3, 0.4];
    let values = vec![5.0, 1.0, 3.0, 2.0];
    let l = surface(values.clone(), p.clone(), vec![1.0]);
    for alpha in [0.3, 0.75, 0.95] {
        let w = solve_wcc(&l, alpha, Formulation::Both).unwrap();
        let want = cvar_by_quantile_integral(&values, &p, alpha);
        assert!((w.wcc_cvar - want).abs() <= 1e-12, "alpha {alpha}");
        assert!(w.psi.iter().zip(&p).all(|(a, b)| (a - b).abs() <= 1e-15));
    }
}

#[test]
fn fully_determined_one_by_one() {
    let l = surface(vec![3.25], vec![1.0], vec![1.0]);
    let w = solve_wcc(&l, 0.5, Formulation::Full).unwrap();
    assert_eq!((w.psi.clone(), w.mu.clone(), w.wcc_cvar), (vec![1.0], vec![0.5], 3.25));
}

#[test]
fn program_shapes() {
    let l = surface(vec![0.0, 1.0, 1.0, 0.0], vec![0.5, 0.5], vec![0.5, 0.5]);
    let full = build_full_lp(&l, 0.5).unwrap();
    assert_eq!((full.num_vars(), full.num_constraints()), (8, 9));
    let red = build_reduced_lp(&l, 0.5).unwrap();
    assert_eq!((red.num_vars(), red.num_constraints()), (4, 5));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let l = random_surface(&mut rng, 6, 6);
    let full = build_full_lp(&l, 0.9).unwrap();
    let (m, n) = (l.num_market(), l.num_credit());
    assert_eq!((full.num_vars(), full.num_constraints()), (2 * m * n, m + n + 1 + m * n));
    assert!(full.constraints().iter().all(|c| c.coeffs.iter().all(|&(_, a)| a == 1.0 || a == -1.0)));
    // Objective only on mu.
    assert!(full.objective()[..m * n].iter().all(|&c| c == 0.0));
    assert!(matches!(build_full_lp(&l, 1.0), Err(CoreError::Validation(_))));
}

#[test]
fn tiny_budget_goes_to_the_largest_loss() {
    let q = vec![0.2, 0.3, 0.5];
    let l = surface(vec![1.0, 4.0, 2.0, 3.0, 9.0, 0.5], vec![0.6, 0.4], q.clone());
    let alpha = 1.0 - 0.2 / 2.0;
    let w = solve_wcc(&l, alpha, Formulation::Reduced).unwrap();
    let support = w.mu_support(1e-15);
    assert_eq!(support, vec![(1, 1)]);
    assert!((w.wcc_cvar - 9.0).abs() <= 1e-12);
}

#[test]
fn extension_examples() {
    // 1 - alpha = 0.5 on one cell of a uniform 2 x 2 problem.
    let p = [0.5, 0.5];
    let q = [0.5, 0.5];
    let psi = extend_mu_to_psi(&[0.5, 0.0, 0.0, 0.0], &p, &q).unwrap();
    assert_eq!(psi, vec![0.5, 0.0, 0.0, 0.5]);
    let mu = [0.1, 0.4, 0.4, 0.1];
    assert_eq!(extend_mu_to_psi(&mu, &p, &q).unwrap(), mu.to_vec());
    assert!(extend_mu_to_psi(&[0.6, 0.0, 0.0, 0.0], &p, &q).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let l = random_surface(&mut rng, 6, 6);
        let alpha = rng.random_range(0.05..0.95);
        let mu = greedy_upper_start(&l, alpha).unwrap();
        let psi = extend_mu_to_psi(&mu, l.market_probs(), l.credit_probs()).unwrap();
        assert!(psi.iter().zip(&mu).all(|(a, b)| *a >= *b && *a >= 0.0));
    }
}

#[test]
fn greedy_examples() {
    // 1 x N: the row cap never binds before the total.
    let values = vec![4.0, 1.0, 7.0, 2.0];
    let q = vec![0.1, 0.4, 0.3, 0.2];
    let l = surface(values.clone(), vec![1.0], q.clone());
    for alpha in [0.2, 0.6, 0.9] {
        let mu = greedy_upper_start(&l, alpha).unwrap();
        let g: f64 = values.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>() / (1.0 - alpha);
        let opt = solve_wcc(&l, alpha, Formulation::Full).unwrap().wcc_cvar;
        assert!((g - opt).abs() <= 1e-12);
        assert!((g - cvar_by_quantile_integral(&values, &q, alpha)).abs() <= 1e-12);
    }
    let anti = surface(vec![0.0, 1.0, 1.0, 0.0], vec![0.5, 0.5], vec![0.5, 0.5]);
    assert_eq!(solve_wcc(&anti, 0.5, Formulation::Reduced).unwrap().certificate.greedy_cvar, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let m = 5;
        let l = surface((0..25).map(|_| rng.random_range(0.0..10.0)).collect(), random_probs(&mut rng, m), random_probs(&mut rng, m));
        let alpha = rng.random_range(0.05..0.95);
        let w = solve_wcc(&l, alpha, Formulation::Reduced).unwrap();
        assert!(w.certificate.greedy_cvar <= w.wcc_cvar + 1e-12);
    }
}

#[test]
fn matches_flow_oracle_and_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut enumerated = 0;
    for _ in 0..150 {
        let l = random_surface(&mut rng, 8, 8);
        let alpha = rng.random_range(0.01..0.99);
        let w = solve_wcc(&l, alpha, Formulation::Full).unwrap();
        check_invariants(&w, &l);
        let flow = max_profit_flow(l.values(), l.market_probs(), l.credit_probs(), 1.0 - alpha) / (1.0 - alpha);
        assert!((w.wcc_cvar - flow).abs() <= 1e-8 * l.scale(), "{} vs {flow}", w.wcc_cvar);
        if let Some(v) = full_program_by_enumeration(l.values(), l.market_probs(), l.credit_probs(), alpha, 50_000) {
            enumerated += 1;
            assert!((w.wcc_cvar - v).abs() <= 1e-8 * l.scale(), "{} vs {v}", w.wcc_cvar);
        }
    }
    assert!(enumerated >= 5, "only {enumerated} instances were small enough to enumerate");
}

#[test]
fn both_reports_agreement_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let l = random_surface(&mut rng, 6, 6);
    let w = solve_wcc(&l, 0.9, Formulation::Both).unwrap();
    assert!(w.certificate.agreement_gap.unwrap() <= 1e-8 * l.scale());
    assert_eq!(w.formulation, Formulation::Both);
}

#[test]
fn alpha_must_be_interior() {
    let l = surface(vec![1.0], vec![1.0], vec![1.0]);
    for a in [0.0, 1.0, -0.2, f64::NAN] {
        assert!(solve_wcc(&l, a, Formulation::Reduced).is_err());
    }
}

fn instance() -> impl Strategy<Value = (LossSurface, f64, u64)> {
    (any::<u64>(), 0.01f64..0.99).prop_map(|(seed, alpha)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (random_surface(&mut rng, 8, 8), alpha, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_and_reduced_agree((l, alpha, _) in instance()) {
        let f = solve_wcc(&l, alpha, Formulation::Full).unwrap();
        let r = solve_wcc(&l, alpha, Formulation::Reduced).unwrap();
        prop_assert!((f.wcc_cvar - r.wcc_cvar).abs() <= 1e-8 * l.scale());
        check_invariants(&r, &l);
    }

    #[test]
    fn worst_case_dominates_random_couplings((l, alpha, seed) in instance()) {
        let w = solve_wcc(&l, alpha, Formulation::Reduced).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..100 {
            let psi = random_coupling(&mut rng, l.market_probs(), l.credit_probs());
            prop_assert!(coupling_cvar(&l, &psi, alpha).unwrap() <= w.wcc_cvar + 1e-8 * l.scale());
        }
    }

    #[test]
    fn separable_losses_add(seed in any::<u64>(), alpha in 0.01f64..0.99) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(1..=8);
        let n = rng.random_range(1..=8);
        let (p, q) = (random_probs(&mut rng, m), random_probs(&mut rng, n));
        let a: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let l = LossSurface::from_fn(p.clone(), q.clone(), |i, j| a[i] + b[j]).unwrap();
        let w = solve_wcc(&l, alpha, Formulation::Reduced).unwrap();
        let want = cvar_by_quantile_integral(&a, &p, alpha) + cvar_by_quantile_integral(&b, &q, alpha);
        prop_assert!((w.wcc_cvar - want).abs() <= 1e-8 * l.scale());
    }

    #[test]
    fn tilting_reproduces_the_bound((l, alpha, _) in instance()) {
        let w = solve_wcc(&l, alpha, Formulation::Reduced).unwrap();
        let law = DiscreteDistribution::from_weights(l.values().to_vec(), &w.psi).unwrap();
        let (t, _) = cvar_by_tilting(&law, alpha);
        prop_assert!((t - w.wcc_cvar).abs() <= 1e-8 * l.scale());
        prop_assert!((cvar(&law, alpha) - w.wcc_cvar).abs() <= 1e-8 * l.scale());
    }

    #[test]
    fn positively_homogeneous((l, alpha, _) in instance(), c in 0.01f64..100.0) {
        let base = solve_wcc(&l, alpha, Formulation::Reduced).unwrap();
        let scaled = solve_wcc(&l.scaled(c), alpha, Formulation::Reduced).unwrap();
        prop_assert!((scaled.wcc_cvar - c * base.wcc_cvar).abs() <= 1e-8 * c * l.scale());
        prop_assert_eq!(scaled.mu_support(0.0), base.mu_support(0.0));
    }

    #[test]
    fn nondecreasing_in_alpha((l, _, _) in instance()) {
        let mut last = f64::NEG_INFINITY;
        for alpha in [0.5, 0.9, 0.95, 0.99] {
            let v = solve_wcc(&l, alpha, Formulation::Reduced).unwrap().wcc_cvar;
            prop_assert!(v >= last - 1e-9 * l.scale());
            last = v;
        }
    }
}
