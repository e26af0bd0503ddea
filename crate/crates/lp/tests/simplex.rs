use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wrongway_lp::{check_certificate, mps, solve, LinearProgram, Sense, SolveOptions, Status};

/// Dense Gaussian elimination with partial pivoting; `None` if singular.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-10 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let l = a[i][k] / a[k][k];
            if l != 0.0 {
                for j in k..n {
                    a[i][j] -= l * a[k][j];
                }
                b[i] -= l * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Brute-force optimum of `max c'x, rows, x >= 0` (no finite upper bounds)
/// by enumerating every basis of the slack-augmented system. Returns `None`
/// when no basis is feasible. Rows must be linearly independent.
fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    let m = lp.num_constraints();
    let mut cols: Vec<Vec<f64>> = vec![vec![0.0; m]; n];
    let mut cost = lp.objective().to_vec();
    for (i, row) in lp.constraints().iter().enumerate() {
        for &(j, a) in &row.coeffs {
            cols[j][i] += a;
        }
    }
    for (i, row) in lp.constraints().iter().enumerate() {
        let sign = match row.sense {
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
            Sense::Eq => continue,
        };
        let mut c = vec![0.0; m];
        c[i] = sign;
        cols.push(c);
        cost.push(0.0);
    }
    let b: Vec<f64> = lp.constraints().iter().map(|r| r.rhs).collect();
    let mut best: Option<f64> = None;
    combinations(cols.len(), m, &mut |basis| {
        let a: Vec<Vec<f64>> = (0..m).map(|i| basis.iter().map(|&j| cols[j][i]).collect()).collect();
        if let Some(xb) = dense_solve(a, b.clone()) {
            if xb.iter().all(|&v| v >= -1e-9) {
                let obj: f64 = basis.iter().zip(&xb).map(|(&j, &v)| cost[j] * v).sum();
                best = Some(best.map_or(obj, |o: f64| o.max(obj)));
            }
        }
    });
    best
}

fn two_var_lp() -> LinearProgram {
    let mut lp = LinearProgram::new(2);
    lp.set_objective(0, 1.0);
    lp.set_objective(1, 2.0);
    lp.set_bounds(0, 0.0, 1.0);
    lp.set_bounds(1, 0.0, 1.0);
    lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0);
    lp
}

#[test]
fn hand_solvable_two_variable_lp() {
    let sol = solve(&two_var_lp(), &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective_value - 2.0).abs() < 1e-12);
    assert!(sol.primal[0].abs() < 1e-12 && (sol.primal[1] - 1.0).abs() < 1e-12);
}

#[test]
fn contradictory_equalities_are_infeasible() {
    let mut lp = LinearProgram::new(1);
    lp.set_objective(0, 1.0);
    lp.add_constraint(vec![(0, 1.0)], Sense::Eq, 1.0);
    lp.add_constraint(vec![(0, 1.0)], Sense::Eq, 2.0);
    let sol = solve(&lp, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Infeasible);
}

#[test]
fn open_direction_is_unbounded() {
    let mut lp = LinearProgram::new(2);
    lp.set_objective(0, 1.0);
    lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Sense::Le, 1.0);
    let sol = solve(&lp, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Unbounded);
}

#[test]
fn two_by_two_transportation_maximum() {
    // psi = [[t, .5 - t], [.5 - t, t]], objective 2 (.5 - t): vertices t = 0 and
    // t = .5 give 1.0 and 0.0.
    let mut lp = LinearProgram::new(4);
    let cost = [0.0, 1.0, 1.0, 0.0];
    for (j, c) in cost.iter().enumerate() {
        lp.set_objective(j, *c);
    }
    lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 0.5);
    lp.add_constraint(vec![(2, 1.0), (3, 1.0)], Sense::Eq, 0.5);
    lp.add_constraint(vec![(0, 1.0), (2, 1.0)], Sense::Eq, 0.5);
    lp.add_constraint(vec![(1, 1.0), (3, 1.0)], Sense::Eq, 0.5);
    let sol = solve(&lp, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective_value - 1.0).abs() < 1e-12);
    let report = check_certificate(&lp, &sol.primal, &sol.dual);
    assert!(report.is_optimal(1e-9, 1e-8), "{report:?}");
}

#[test]
fn ge_rows_and_negative_lower_bounds() {
    // max -x - y, x + y >= 2, x in [-1, 3], y in [0.5, inf) -> x + y = 2, obj -2.
    let mut lp = LinearProgram::new(2);
    lp.set_objective(0, -1.0);
    lp.set_objective(1, -1.0);
    lp.set_bounds(0, -1.0, 3.0);
    lp.set_bounds(1, 0.5, f64::INFINITY);
    lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 2.0);
    let sol = solve(&lp, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective_value + 2.0).abs() < 1e-12);
    assert!(sol.dual[0] <= 0.0);
    assert!(check_certificate(&lp, &sol.primal, &sol.dual).is_optimal(1e-9, 1e-8));
}

#[test]
fn free_variable_is_priced_both_ways() {
    // max -x s.t. x >= -4 as a row, x free -> x = -4.
    let mut lp = LinearProgram::new(1);
    lp.set_objective(0, -1.0);
    lp.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
    lp.add_constraint(vec![(0, 1.0)], Sense::Ge, -4.0);
    let sol = solve(&lp, &SolveOptions::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.primal[0] + 4.0).abs() < 1e-12);
}

#[test]
fn beale_cycling_example_terminates() {
    // Beale's LP cycles under textbook Dantzig pricing without anti-cycling.
    let mut lp = LinearProgram::new(4);
    for (j, c) in [0.75, -150.0, 0.02, -6.0].iter().enumerate() {
        lp.set_objective(j, *c);
    }
    lp.add_constraint(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Sense::Le, 0.0);
    lp.add_constraint(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Sense::Le, 0.0);
    lp.add_constraint(vec![(2, 1.0)], Sense::Le, 1.0);
    let opts = SolveOptions { bland_after: 3, ..SolveOptions::default() };
    let sol = solve(&lp, &opts).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective_value - 0.05).abs() < 1e-10);
}

#[test]
fn iteration_limit_is_a_status() {
    let opts = SolveOptions { max_iters: 0, ..SolveOptions::default() };
    let sol = solve(&two_var_lp(), &opts).unwrap();
    assert_eq!(sol.status, Status::IterationLimit);
}

#[test]
fn malformed_input_is_an_error() {
    let mut lp = LinearProgram::new(1);
    lp.add_constraint(vec![(3, 1.0)], Sense::Le, 1.0);
    assert!(solve(&lp, &SolveOptions::default()).is_err());
}

#[test]
fn solver_gap_matches_independent_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let lp = random_lp(&mut rng, 6, 5);
        let sol = solve(&lp, &SolveOptions::default()).unwrap();
        if sol.status != Status::Optimal {
            continue;
        }
        let report = check_certificate(&lp, &sol.primal, &sol.dual);
        assert!((report.gap - sol.duality_gap).abs() < 1e-12, "{} vs {}", report.gap, sol.duality_gap);
        assert!(report.primal_residual() <= 1e-9);
    }
}

fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LinearProgram {
    let mut lp = LinearProgram::new(n);
    for j in 0..n {
        lp.set_objective(j, rng.random_range(-1.0..1.0));
    }
    for _ in 0..m {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.7) {
                coeffs.push((j, rng.random_range(-1.0..2.0)));
            }
        }
        let sense = match rng.random_range(0..6) {
            0 => Sense::Ge,
            1 => Sense::Eq,
            _ => Sense::Le,
        };
        let rhs = match sense {
            Sense::Le => rng.random_range(0.0..3.0),
            Sense::Ge => rng.random_range(-1.0..0.5),
            Sense::Eq => rng.random_range(0.0..1.0),
        };
        lp.add_constraint(coeffs, sense, rhs);
    }
    // Keeps the region bounded.
    lp.add_constraint((0..n).map(|j| (j, 1.0)).collect(), Sense::Le, 10.0);
    lp
}

#[test]
fn random_dense_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut optimal = 0;
    for case in 0..150 {
        let n = rng.random_range(1..=10);
        let m = rng.random_range(1..=9);
        let lp = random_lp(&mut rng, n, m);
        let sol = solve(&lp, &SolveOptions::default()).unwrap();
        match vertex_enumeration(&lp) {
            Some(best) => {
                assert_eq!(sol.status, Status::Optimal, "case {case}");
                assert!((sol.objective_value - best).abs() <= 1e-8, "case {case}: {} vs {best}", sol.objective_value);
                optimal += 1;
            }
            None => assert_eq!(sol.status, Status::Infeasible, "case {case}"),
        }
    }
    assert!(optimal > 50);
}

#[test]
fn mps_export_reimports_to_the_same_optimum() {
    let lp = two_var_lp();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("two.mps");
    wrongway_lp::export_mps(&lp, &path, "TWOVAR").unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    for section in ["ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"] {
        assert!(text.lines().any(|l| l == section), "missing {section}");
    }
    assert!(text.starts_with("* objective sense: MAXIMIZE"));
    let back = mps::read_mps(text.as_bytes()).unwrap();
    assert_eq!(back, lp);
    let sol = solve(&back, &SolveOptions::default()).unwrap();
    assert!((sol.objective_value - 2.0).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_scaling_scales_value_and_keeps_primal(seed in any::<u64>(), factor in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lp = random_lp(&mut rng, 5, 4);
        let base = solve(&lp, &SolveOptions::default()).unwrap();
        prop_assume!(base.status == Status::Optimal);
        let mut scaled = lp.clone();
        scaled.scale_objective(factor);
        let sol = solve(&scaled, &SolveOptions::default()).unwrap();
        prop_assert_eq!(sol.status, Status::Optimal);
        prop_assert!((sol.objective_value - factor * base.objective_value).abs() <= 1e-9 * (1.0 + factor));
        for (a, b) in sol.primal.iter().zip(&base.primal) {
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
        }
    }
}
