use proptest::prelude::*;

use sccuc::{HighsOptions, HighsSolver};
use sccuc_core::lp::{dual_objective, verify_farkas, Row, Sense, SolverError, Variable};
use sccuc_core::{LinearProblem, LinearSolver, SolveStatus};

fn free(cost: f64) -> Variable {
    Variable::continuous(f64::NEG_INFINITY, f64::INFINITY, cost)
}

#[test]
fn min_x_over_x_ge_3() {
    let mut p = LinearProblem::new();
    let x = p.add_var(free(1.0));
    p.add_row(Row::new(vec![(x, 1.0)], Sense::Ge, 3.0));
    let out = HighsSolver::default().solve_lp(&p).unwrap();
    assert_eq!(out.status, SolveStatus::Optimal);
    assert!((out.objective - 3.0).abs() < 1e-9);
    assert!((out.duals.as_ref().unwrap()[0] - 1.0).abs() < 1e-9);
    assert!(out.farkas.is_none());
}

#[test]
fn contradictory_bounds_give_a_certificate() {
    let mut p = LinearProblem::new();
    let x = p.add_var(free(0.0));
    p.add_row(Row::new(vec![(x, 1.0)], Sense::Le, 1.0));
    p.add_row(Row::new(vec![(x, 1.0)], Sense::Ge, 2.0));
    let out = HighsSolver::default().solve_lp(&p).unwrap();
    assert_eq!(out.status, SolveStatus::Infeasible);
    assert!(out.duals.is_none());
    let ray = out.farkas.unwrap();
    assert!(verify_farkas(&p, &ray));
    let flipped: Vec<f64> = ray.iter().map(|v| -v).collect();
    assert!(!verify_farkas(&p, &flipped));
    assert!(!verify_farkas(&p, &[0.0, 0.0]));
}

#[test]
fn duplicate_rows_keep_strong_duality() {
    // min 2x + 3y  s.t.  x + y ≥ 4 (three copies), x - y ≤ 1, 0 ≤ x, y ≤ 10
    let mut p = LinearProblem::new();
    let x = p.add_var(Variable::continuous(0.0, 10.0, 2.0));
    let y = p.add_var(Variable::continuous(0.0, 10.0, 3.0));
    for _ in 0..3 {
        p.add_row(Row::new(vec![(x, 1.0), (y, 1.0)], Sense::Ge, 4.0));
    }
    p.add_row(Row::new(vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0));
    let out = HighsSolver::default().solve_lp(&p).unwrap();
    let duals = out.duals.unwrap();
    let d = dual_objective(&p, &duals);
    assert!((out.objective - 9.5).abs() < 1e-9);
    assert!((d - out.objective).abs() <= 1e-6 * out.objective.abs().max(1.0));
}

#[test]
fn integer_problem_is_rejected_by_solve_lp() {
    let mut p = LinearProblem::new();
    p.add_var(Variable::binary(1.0));
    assert!(matches!(
        HighsSolver::default().solve_lp(&p),
        Err(SolverError::NotLinear)
    ));
}

#[test]
fn three_item_knapsack_matches_enumeration() {
    let value = [10.0, 13.0, 7.0];
    let weight = [4.0, 6.0, 3.0];
    let cap = 9.0;
    let mut best = 0.0f64;
    for mask in 0..8u32 {
        let (mut v, mut w) = (0.0, 0.0);
        for k in 0..3 {
            if mask & (1 << k) != 0 {
                v += value[k];
                w += weight[k];
            }
        }
        if w <= cap {
            best = best.max(v);
        }
    }
    let mut p = LinearProblem::new();
    let xs: Vec<_> = value
        .iter()
        .map(|v| p.add_var(Variable::binary(-v)))
        .collect();
    p.add_row(Row::new(
        xs.iter().zip(weight).map(|(&x, w)| (x, w)).collect(),
        Sense::Le,
        cap,
    ));
    p.mip_gap = Some(0.0);
    let mut s = HighsSolver::default();
    let out = s.solve_milp(&p).unwrap();
    assert_eq!(out.status, SolveStatus::Optimal);
    assert!((out.objective + best).abs() < 1e-9);
    let relaxed = s.solve_lp(&p.relaxation()).unwrap();
    assert!(relaxed.objective <= out.objective + 1e-9);
}

#[test]
fn warm_start_does_not_change_the_optimum() {
    let mut p = LinearProblem::new();
    let xs: Vec<_> = (0..6)
        .map(|k| p.add_var(Variable::binary(-(k as f64 + 1.0))))
        .collect();
    p.add_row(Row::new(
        xs.iter().map(|&x| (x, 1.0)).collect(),
        Sense::Le,
        2.0,
    ));
    p.mip_gap = Some(0.0);
    let cold = HighsSolver::default().solve_milp(&p).unwrap();
    p.warm_start = Some(vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    let warm = HighsSolver::default().solve_milp(&p).unwrap();
    assert!((cold.objective + 11.0).abs() < 1e-9);
    assert_eq!(cold.objective, warm.objective);
}

#[test]
fn unbounded_lp_is_reported() {
    let mut p = LinearProblem::new();
    let x = p.add_var(free(-1.0));
    p.add_row(Row::new(vec![(x, 1.0)], Sense::Ge, 0.0));
    assert_eq!(
        HighsSolver::default().solve_lp(&p).unwrap().status,
        SolveStatus::Unbounded
    );
}

#[test]
fn solver_log_has_no_timings() {
    let mut p = LinearProblem::new();
    let x = p.add_var(free(1.0));
    p.add_row(Row::new(vec![(x, 1.0)], Sense::Ge, 3.0));
    let mut s = HighsSolver::new(HighsOptions::default());
    s.solve_lp(&p).unwrap();
    s.solve_lp(&p).unwrap();
    assert_eq!(s.log.lines.len(), 2);
    assert_eq!(
        s.log.lines[0].replace("solve 1", ""),
        s.log.lines[1].replace("solve 2", "")
    );
}

/// Random knapsack-like MILP with a gap target: the reported gap respects it
/// and the LP relaxation bounds the optimum.
fn milp_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>, f64)> {
    (3usize..9).prop_flat_map(|n| {
        (
            prop::collection::vec(1.0f64..20.0, n),
            prop::collection::vec(prop::collection::vec(0.5f64..10.0, n), 1..4),
            0.0f64..0.05,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn milp_gap_and_relaxation((value, weights, gap) in milp_strategy()) {
        let n = value.len();
        let mut p = LinearProblem::new();
        let xs: Vec<_> = value.iter().map(|v| p.add_var(Variable::binary(-v))).collect();
        for w in &weights {
            let cap = w.iter().sum::<f64>() / 2.0;
            p.add_row(Row::new(xs.iter().zip(w).map(|(&x, &c)| (x, c)).collect(), Sense::Le, cap));
        }
        p.mip_gap = Some(gap);
        let mut s = HighsSolver::default();
        let out = s.solve_milp(&p).unwrap();
        prop_assert!(out.status.has_solution());
        if out.status == SolveStatus::FeasibleWithinGap {
            prop_assert!(out.gap <= gap + 1e-9);
        }
        prop_assert!(p.max_violation(&out.primal) <= 1e-6);
        let lp = s.solve_lp(&p.relaxation()).unwrap();
        prop_assert!(lp.objective <= out.objective + 1e-7);
        {
            let mut best = 0.0f64;
            for mask in 0..(1u32 << n) {
                let pick = |k: usize| if mask & (1 << k) != 0 { 1.0 } else { 0.0 };
                let ok = weights.iter().all(|w| {
                    let cap = w.iter().sum::<f64>() / 2.0;
                    (0..n).map(|k| w[k] * pick(k)).sum::<f64>() <= cap + 1e-9
                });
                if ok {
                    best = best.max((0..n).map(|k| value[k] * pick(k)).sum());
                }
            }
            prop_assert!(-out.objective <= best + 1e-7);
            prop_assert!(-out.objective >= best * (1.0 - gap) - 1e-6);
        }
    }
}
