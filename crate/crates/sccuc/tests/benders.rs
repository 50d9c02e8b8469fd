mod common;

use sccuc::fixtures;
use sccuc_core::benders::{
    screen_line_contingencies, solve_extensive, solve_sccuc, verify_solution, BendersError,
};
use sccuc_core::{ChanceSpec, CommitmentSolution, Instance};

use common::{exact, instance, rel, solver};

fn check_solution(inst: &Instance, sol: &CommitmentSolution) {
    let c = &sol.costs;
    assert!(rel(c.component_sum(), c.total) < 1e-9, "{c:?}");
    assert!(rel(sol.objective, c.total) < 1e-9);
    let hourly: f64 = sol.hourly_costs.iter().map(|h| h.total).sum();
    assert!(rel(hourly, c.total) < 1e-9);
    assert!(sol.participation_error() < 1e-6);
    assert!(sol.balance_error(&inst.case) < 1e-6);
    assert!(sol.matches_case(&inst.case));
}

#[test]
fn decomposition_matches_extensive_form() {
    let mut cases = fixtures::oracle_cases();
    cases.push(fixtures::single_line_contingency());
    cases.push(fixtures::binding_base_line());
    for case in cases {
        let inst = instance(case);
        let b = solve_sccuc(&mut solver(), &inst, &exact()).unwrap();
        let e = solve_extensive(&mut solver(), &inst, &exact()).unwrap();
        let d = rel(b.solution.objective, e.solution.objective);
        assert!(
            d <= 1e-4,
            "{}: {} vs {}",
            inst.case.name,
            b.solution.objective,
            e.solution.objective
        );
        check_solution(&inst, &b.solution);
        check_solution(&inst, &e.solution);
        assert!(verify_solution(&inst, &b.solution, 1e-5)
            .unwrap()
            .is_empty());
    }
}

#[test]
fn bounds_and_outer_objectives_never_decrease() {
    let mut cases = fixtures::oracle_cases();
    cases.push(fixtures::single_line_contingency());
    for case in cases {
        let inst = instance(case);
        let opts = exact();
        let r = solve_sccuc(&mut solver(), &inst, &opts).unwrap();
        for w in r.state.log.windows(2) {
            assert!(w[1].lower_bound >= w[0].lower_bound, "{}", inst.case.name);
        }
        for rec in &r.state.log {
            if let Some(ub) = rec.upper_bound {
                assert!(rec.lower_bound <= ub + 1e-6 * ub.abs().max(1.0));
            }
        }
        for w in r.state.outer_log.windows(2) {
            let slack = opts.gap * w[0].objective.abs().max(1.0);
            assert!(
                w[1].objective >= w[0].objective - slack,
                "{}",
                inst.case.name
            );
        }
    }
}

#[test]
fn no_generator_contingencies_need_one_inner_iteration() {
    let inst = instance(fixtures::binding_base_line());
    let r = solve_sccuc(&mut solver(), &inst, &exact()).unwrap();
    assert_eq!(r.state.inner_iterations, 1);
    assert!(r.state.optimality_cuts.is_empty());
    assert!(r.state.feasibility_cuts.is_empty());
    assert_eq!(r.solution.total_tertiary_reserve(), 0.0);
    assert_eq!(r.solution.costs.tertiary_reserve, 0.0);
}

#[test]
fn no_line_contingencies_need_one_outer_iteration() {
    let inst = instance(fixtures::binding_base_line());
    let r = solve_sccuc(&mut solver(), &inst, &exact()).unwrap();
    assert_eq!(r.state.outer_iterations, 1);
    assert!(r.state.activated.is_empty());
}

#[test]
fn one_binding_contingency_takes_two_outer_iterations() {
    let inst = instance(fixtures::single_line_contingency());
    let r = solve_sccuc(&mut solver(), &inst, &exact()).unwrap();
    assert_eq!(r.state.outer_iterations, 2);
    assert_eq!(r.state.outer_log[0].violated_lines, 1);
    assert!(!r.state.activated.is_empty());
    assert!(r
        .state
        .activated
        .iter()
        .all(|k| k.line == 0 && k.outage == 2));
    let rescreen = screen_line_contingencies(&inst, &r.solution, 1e-6).unwrap();
    assert!(rescreen.is_empty());
    assert!(r.state.outer_log[1].objective > r.state.outer_log[0].objective);
}

#[test]
fn tighter_risk_never_lowers_the_optimum() {
    let base = fixtures::oracle_ring3();
    let mut first = None;
    let mut last = f64::NEG_INFINITY;
    for eps in [0.3, 0.2, 0.1, 0.05, 0.02] {
        let inst = Instance::new(base.clone(), ChanceSpec::uniform(eps, eps, eps)).unwrap();
        let obj = solve_sccuc(&mut solver(), &inst, &exact())
            .unwrap()
            .solution
            .objective;
        assert!(obj >= last - 1e-6 * obj.abs(), "eps {eps}: {obj} < {last}");
        first.get_or_insert(obj);
        last = obj;
    }
    assert!(last > first.unwrap());
}

#[test]
fn overloaded_case_is_infeasible() {
    let inst = instance(fixtures::overloaded());
    assert!(matches!(
        solve_sccuc(&mut solver(), &inst, &exact()),
        Err(BendersError::Infeasible)
    ));
    assert!(matches!(
        solve_extensive(&mut solver(), &inst, &exact()),
        Err(BendersError::Infeasible)
    ));
}

#[test]
fn inner_cap_is_reported() {
    let inst = instance(fixtures::oracle_ring4());
    let opts = sccuc_core::BendersOptions {
        max_inner: 1,
        ..exact()
    };
    match solve_sccuc(&mut solver(), &inst, &opts) {
        Err(BendersError::InnerLimit { iterations, .. }) => assert_eq!(iterations, 1),
        Ok(r) => assert_eq!(r.state.inner_iterations, 1),
        Err(e) => panic!("{e}"),
    }
}
